//! Deterministic local strategies and the convex-combination (CC) attack
//! linear program.
//!
//! Eve reproduces the observed table as `Σ_i q_i D_i + q_NL p_NL`, where
//! `D_i` are deterministic-strategy tables. The LP maximizes the local
//! weight `Σ_i q_i`. Every setting, key settings included, is constrained.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scenario::{CorrelationTable, Scenario};
use crate::simplex::{self, Basis, ColumnSource, SimplexOptions};

/// Default limit on `d^(nA+nB)`.
pub const DEFAULT_STRATEGY_CAP: u64 = 1_000_000;

/// Weights above `-WEIGHT_CLAMP` are reported as non-negative.
const WEIGHT_CLAMP: f64 = 1e-10;

/// Output functions `x ↦ fA(x)`, `y ↦ fB(y)` with 1-based values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    pub f_a: Vec<usize>,
    pub f_b: Vec<usize>,
}

impl DeterministicStrategy {
    /// Mixed-radix id: digits `fA(1)−1, …, fA(nA)−1, fB(1)−1, …, fB(nB)−1`,
    /// most significant first.
    pub fn id(&self, d: usize) -> u64 {
        self.f_a
            .iter()
            .chain(&self.f_b)
            .fold(0u64, |acc, &v| acc * d as u64 + (v as u64 - 1))
    }

    pub fn decode(id: u64, scenario: &Scenario) -> Result<Self> {
        let count = strategy_count(scenario);
        if id as u128 >= count {
            return Err(Error::OutOfRange {
                what: "strategy id",
                value: id as i64,
                min: 0,
                max: (count - 1).min(i64::MAX as u128) as i64,
            });
        }
        let d = scenario.d() as u64;
        let k = scenario.n_a() + scenario.n_b();
        let mut digits = vec![0usize; k];
        let mut rest = id;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % d) as usize + 1;
            rest /= d;
        }
        let f_b = digits.split_off(scenario.n_a());
        Ok(DeterministicStrategy { f_a: digits, f_b })
    }
}

/// `d^(nA + nB)`
pub fn strategy_count(scenario: &Scenario) -> u128 {
    (scenario.d() as u128).pow((scenario.n_a() + scenario.n_b()) as u32)
}

fn check_cap(scenario: &Scenario, cap: u64) -> Result<u64> {
    let count = strategy_count(scenario);
    if count > cap as u128 {
        return Err(Error::StrategyCap { count, cap });
    }
    Ok(count as u64)
}

/// All deterministic strategies in increasing id order.
pub fn enumerate_strategies(scenario: &Scenario, cap: u64) -> Result<impl Iterator<Item = DeterministicStrategy> + '_> {
    let count = check_cap(scenario, cap)?;
    Ok((0..count).map(move |id| DeterministicStrategy::decode(id, scenario).expect("id below count")))
}

/// Indicator table `p(a,b|x,y) = [a = fA(x)] [b = fB(y)]`.
pub fn strategy_table(s: &DeterministicStrategy, scenario: Scenario) -> CorrelationTable {
    CorrelationTable::from_fn(scenario, |a, b, x, y| {
        if s.f_a[x - 1] == a && s.f_b[y - 1] == b {
            1.0
        } else {
            0.0
        }
    })
}

/// Eve's mixture. Only the local total `q_l` is unique at degenerate
/// optima; individual weights are one maximizing vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct CcDecomposition {
    pub weights: BTreeMap<u64, f64>,
    pub q_nl: f64,
    pub q_l: f64,
    /// `max |observed − reconstruction|` reported by the solver.
    pub residual: f64,
}

impl CcDecomposition {
    pub fn reconstruct(&self, scenario: Scenario, p_nl: &CorrelationTable) -> Result<CorrelationTable> {
        let mut p: Vec<f64> = p_nl.as_slice().iter().map(|v| v * self.q_nl).collect();
        for (&id, &w) in &self.weights {
            let s = DeterministicStrategy::decode(id, &scenario)?;
            for x in 0..scenario.n_a() {
                for y in 0..scenario.n_b() {
                    p[scenario.index0(s.f_a[x] - 1, s.f_b[y] - 1, x, y)] += w;
                }
            }
        }
        CorrelationTable::from_vec(scenario, p)
    }

    /// One `strategy_id weight` row per nonzero weight, then `NL weight`.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        for (id, w) in &self.weights {
            let _ = writeln!(out, "{id} {w:.15e}");
        }
        let _ = writeln!(out, "NL {:.15e}", self.q_nl);
        out
    }
}

/// LP columns: one per strategy, plus an optional nonlocal column. Rows are
/// the table entries followed by the total-weight row.
struct CcColumns<'a> {
    scenario: Scenario,
    /// Table index hit by strategy `j` in block `(x, y)`, at `j * width + x * nB + y`.
    entries: Vec<u32>,
    width: usize,
    strategies: usize,
    nonlocal: Option<&'a [f64]>,
    objective: bool,
}

impl<'a> CcColumns<'a> {
    fn new(scenario: Scenario, cap: u64, nonlocal: Option<&'a [f64]>, objective: bool) -> Result<Self> {
        let count = check_cap(&scenario, cap)? as usize;
        let (d, n_a, n_b) = (scenario.d(), scenario.n_a(), scenario.n_b());
        let width = n_a * n_b;
        let mut entries = vec![0u32; count * width];
        let mut digits = vec![0usize; n_a + n_b];
        for id in 0..count {
            let mut rest = id;
            for slot in digits.iter_mut().rev() {
                *slot = rest % d;
                rest /= d;
            }
            for x in 0..n_a {
                for y in 0..n_b {
                    entries[id * width + x * n_b + y] = scenario.index0(digits[x], digits[n_a + y], x, y) as u32;
                }
            }
        }
        Ok(CcColumns {
            scenario,
            entries,
            width,
            strategies: count,
            nonlocal,
            objective,
        })
    }

    fn norm_row(&self) -> usize {
        self.scenario.num_entries()
    }

    #[inline]
    fn entries_of(&self, j: usize) -> &[u32] {
        &self.entries[j * self.width..(j + 1) * self.width]
    }
}

impl ColumnSource for CcColumns<'_> {
    fn num_rows(&self) -> usize {
        self.scenario.num_entries() + 1
    }

    fn num_cols(&self) -> usize {
        self.strategies + usize::from(self.nonlocal.is_some())
    }

    fn column(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        if j < self.strategies {
            out.extend(self.entries_of(j).iter().map(|&i| (i as usize, 1.0)));
        } else if let Some(p) = self.nonlocal {
            out.extend(p.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)));
        }
        out.push((self.norm_row(), 1.0));
    }

    fn cost(&self, j: usize) -> f64 {
        if self.objective && j < self.strategies {
            -1.0
        } else {
            0.0
        }
    }

    fn dot(&self, j: usize, y: &[f64], scratch: &mut Vec<(usize, f64)>) -> f64 {
        if j < self.strategies {
            y[self.norm_row()] + self.entries_of(j).iter().map(|&i| y[i as usize]).sum::<f64>()
        } else {
            self.column(j, scratch);
            scratch.iter().map(|&(i, v)| y[i] * v).sum()
        }
    }

    /// For a fixed Alice assignment the strategy's score separates over
    /// Bob's settings, so the best column costs `d^nA · nB · d · nA`
    /// lookups instead of a scan over all `d^(nA+nB)` strategies.
    fn best_reduced_cost(&self, y: &[f64], with_costs: bool) -> Option<(usize, f64)> {
        let s = &self.scenario;
        let (d, n_a, n_b) = (s.d(), s.n_a(), s.n_b());
        let c = if with_costs { self.cost(0) } else { 0.0 };
        let base = y[self.norm_row()];
        let mut a = vec![0usize; n_a];
        let mut bob = vec![0usize; n_b];
        let mut best: Option<(usize, f64)> = None;
        for alice in 0..d.pow(n_a as u32) {
            let mut rest = alice;
            for slot in a.iter_mut().rev() {
                *slot = rest % d;
                rest /= d;
            }
            let mut score = base;
            for (yy, slot) in bob.iter_mut().enumerate() {
                let (mut arg, mut top) = (0, f64::NEG_INFINITY);
                for b in 0..d {
                    let v: f64 = a.iter().enumerate().map(|(x, &ax)| y[s.index0(ax, b, x, yy)]).sum();
                    if v > top {
                        top = v;
                        arg = b;
                    }
                }
                *slot = arg;
                score += top;
            }
            let dj = c - score;
            if best.is_none_or(|(_, b)| dj < b) {
                let id = bob.iter().fold(alice, |acc, &b| acc * d + b);
                best = Some((id, dj));
            }
        }
        if let Some(p) = self.nonlocal {
            let dj = -(base + p.iter().zip(y).map(|(a, b)| a * b).sum::<f64>());
            if best.is_none_or(|(_, b)| dj < b) {
                best = Some((self.strategies, dj));
            }
        }
        best
    }
}

fn rhs(t: &CorrelationTable) -> Vec<f64> {
    let mut b = t.as_slice().to_vec();
    b.push(1.0);
    b
}

fn check_valid(t: &CorrelationTable, what: &str) -> Result<()> {
    let r = t.validate();
    if !r.passed() {
        return Err(Error::DimensionMismatch(format!(
            "{what} table is not a valid no-signaling distribution (max residual {:.3e})",
            r.max_residual()
        )));
    }
    Ok(())
}

/// Maximizes Eve's local weight subject to reproducing `observed` exactly
/// as a mixture of deterministic strategies and `p_nl`.
pub fn max_local_weight(observed: &CorrelationTable, p_nl: &CorrelationTable) -> Result<CcDecomposition> {
    max_local_weight_capped(observed, p_nl, DEFAULT_STRATEGY_CAP)
}

pub fn max_local_weight_capped(
    observed: &CorrelationTable,
    p_nl: &CorrelationTable,
    cap: u64,
) -> Result<CcDecomposition> {
    Ok(max_local_weight_from(observed, p_nl, cap, None)?.0)
}

/// [`max_local_weight_capped`] that optionally warm-starts from the basis
/// of an earlier solve with the same `p_nl`, and returns the final basis.
pub fn max_local_weight_from(
    observed: &CorrelationTable,
    p_nl: &CorrelationTable,
    cap: u64,
    start: Option<&Basis>,
) -> Result<(CcDecomposition, Basis)> {
    observed.same_scenario(p_nl)?;
    check_valid(observed, "observed")?;
    check_valid(p_nl, "nonlocal")?;
    let scenario = *observed.scenario();
    let cols = CcColumns::new(scenario, cap, Some(p_nl.as_slice()), true)?;
    let b = rhs(observed);
    let sol = match start {
        Some(basis) => simplex::minimize_from(&cols, &b, SimplexOptions::default(), basis)?,
        None => simplex::minimize(&cols, &b, SimplexOptions::default())?,
    };

    let mut weights = BTreeMap::new();
    let mut q_l = 0.0;
    for (id, &w) in sol.x[..cols.strategies].iter().enumerate() {
        if w > WEIGHT_CLAMP {
            weights.insert(id as u64, w);
            q_l += w;
        }
    }
    let q_nl = sol.x[cols.strategies].max(0.0);
    let dec = CcDecomposition {
        weights,
        q_nl,
        q_l,
        residual: sol.residual,
    };
    Ok((dec, sol.basis))
}

/// Result of the deterministic-strategy feasibility LP.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalityCheck {
    pub local: bool,
    /// Phase-1 residual `max |t − Σ q_i D_i|`.
    pub residual: f64,
    pub iterations: usize,
}

pub fn locality_check(t: &CorrelationTable, cap: u64) -> Result<LocalityCheck> {
    let cols = CcColumns::new(*t.scenario(), cap, None, false)?;
    match simplex::find_feasible(&cols, &rhs(t), SimplexOptions::default()) {
        Ok(sol) => Ok(LocalityCheck {
            local: true,
            residual: sol.residual,
            iterations: sol.iterations,
        }),
        Err(Error::Infeasible { residual }) => Ok(LocalityCheck {
            local: false,
            residual,
            iterations: 0,
        }),
        Err(e) => Err(e),
    }
}

/// Whether `t` is a mixture of deterministic strategies (within 1e-9).
pub fn is_local(t: &CorrelationTable) -> Result<bool> {
    Ok(locality_check(t, DEFAULT_STRATEGY_CAP)?.local)
}
