//! Key-rate upper bounds from the optimal CC attack: privacy-amplification
//! term minus error-correction term, all entropies in base-`d` units (dits).

use rayon::prelude::*;

use crate::cglmp::{idmax_closed_form, local_visibility_max_entangled, CATALAN};
use crate::error::{Error, Result};
use crate::polytope::{max_local_weight_from, DEFAULT_STRATEGY_CAP};
use crate::quantum::{cglmp_state, maximally_entangled_state, protocol_table};
use crate::scenario::{CorrelationTable, Party, Visibility};
use crate::simplex::Basis;

/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_WIDTH: f64 = 1e-8;

/// Probabilities below this are treated as zero in `p log p`.
const TINY: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Closed-form local weight for the maximally entangled state.
    AnalyticMaxEntangled,
    /// LP local weight, maximally entangled nonlocal table.
    LpMaxEntangled,
    /// LP local weight, CGLMP-state nonlocal table.
    LpCglmpState,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::AnalyticMaxEntangled => "analytic-max-entangled",
            Branch::LpMaxEntangled => "lp-max-entangled",
            Branch::LpCglmpState => "lp-cglmp-state",
        }
    }

    pub fn is_lp(self) -> bool {
        !matches!(self, Branch::AnalyticMaxEntangled)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyRatePoint {
    pub v: f64,
    /// Eve's maximal local weight.
    pub q_l: f64,
    /// `H(A|E)` in dits.
    pub pa_term: f64,
    /// `H(A|B)` in dits.
    pub ec_term: f64,
    /// `pa_term − ec_term`.
    pub r_ub: f64,
    pub branch: Branch,
}

impl KeyRatePoint {
    fn new(v: f64, q_l: f64, pa_term: f64, ec_term: f64, branch: Branch) -> Self {
        KeyRatePoint {
            v,
            q_l,
            pa_term,
            ec_term,
            r_ub: pa_term - ec_term,
            branch,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalVisibility {
    pub d: usize,
    pub branch: Branch,
    pub v_crit: f64,
    /// `r_ub` at `v_crit`.
    pub residual: f64,
    pub evaluations: usize,
}

/// `x log_d x` with `0 log 0 := 0`.
fn xlogx(x: f64, ln_d: f64) -> f64 {
    if x < TINY {
        0.0
    } else {
        x * x.ln() / ln_d
    }
}

/// Shannon entropy in base `d`.
pub fn entropy_base(p: &[f64], d: usize) -> f64 {
    let ln_d = (d as f64).ln();
    -p.iter().map(|&x| xlogx(x, ln_d)).sum::<f64>()
}

/// `H(A|B)` of the isotropic key table `V δ_{ab}/d + (1−V)/d²`.
pub fn ec_term_isotropic(d: usize, v: Visibility) -> f64 {
    let v = v.value();
    let df = d as f64;
    let ln_d = df.ln();
    let hi = 1.0 + (df - 1.0) * v;
    let lo = 1.0 - v;
    1.0 - xlogx(hi, ln_d) / df - (df - 1.0) * xlogx(lo, ln_d) / df
}

/// `H(A|B) = Σ_b p(b) H(p(·,b)/p(b))` at the key settings. Bob outcomes of
/// zero probability contribute nothing.
pub fn ec_term_general(t: &CorrelationTable) -> f64 {
    let d = t.scenario().d();
    let block = t.key_block();
    (0..d)
        .map(|b| {
            let pb: f64 = (0..d).map(|a| block[a * d + b]).sum();
            if pb < TINY {
                return 0.0;
            }
            let cond: Vec<f64> = (0..d).map(|a| block[a * d + b] / pb).collect();
            pb * entropy_base(&cond, d)
        })
        .sum()
}

/// `H(A|E) = (1 − q_L) H_d(p_A)`: zero in local rounds, Alice's key-outcome
/// entropy in nonlocal rounds.
pub fn pa_term_cc(q_l: f64, alice_key_marginal: &[f64]) -> f64 {
    (1.0 - q_l) * entropy_base(alice_key_marginal, alice_key_marginal.len())
}

/// `(1−V)/(1−V^L)` above the local visibility, `1` below it.
pub fn q_l_analytic(d: usize, v: Visibility) -> Result<f64> {
    let vl = local_visibility_max_entangled(d)?;
    let v = v.value();
    Ok(if v >= vl {
        ((1.0 - v) / (1.0 - vl)).min(1.0)
    } else {
        1.0
    })
}

/// Single-expression form of the analytic bound, valid for `V ≥ V^L`.
pub fn rub_analytic_closed_form(d: usize, v: Visibility) -> Result<f64> {
    let imax = idmax_closed_form(d)?;
    let df = d as f64;
    let ln_d = df.ln();
    let v = v.value();
    Ok(
        xlogx(1.0 + (df - 1.0) * v, ln_d) / df + (df - 1.0) * xlogx(1.0 - v, ln_d) / df
            - (1.0 - v) / (1.0 - 2.0 / imax),
    )
}

pub fn rub_analytic(d: usize, v: Visibility) -> Result<KeyRatePoint> {
    let q_l = q_l_analytic(d, v)?;
    let pa = 1.0 - q_l;
    let ec = ec_term_isotropic(d, v);
    let point = KeyRatePoint::new(v.value(), q_l, pa, ec, Branch::AnalyticMaxEntangled);
    debug_assert!(
        v.value() < local_visibility_max_entangled(d)? || (point.r_ub - rub_analytic_closed_form(d, v)?).abs() <= 1e-12
    );
    Ok(point)
}

/// A fixed nonlocal resource for one `(d, branch)`, reused across
/// visibilities.
#[derive(Clone, Debug)]
pub struct KeyRateModel {
    d: usize,
    branch: Branch,
    p_nl: CorrelationTable,
    alice_key_marginal: Vec<f64>,
    strategy_cap: u64,
}

impl KeyRateModel {
    pub fn new(d: usize, branch: Branch) -> Result<Self> {
        Self::with_cap(d, branch, DEFAULT_STRATEGY_CAP)
    }

    pub fn with_cap(d: usize, branch: Branch, strategy_cap: u64) -> Result<Self> {
        let state = match branch {
            Branch::LpCglmpState => cglmp_state(d)?,
            _ => maximally_entangled_state(d),
        };
        let p_nl = protocol_table(&state)?;
        let alice_key_marginal = p_nl.marginal(Party::Alice, p_nl.scenario().key_x())?;
        Ok(KeyRateModel {
            d,
            branch,
            p_nl,
            alice_key_marginal,
            strategy_cap,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Eve's nonlocal table (noise-free protocol correlations).
    pub fn nonlocal_table(&self) -> &CorrelationTable {
        &self.p_nl
    }

    pub fn observed(&self, v: Visibility) -> CorrelationTable {
        self.p_nl.mix_with_white_noise(v)
    }

    pub fn point(&self, v: Visibility) -> Result<KeyRatePoint> {
        self.point_from(v, &mut None)
    }

    /// [`KeyRateModel::point`] reusing and updating an LP basis from an
    /// earlier visibility. Sweeps over nearby visibilities converge in a few
    /// dual pivots instead of a cold two-phase solve.
    pub fn point_from(&self, v: Visibility, warm: &mut Option<Basis>) -> Result<KeyRatePoint> {
        if !self.branch.is_lp() {
            return rub_analytic(self.d, v);
        }
        let observed = self.observed(v);
        let (dec, basis) = max_local_weight_from(&observed, &self.p_nl, self.strategy_cap, warm.as_ref())?;
        *warm = Some(basis);
        let q_l = dec.q_l.min(1.0);
        let pa = pa_term_cc(q_l, &self.alice_key_marginal).max(0.0);
        let ec = ec_term_general(&observed);
        Ok(KeyRatePoint::new(v.value(), q_l, pa, ec, self.branch))
    }

    /// Root of `r_ub(V)` on `[2/I_d^max, 1]` by bisection.
    pub fn critical_visibility(&self) -> Result<CriticalVisibility> {
        let mut lo = local_visibility_max_entangled(self.d)?;
        let mut hi = 1.0;
        let mut warm = None;
        let mut f = |v: f64| -> Result<f64> { Ok(self.point_from(Visibility::new(v)?, &mut warm)?.r_ub) };
        let (f_lo, f_hi) = (f(lo)?, f(hi)?);
        if !(f_lo < 0.0 && f_hi > 0.0) {
            return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
        }
        let mut evaluations = 2;
        while hi - lo > BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            evaluations += 1;
            if f(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let v_crit = 0.5 * (lo + hi);
        Ok(CriticalVisibility {
            d: self.d,
            branch: self.branch,
            v_crit,
            residual: f(v_crit)?,
            evaluations: evaluations + 1,
        })
    }

    /// Smallest visibility at which the PA-term is positive, i.e. where the
    /// observed table stops being fully local.
    pub fn pa_zero_visibility(&self) -> Result<f64> {
        if !self.branch.is_lp() {
            return local_visibility_max_entangled(self.d);
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut warm = None;
        while hi - lo > 1e-7 {
            let mid = 0.5 * (lo + hi);
            if self.point_from(Visibility::new(mid)?, &mut warm)?.pa_term > 1e-9 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Uniform grid of `steps` points from `v_min` to `v_max` inclusive.
    pub fn curve(&self, v_min: f64, v_max: f64, steps: usize) -> Result<Vec<KeyRatePoint>> {
        if !(0.0..1.0).contains(&v_min) || !(v_min < v_max && v_max <= 1.0) || steps < 2 {
            return Err(Error::InvalidScenario(format!(
                "need 0 <= vMin < vMax <= 1 and steps >= 2 (got {v_min}, {v_max}, {steps})"
            )));
        }
        let grid: Vec<f64> = (0..steps)
            .map(|i| {
                if i + 1 == steps {
                    v_max
                } else {
                    v_min + (v_max - v_min) * i as f64 / (steps - 1) as f64
                }
            })
            .collect();
        grid.par_iter().map(|&v| self.point(Visibility::new(v)?)).collect()
    }
}

/// `r_ub` for the LP branches, building the nonlocal table afresh.
pub fn rub_lp(d: usize, v: Visibility, branch: Branch) -> Result<KeyRatePoint> {
    KeyRateModel::new(d, branch)?.point(v)
}

pub fn critical_visibility(d: usize, branch: Branch) -> Result<CriticalVisibility> {
    KeyRateModel::new(d, branch)?.critical_visibility()
}

pub fn keyrate_curve(d: usize, branch: Branch, v_min: f64, v_max: f64, steps: usize) -> Result<Vec<KeyRatePoint>> {
    KeyRateModel::new(d, branch)?.curve(v_min, v_max, steps)
}

/// `π² / (16 G)`, the large-`d` local visibility.
fn asymptotic_local_visibility() -> f64 {
    std::f64::consts::PI.powi(2) / (16.0 * CATALAN)
}

/// `lim_{d→∞} r_ub(V)`
pub fn rub_asymptotic(v: Visibility) -> f64 {
    let l = asymptotic_local_visibility();
    ((2.0 - l) * v.value() - 1.0) / (1.0 - l)
}

pub fn vcrit_asymptotic() -> f64 {
    1.0 / (2.0 - asymptotic_local_visibility())
}
