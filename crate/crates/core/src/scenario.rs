//! Bell-scenario indexing and dense correlation tables `p(a,b|x,y)`.
//!
//! Outcomes `a, b` and settings `x, y` are 1-based at the public surface;
//! storage is a flat 0-based vector with one contiguous `d × d` block per
//! setting pair.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};

/// Slack allowed below 0 (and above 1) for a table entry.
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Tolerance on per-setting normalization and on no-signaling residuals.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Marginals are refused when the table signals by more than this.
pub const MARGINAL_SIGNALING_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scenario {
    d: usize,
    n_a: usize,
    n_b: usize,
    key_x: usize,
    key_y: usize,
}

impl Scenario {
    pub fn new(d: usize, n_a: usize, n_b: usize, key_x: usize, key_y: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidScenario(format!("d = {d} must be at least 2")));
        }
        if n_a < 2 || n_b < 2 {
            return Err(Error::InvalidScenario(format!(
                "need at least two settings per party (got nA = {n_a}, nB = {n_b})"
            )));
        }
        if !(1..=n_a).contains(&key_x) || !(1..=n_b).contains(&key_y) {
            return Err(Error::InvalidScenario(format!(
                "key settings ({key_x}, {key_y}) outside [1, {n_a}] x [1, {n_b}]"
            )));
        }
        Ok(Scenario {
            d,
            n_a,
            n_b,
            key_x,
            key_y,
        })
    }

    /// The protocol shape used throughout: two Bell settings per party,
    /// Bob holds one extra key setting, and the key is read from
    /// `(x*, y*) = (2, 3)`.
    pub fn protocol(d: usize) -> Result<Self> {
        Scenario::new(d, 2, 3, 2, 3)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn key_x(&self) -> usize {
        self.key_x
    }

    pub fn key_y(&self) -> usize {
        self.key_y
    }

    /// Number of table entries, `d² · nA · nB`.
    pub fn num_entries(&self) -> usize {
        self.d * self.d * self.n_a * self.n_b
    }

    /// Flat index from 0-based coordinates.
    #[inline]
    pub(crate) fn index0(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((x * self.n_b + y) * self.d + a) * self.d + b
    }

    fn check_setting(&self, party: Party, s: usize) -> Result<()> {
        let max = match party {
            Party::Alice => self.n_a,
            Party::Bob => self.n_b,
        };
        if !(1..=max).contains(&s) {
            return Err(Error::OutOfRange {
                what: match party {
                    Party::Alice => "x",
                    Party::Bob => "y",
                },
                value: s as i64,
                min: 1,
                max: max as i64,
            });
        }
        Ok(())
    }

    fn check_outcome(&self, what: &'static str, o: usize) -> Result<()> {
        if !(1..=self.d).contains(&o) {
            return Err(Error::OutOfRange {
                what,
                value: o as i64,
                min: 1,
                max: self.d as i64,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

/// White-noise mixing weight `V ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Visibility(f64);

impl Visibility {
    pub fn new(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidVisibility(v));
        }
        Ok(Visibility(v))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Residuals of the table invariants, with a verdict per invariant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationReport {
    /// Largest amount by which an entry leaves `[0, 1]`.
    pub positivity_residual: f64,
    /// Largest `|Σ_{a,b} p(a,b|x,y) − 1|`.
    pub normalization_residual: f64,
    /// Largest spread of Alice's marginal across Bob's settings.
    pub alice_signaling_residual: f64,
    /// Largest spread of Bob's marginal across Alice's settings.
    pub bob_signaling_residual: f64,
    pub positivity_ok: bool,
    pub normalization_ok: bool,
    pub no_signaling_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.positivity_ok && self.normalization_ok && self.no_signaling_ok
    }

    pub fn max_residual(&self) -> f64 {
        self.positivity_residual
            .max(self.normalization_residual)
            .max(self.alice_signaling_residual)
            .max(self.bob_signaling_residual)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    scenario: Scenario,
    p: Vec<f64>,
}

impl CorrelationTable {
    /// Builds a table from a closure over 1-based `(a, b, x, y)`.
    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut p = vec![0.0; scenario.num_entries()];
        for x in 0..scenario.n_a {
            for y in 0..scenario.n_b {
                for a in 0..scenario.d {
                    for b in 0..scenario.d {
                        p[scenario.index0(a, b, x, y)] = f(a + 1, b + 1, x + 1, y + 1);
                    }
                }
            }
        }
        CorrelationTable { scenario, p }
    }

    /// Wraps a flat vector in storage order (see [`CorrelationTable::as_slice`]).
    pub fn from_vec(scenario: Scenario, p: Vec<f64>) -> Result<Self> {
        if p.len() != scenario.num_entries() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                scenario.num_entries(),
                p.len()
            )));
        }
        Ok(CorrelationTable { scenario, p })
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let u = 1.0 / (scenario.d * scenario.d) as f64;
        CorrelationTable {
            scenario,
            p: vec![u; scenario.num_entries()],
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Entries ordered by `x`, then `y`, then `a`, then `b` (all 0-based,
    /// `b` fastest).
    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// `p(a,b|x,y)` with 1-based arguments. Panics when out of range.
    pub fn prob(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        assert!((1..=self.scenario.d).contains(&a) && (1..=self.scenario.d).contains(&b));
        assert!((1..=self.scenario.n_a).contains(&x) && (1..=self.scenario.n_b).contains(&y));
        self.p[self.scenario.index0(a - 1, b - 1, x - 1, y - 1)]
    }

    #[inline]
    pub(crate) fn at0(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[self.scenario.index0(a, b, x, y)]
    }

    /// The `d × d` block for 1-based settings, row-major in `(a, b)`.
    pub fn block(&self, x: usize, y: usize) -> Result<&[f64]> {
        self.scenario.check_setting(Party::Alice, x)?;
        self.scenario.check_setting(Party::Bob, y)?;
        let d2 = self.scenario.d * self.scenario.d;
        let start = self.scenario.index0(0, 0, x - 1, y - 1);
        Ok(&self.p[start..start + d2])
    }

    /// The key-setting block `p(a,b|x*,y*)`.
    pub fn key_block(&self) -> &[f64] {
        self.block(self.scenario.key_x, self.scenario.key_y)
            .expect("key settings validated at construction")
    }

    /// `V · self + (1 − V) / d²`, entry by entry.
    pub fn mix_with_white_noise(&self, v: Visibility) -> CorrelationTable {
        let v = v.value();
        let noise = (1.0 - v) / (self.scenario.d * self.scenario.d) as f64;
        CorrelationTable {
            scenario: self.scenario,
            p: self.p.iter().map(|&q| v * q + noise).collect(),
        }
    }

    /// `w · self + (1 − w) · other`.
    pub fn convex_combination(&self, w: f64, other: &CorrelationTable) -> Result<CorrelationTable> {
        self.same_scenario(other)?;
        Ok(CorrelationTable {
            scenario: self.scenario,
            p: self
                .p
                .iter()
                .zip(&other.p)
                .map(|(a, b)| w * a + (1.0 - w) * b)
                .collect(),
        })
    }

    pub(crate) fn same_scenario(&self, other: &CorrelationTable) -> Result<()> {
        if self.scenario != other.scenario {
            return Err(Error::DimensionMismatch(format!(
                "scenarios differ: {:?} vs {:?}",
                self.scenario, other.scenario
            )));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &CorrelationTable) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> ValidationReport {
        let s = &self.scenario;
        let d = s.d;
        let positivity_residual = self.p.iter().map(|&q| (-q).max(q - 1.0).max(0.0)).fold(0.0, f64::max);

        let mut normalization_residual: f64 = 0.0;
        for x in 0..s.n_a {
            for y in 0..s.n_b {
                let start = s.index0(0, 0, x, y);
                let total: f64 = self.p[start..start + d * d].iter().sum();
                normalization_residual = normalization_residual.max((total - 1.0).abs());
            }
        }

        let mut alice_signaling_residual: f64 = 0.0;
        for x in 0..s.n_a {
            for a in 0..d {
                let m: Vec<f64> = (0..s.n_b).map(|y| (0..d).map(|b| self.at0(a, b, x, y)).sum()).collect();
                alice_signaling_residual = alice_signaling_residual.max(spread(&m));
            }
        }
        let mut bob_signaling_residual: f64 = 0.0;
        for y in 0..s.n_b {
            for b in 0..d {
                let m: Vec<f64> = (0..s.n_a).map(|x| (0..d).map(|a| self.at0(a, b, x, y)).sum()).collect();
                bob_signaling_residual = bob_signaling_residual.max(spread(&m));
            }
        }

        ValidationReport {
            positivity_residual,
            normalization_residual,
            alice_signaling_residual,
            bob_signaling_residual,
            positivity_ok: positivity_residual <= POSITIVITY_TOL,
            normalization_ok: normalization_residual <= NORMALIZATION_TOL,
            no_signaling_ok: alice_signaling_residual <= NORMALIZATION_TOL
                && bob_signaling_residual <= NORMALIZATION_TOL,
        }
    }

    /// `Σ_j p(j, j+k mod d | x, y)`: the probability that Bob's outcome
    /// exceeds Alice's by `k` modulo `d`. Settings are 1-based, `k ∈ [0, d−1]`.
    pub fn k_shift_probability(&self, x: usize, y: usize, k: usize) -> Result<f64> {
        self.scenario.check_setting(Party::Alice, x)?;
        self.scenario.check_setting(Party::Bob, y)?;
        let d = self.scenario.d;
        if k >= d {
            return Err(Error::OutOfRange {
                what: "k",
                value: k as i64,
                min: 0,
                max: d as i64 - 1,
            });
        }
        Ok(self.k_shift0(x - 1, y - 1, k))
    }

    #[inline]
    pub(crate) fn k_shift0(&self, x: usize, y: usize, k: usize) -> f64 {
        let d = self.scenario.d;
        (0..d).map(|j| self.at0(j, (j + k) % d, x, y)).sum()
    }

    /// Single-party marginal at a 1-based setting, averaged over the other
    /// party's settings. Fails if those averages disagree by more than
    /// [`MARGINAL_SIGNALING_TOL`].
    pub fn marginal(&self, party: Party, setting: usize) -> Result<Vec<f64>> {
        let s = &self.scenario;
        s.check_setting(party, setting)?;
        let d = s.d;
        let per_other: Vec<Vec<f64>> = match party {
            Party::Alice => (0..s.n_b)
                .map(|y| {
                    (0..d)
                        .map(|a| (0..d).map(|b| self.at0(a, b, setting - 1, y)).sum())
                        .collect()
                })
                .collect(),
            Party::Bob => (0..s.n_a)
                .map(|x| {
                    (0..d)
                        .map(|b| (0..d).map(|a| self.at0(a, b, x, setting - 1)).sum())
                        .collect()
                })
                .collect(),
        };
        let residual = (0..d)
            .map(|o| spread(&per_other.iter().map(|m| m[o]).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        if residual > MARGINAL_SIGNALING_TOL {
            return Err(Error::Signaling { residual });
        }
        let n = per_other.len() as f64;
        Ok((0..d)
            .map(|o| per_other.iter().map(|m| m[o]).sum::<f64>() / n)
            .collect())
    }

    /// Plain-text form: a `# d nA nB keyX keyY` header carrying the values,
    /// then one `x y a b p` row per entry (1-based, 15 significant digits).
    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let mut out = String::with_capacity(32 * s.num_entries());
        let _ = writeln!(out, "# {} {} {} {} {}", s.d, s.n_a, s.n_b, s.key_x, s.key_y);
        for x in 0..s.n_a {
            for y in 0..s.n_b {
                for a in 0..s.d {
                    for b in 0..s.d {
                        let _ = writeln!(
                            out,
                            "{} {} {} {} {:.14e}",
                            x + 1,
                            y + 1,
                            a + 1,
                            b + 1,
                            self.at0(a, b, x, y)
                        );
                    }
                }
            }
        }
        out
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    /// Parses the format written by [`CorrelationTable::to_text`]. Every
    /// entry must appear exactly once.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let header = header.strip_prefix('#').ok_or(Error::Parse {
            line: hline,
            msg: "expected `# d nA nB keyX keyY` header".into(),
        })?;
        let fields = parse_usizes(header, hline)?;
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: hline,
                msg: format!("header has {} fields, expected 5", fields.len()),
            });
        }
        let scenario = Scenario::new(fields[0], fields[1], fields[2], fields[3], fields[4])?;
        let mut p = vec![f64::NAN; scenario.num_entries()];
        let mut seen = vec![false; scenario.num_entries()];
        for (ln, line) in lines {
            if line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 5 {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected 5 fields, got {}", parts.len()),
                });
            }
            let idx = parse_usizes(&parts[..4].join(" "), ln)?;
            let (x, y, a, b) = (idx[0], idx[1], idx[2], idx[3]);
            scenario.check_setting(Party::Alice, x)?;
            scenario.check_setting(Party::Bob, y)?;
            scenario.check_outcome("a", a)?;
            scenario.check_outcome("b", b)?;
            let value: f64 = parts[4].parse().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad probability `{}`", parts[4]),
            })?;
            let i = scenario.index0(a - 1, b - 1, x - 1, y - 1);
            if seen[i] {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("duplicate entry ({x}, {y}, {a}, {b})"),
                });
            }
            seen[i] = true;
            p[i] = value;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Parse {
                line: 0,
                msg: format!(
                    "{} entries missing (first at flat index {missing})",
                    seen.iter().filter(|s| !**s).count()
                ),
            });
        }
        Ok(CorrelationTable { scenario, p })
    }
}

fn parse_usizes(s: &str, line: usize) -> Result<Vec<usize>> {
    s.split_whitespace()
        .map(|t| {
            t.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("expected a non-negative integer, got `{t}`"),
            })
        })
        .collect()
}

fn spread(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    hi - lo
}
