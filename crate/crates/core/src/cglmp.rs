//! The CGLMP Bell expression, its closed-form maximum on the maximally
//! entangled state, and the large-`d` constants.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quantum::BellCoefficients;
use crate::scenario::{CorrelationTable, Scenario};

/// Catalan's constant.
pub const CATALAN: f64 = 0.915_965_594_177_219;

/// Local (deterministic) bound of the CGLMP expression.
pub const LOCAL_BOUND: f64 = 2.0;

/// Which settings play the roles `(x₁, x₂, y₁, y₂)`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Settings {
    pub x1: usize,
    pub x2: usize,
    pub y1: usize,
    pub y2: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            x1: 1,
            x2: 2,
            y1: 1,
            y2: 2,
        }
    }
}

impl Settings {
    fn check(&self, s: &Scenario) -> Result<()> {
        for (what, v, max) in [
            ("x1", self.x1, s.n_a()),
            ("x2", self.x2, s.n_a()),
            ("y1", self.y1, s.n_b()),
            ("y2", self.y2, s.n_b()),
        ] {
            if !(1..=max).contains(&v) {
                return Err(Error::OutOfRange {
                    what,
                    value: v as i64,
                    min: 1,
                    max: max as i64,
                });
            }
        }
        if self.x1 == self.x2 || self.y1 == self.y2 {
            return Err(Error::InvalidScenario(
                "CGLMP settings must be distinct per party".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CglmpResult {
    pub d: usize,
    pub value: f64,
    pub local_bound: f64,
    pub violation_ratio: f64,
}

/// Weight `1 − 2k/(d−1)` of the `k`-th term.
fn weight(d: usize, k: usize) -> f64 {
    1.0 - 2.0 * k as f64 / (d as f64 - 1.0)
}

fn modd(v: i64, d: usize) -> usize {
    v.rem_euclid(d as i64) as usize
}

/// The eight signed terms of the `k`-th summand. Each entry is
/// `(sign, alice_setting, bob_setting, shift)` where `shift` is the
/// residue of `b − a (mod d)` whose probability enters the sum.
fn terms(s: Settings, d: usize, k: usize) -> [(f64, usize, usize, usize); 8] {
    let k = k as i64;
    // P(A_x = B_y + j) counts b − a ≡ −j; P(B_y = A_x + j) counts b − a ≡ j.
    let a_eq_b = |j: i64| modd(-j, d);
    let b_eq_a = |j: i64| modd(j, d);
    [
        (1.0, s.x1, s.y1, a_eq_b(k)),
        (1.0, s.x2, s.y1, b_eq_a(k + 1)),
        (1.0, s.x2, s.y2, a_eq_b(k)),
        (1.0, s.x1, s.y2, b_eq_a(k)),
        (-1.0, s.x1, s.y1, a_eq_b(-k - 1)),
        (-1.0, s.x2, s.y1, b_eq_a(-k)),
        (-1.0, s.x2, s.y2, a_eq_b(-k - 1)),
        (-1.0, s.x1, s.y2, b_eq_a(-k - 1)),
    ]
}

/// `I_d` of a table, assembled from outcome-difference probabilities.
pub fn cglmp_value(t: &CorrelationTable, settings: Settings) -> Result<f64> {
    let s = t.scenario();
    settings.check(s)?;
    let d = s.d();
    let mut total = 0.0;
    for k in 0..d / 2 {
        let inner: f64 = terms(settings, d, k)
            .iter()
            .map(|&(sign, x, y, shift)| sign * t.k_shift0(x - 1, y - 1, shift))
            .sum();
        total += weight(d, k) * inner;
    }
    Ok(total)
}

pub fn cglmp_result(t: &CorrelationTable, settings: Settings) -> Result<CglmpResult> {
    let value = cglmp_value(t, settings)?;
    Ok(CglmpResult {
        d: t.scenario().d(),
        value,
        local_bound: LOCAL_BOUND,
        violation_ratio: value / LOCAL_BOUND,
    })
}

/// CGLMP coefficients `c(a,b,x,y)` over an arbitrary scenario, with the
/// expression placed on `settings`.
pub fn cglmp_coefficients_on(scenario: Scenario, settings: Settings) -> Result<BellCoefficients> {
    settings.check(&scenario)?;
    let d = scenario.d();
    let mut c = BellCoefficients::zeros(scenario);
    for k in 0..d / 2 {
        let w = weight(d, k);
        for (sign, x, y, shift) in terms(settings, d, k) {
            for a in 0..d {
                c.add0(a, (a + shift) % d, x - 1, y - 1, sign * w);
            }
        }
    }
    Ok(c)
}

/// CGLMP coefficients on the two-setting scenario `(d, 2, 2)`.
pub fn cglmp_coefficients(d: usize) -> Result<BellCoefficients> {
    cglmp_coefficients_on(Scenario::new(d, 2, 2, 1, 1)?, Settings::default())
}

fn f(d: usize, k: f64) -> f64 {
    let df = d as f64;
    let s = (PI * (k + 0.25) / df).sin();
    1.0 / (2.0 * df * df * df * s * s)
}

/// Maximal CGLMP value of the maximally entangled state,
/// `4d Σ_k (1 − 2k/(d−1)) (f_d(k) − f_d(−(k+1)))`.
pub fn idmax_closed_form(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidScenario(format!("d = {d} must be at least 2")));
    }
    let sum: f64 = (0..d / 2)
        .map(|k| weight(d, k) * (f(d, k as f64) - f(d, -(k as f64 + 1.0))))
        .sum();
    Ok(4.0 * d as f64 * sum)
}

/// `lim_{d→∞} I_d^max = 32 G / π²`.
pub fn idmax_asymptotic() -> f64 {
    32.0 * CATALAN / (PI * PI)
}

/// `V^L = 2 / I_d^max`: the visibility at which the mixed maximally
/// entangled table reaches the local bound.
pub fn local_visibility_max_entangled(d: usize) -> Result<f64> {
    Ok(LOCAL_BOUND / idmax_closed_form(d)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Visibility;

    #[test]
    fn uniform_scores_zero() {
        for d in 2..7 {
            let u = CorrelationTable::uniform(Scenario::protocol(d).unwrap());
            assert!(cglmp_value(&u, Settings::default()).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn all_equal_outputs_sit_on_local_bound() {
        let s = Scenario::protocol(2).unwrap();
        let t = CorrelationTable::from_fn(s, |a, b, _, _| if a == 1 && b == 1 { 1.0 } else { 0.0 });
        assert_eq!(cglmp_value(&t, Settings::default()).unwrap(), 2.0);
    }

    #[test]
    fn settings_validation() {
        let t = CorrelationTable::uniform(Scenario::protocol(3).unwrap());
        let bad = Settings {
            x1: 1,
            x2: 1,
            y1: 1,
            y2: 2,
        };
        assert!(cglmp_value(&t, bad).is_err());
        let out = Settings {
            x1: 1,
            x2: 2,
            y1: 1,
            y2: 4,
        };
        assert!(cglmp_value(&t, out).is_err());
        let alt = Settings {
            x1: 1,
            x2: 2,
            y1: 1,
            y2: 3,
        };
        assert!(cglmp_value(&t, alt).is_ok());
    }

    #[test]
    fn closed_form_values() {
        assert!((idmax_closed_form(2).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((idmax_closed_form(3).unwrap() - 2.87293).abs() < 1e-5);
        assert!(idmax_closed_form(1).is_err());
        let big = idmax_closed_form(1_000_000).unwrap();
        assert!((big - idmax_asymptotic()).abs() < 1e-5, "{big}");
    }

    #[test]
    fn asymptotic_constants() {
        assert!((idmax_asymptotic() - 2.96981).abs() < 1e-5);
        assert!((16.0 * CATALAN - 14.6554).abs() < 1e-4);
        assert!((CATALAN - 0.9159655942).abs() < 1e-10);
    }

    #[test]
    fn closed_form_increases_towards_the_limit() {
        let lim = idmax_asymptotic();
        let mut prev = 0.0;
        for d in (2..=10_000).step_by(7).chain([10_000]) {
            let v = idmax_closed_form(d).unwrap();
            assert!(v < lim, "d={d}");
            assert!(v > prev, "d={d}");
            prev = v;
        }
    }

    #[test]
    fn local_visibility_values() {
        assert!((local_visibility_max_entangled(2).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((local_visibility_max_entangled(3).unwrap() - 0.69615).abs() < 1e-5);
        let limit = PI * PI / (16.0 * CATALAN);
        assert!((limit - 0.67344).abs() < 1e-5);
        assert!((2.0 / idmax_asymptotic() - limit).abs() < 1e-15);
    }

    #[test]
    fn coefficient_route_matches_shift_route() {
        for d in 2..7 {
            let s = Scenario::protocol(d).unwrap();
            let c = cglmp_coefficients_on(s, Settings::default()).unwrap();
            // An arbitrary product table exercises every coefficient.
            let t = CorrelationTable::from_fn(s, |a, b, x, y| {
                let pa = (a + x) as f64;
                let pb = (2 * b + y) as f64 % 5.0 + 1.0;
                pa * pb
            });
            let direct = cglmp_value(&t, Settings::default()).unwrap();
            assert!((c.evaluate(&t).unwrap() - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn value_scales_with_visibility() {
        let s = Scenario::protocol(4).unwrap();
        let t = CorrelationTable::from_fn(s, |a, b, _, _| if a == b { 0.25 } else { 0.0 });
        let full = cglmp_value(&t, Settings::default()).unwrap();
        let mixed = t.mix_with_white_noise(Visibility::new(0.37).unwrap());
        assert!((cglmp_value(&mixed, Settings::default()).unwrap() - 0.37 * full).abs() < 1e-13);
    }
}
