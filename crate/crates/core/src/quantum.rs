//! Pure bipartite states, Fourier-phase measurement bases, Bell operators
//! and Born-rule correlation tables.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::cglmp;
use crate::complex::{inner, norm, Complex};
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::scenario::{CorrelationTable, Scenario};

const UNIT_NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
/// Largest accepted `‖Mv − λv‖` for a returned eigenpair.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;

/// Alice's CGLMP-optimal phase offsets for her two Bell settings.
pub const CGLMP_ALICE_PHASES: [f64; 2] = [0.0, 0.5];
/// Bob's CGLMP-optimal phase offsets. With Bob's exponent conjugated these
/// reproduce the closed-form maximal violation on the maximally entangled
/// state.
pub const CGLMP_BOB_PHASES: [f64; 2] = [-0.25, 0.25];

/// Amplitudes over the product basis `|q⟩|r⟩`, stored at `q·d + r`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    d: usize,
    amplitudes: Vec<Complex>,
}

impl PureState {
    pub fn new(d: usize, amplitudes: Vec<Complex>) -> Result<Self> {
        if amplitudes.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for local dimension {d}",
                amplitudes.len()
            )));
        }
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::DimensionMismatch(format!("state norm {n} is not 1")));
        }
        Ok(PureState { d, amplitudes })
    }

    /// Rescales to unit norm and fixes the global phase so the largest
    /// amplitude is real and positive.
    pub fn normalized(d: usize, mut amplitudes: Vec<Complex>) -> Result<Self> {
        let n = norm(&amplitudes);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DimensionMismatch("cannot normalize a zero vector".into()));
        }
        let pivot = amplitudes
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(Complex::ONE);
        let fix = Complex::cis(-pivot.arg()).scale(1.0 / n);
        for z in &mut amplitudes {
            *z *= fix;
        }
        PureState::new(d, amplitudes)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amplitudes
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &PureState) -> f64 {
        inner(&self.amplitudes, &other.amplitudes).norm_sqr()
    }

    /// Alice's reduced density operator `Tr_B |ψ⟩⟨ψ|`.
    pub fn reduced_alice(&self) -> HermitianMatrix {
        let d = self.d;
        let mut rho = vec![Complex::ZERO; d * d];
        for q in 0..d {
            for q2 in 0..d {
                rho[q * d + q2] = (0..d).fold(Complex::ZERO, |acc, r| {
                    acc + self.amplitudes[q * d + r] * self.amplitudes[q2 * d + r].conj()
                });
            }
        }
        HermitianMatrix::from_rows(d, rho, 1e-12).expect("partial trace is Hermitian")
    }

    /// Schmidt coefficients in descending order.
    pub fn schmidt_coefficients(&self) -> Result<Vec<f64>> {
        let mut s: Vec<f64> = self
            .reduced_alice()
            .eigen()?
            .values
            .into_iter()
            .map(|l| l.max(0.0).sqrt())
            .collect();
        s.reverse();
        Ok(s)
    }

    /// `q r real imag` rows, 0-based basis labels.
    pub fn to_rows(&self) -> String {
        let mut out = String::new();
        for q in 0..self.d {
            for r in 0..self.d {
                let z = self.amplitudes[q * self.d + r];
                let _ = writeln!(out, "{q} {r} {:.15e} {:.15e}", z.re, z.im);
            }
        }
        out
    }
}

/// `(1/√d) Σ_q |qq⟩`
pub fn maximally_entangled_state(d: usize) -> PureState {
    let mut amps = vec![Complex::ZERO; d * d];
    let c = 1.0 / (d as f64).sqrt();
    for q in 0..d {
        amps[q * d + q] = Complex::from_real(c);
    }
    PureState { d, amplitudes: amps }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Alice,
    Bob,
}

/// Rank-1 projective measurement in a phase-shifted Fourier basis.
#[derive(Clone, Debug)]
pub struct MeasurementBasis {
    d: usize,
    phase: f64,
    side: Side,
    vectors: Vec<Vec<Complex>>,
}

impl MeasurementBasis {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Basis vector for the 0-based outcome `a`.
    pub fn vector(&self, a: usize) -> &[Complex] {
        &self.vectors[a]
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                let g = inner(&self.vectors[i], &self.vectors[j]);
                let target = if i == j { Complex::ONE } else { Complex::ZERO };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

/// Outcome `a` (0-based) has components `e^{±i 2π q (a + phase)/d} / √d`,
/// `+` for Alice and `−` for Bob.
pub fn fourier_basis(d: usize, phase: f64, side: Side) -> Result<MeasurementBasis> {
    if d < 2 {
        return Err(Error::InvalidScenario(format!("d = {d} must be at least 2")));
    }
    let sign = match side {
        Side::Alice => 1.0,
        Side::Bob => -1.0,
    };
    let c = 1.0 / (d as f64).sqrt();
    let vectors = (0..d)
        .map(|a| {
            (0..d)
                .map(|q| Complex::cis(sign * 2.0 * PI * q as f64 * (a as f64 + phase) / d as f64).scale(c))
                .collect()
        })
        .collect();
    Ok(MeasurementBasis {
        d,
        phase,
        side,
        vectors,
    })
}

/// Phase offsets per setting for both parties in `scenario`: CGLMP-optimal
/// phases on the two Bell settings, and Alice's key-setting phase reused by
/// every further setting, so key outcomes coincide on the maximally
/// entangled state.
pub fn protocol_phases(scenario: &Scenario) -> Result<(Vec<f64>, Vec<f64>)> {
    if scenario.key_x() > 2 {
        return Err(Error::InvalidScenario(
            "Alice's key setting must be one of the two Bell settings".into(),
        ));
    }
    let key_phase = CGLMP_ALICE_PHASES[scenario.key_x() - 1];
    let extend =
        |base: &[f64; 2], n: usize| -> Vec<f64> { (0..n).map(|i| if i < 2 { base[i] } else { key_phase }).collect() };
    Ok((
        extend(&CGLMP_ALICE_PHASES, scenario.n_a()),
        extend(&CGLMP_BOB_PHASES, scenario.n_b()),
    ))
}

fn bases(d: usize, phases: &[f64], side: Side) -> Result<Vec<MeasurementBasis>> {
    phases.iter().map(|&p| fourier_basis(d, p, side)).collect()
}

/// `p(a,b|x,y) = |(⟨a_x| ⊗ ⟨b_y|) |ψ⟩|²`
pub fn born_table(
    state: &PureState,
    alice_phases: &[f64],
    bob_phases: &[f64],
    scenario: Scenario,
) -> Result<CorrelationTable> {
    let d = scenario.d();
    if state.d != d {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} vs scenario d = {d}",
            state.d
        )));
    }
    if alice_phases.len() != scenario.n_a() || bob_phases.len() != scenario.n_b() {
        return Err(Error::DimensionMismatch(format!(
            "{} Alice / {} Bob phases for a {}x{} scenario",
            alice_phases.len(),
            bob_phases.len(),
            scenario.n_a(),
            scenario.n_b()
        )));
    }
    let alice = bases(d, alice_phases, Side::Alice)?;
    let bob = bases(d, bob_phases, Side::Bob)?;
    let psi = &state.amplitudes;

    let mut p = vec![0.0; scenario.num_entries()];
    for (x, ax) in alice.iter().enumerate() {
        for (y, by) in bob.iter().enumerate() {
            for a in 0..d {
                // w_r = Σ_q conj(u_a(q)) ψ(q, r)
                let u = ax.vector(a);
                let w: Vec<Complex> = (0..d)
                    .map(|r| (0..d).fold(Complex::ZERO, |acc, q| acc + u[q].conj() * psi[q * d + r]))
                    .collect();
                for b in 0..d {
                    p[scenario.index0(a, b, x, y)] = inner(by.vector(b), &w).norm_sqr();
                }
            }
        }
    }
    CorrelationTable::from_vec(scenario, p)
}

/// Coefficients `c(a,b,x,y)` of a linear Bell functional `Σ c·p`, stored in
/// correlation-table order.
#[derive(Clone, Debug, PartialEq)]
pub struct BellCoefficients {
    scenario: Scenario,
    c: Vec<f64>,
}

impl BellCoefficients {
    pub fn zeros(scenario: Scenario) -> Self {
        BellCoefficients {
            scenario,
            c: vec![0.0; scenario.num_entries()],
        }
    }

    pub fn from_real(scenario: Scenario, c: Vec<f64>) -> Result<Self> {
        if c.len() != scenario.num_entries() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                scenario.num_entries(),
                c.len()
            )));
        }
        Ok(BellCoefficients { scenario, c })
    }

    /// Accepts complex input only when every imaginary part vanishes.
    pub fn from_complex(scenario: Scenario, c: &[Complex]) -> Result<Self> {
        if c.iter().any(|z| z.im != 0.0) {
            return Err(Error::NonRealCoefficient);
        }
        Self::from_real(scenario, c.iter().map(|z| z.re).collect())
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub(crate) fn add0(&mut self, a: usize, b: usize, x: usize, y: usize, v: f64) {
        let i = self.scenario.index0(a, b, x, y);
        self.c[i] += v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c
    }

    /// `Σ c(a,b,x,y) p(a,b|x,y)`
    pub fn evaluate(&self, t: &CorrelationTable) -> Result<f64> {
        if *t.scenario() != self.scenario {
            return Err(Error::DimensionMismatch(
                "Bell functional and table scenarios differ".into(),
            ));
        }
        Ok(self.c.iter().zip(t.as_slice()).map(|(c, p)| c * p).sum())
    }
}

#[derive(Clone, Debug)]
pub struct BellOperatorMatrix {
    d: usize,
    coefficients: BellCoefficients,
    matrix: HermitianMatrix,
}

impl BellOperatorMatrix {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coefficients(&self) -> &BellCoefficients {
        &self.coefficients
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    /// `⟨ψ|𝔅|ψ⟩`
    pub fn expectation(&self, state: &PureState) -> f64 {
        self.matrix.expectation(&state.amplitudes)
    }
}

/// `Σ c(a,b,x,y) P_{a|x} ⊗ P_{b|y}` with rank-1 Fourier projectors.
pub fn bell_operator(
    coefficients: &BellCoefficients,
    alice_phases: &[f64],
    bob_phases: &[f64],
    d: usize,
) -> Result<BellOperatorMatrix> {
    let s = *coefficients.scenario();
    if s.d() != d || alice_phases.len() != s.n_a() || bob_phases.len() != s.n_b() {
        return Err(Error::DimensionMismatch(
            "coefficient table does not match the dimension or phase lists".into(),
        ));
    }
    let alice = bases(d, alice_phases, Side::Alice)?;
    let bob = bases(d, bob_phases, Side::Bob)?;
    let mut m = HermitianMatrix::zeros(d * d);
    let mut u = vec![Complex::ZERO; d * d];
    for (x, ax) in alice.iter().enumerate() {
        for (y, by) in bob.iter().enumerate() {
            for a in 0..d {
                for b in 0..d {
                    let c = coefficients.c[s.index0(a, b, x, y)];
                    if c == 0.0 {
                        continue;
                    }
                    let (va, vb) = (ax.vector(a), by.vector(b));
                    for q in 0..d {
                        for r in 0..d {
                            u[q * d + r] = va[q] * vb[r];
                        }
                    }
                    m.add_outer(c, &u);
                }
            }
        }
    }
    debug_assert!(m.hermiticity_residual() <= HERMITIAN_TOL);
    Ok(BellOperatorMatrix {
        d,
        coefficients: coefficients.clone(),
        matrix: m,
    })
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
pub fn max_eigenpair_of(m: &HermitianMatrix) -> Result<(f64, Vec<Complex>)> {
    let e = m.eigen()?;
    let k = e.values.len() - 1;
    let (lambda, v) = (e.values[k], e.vectors[k].clone());
    let residual = m.residual(lambda, &v);
    if residual > EIGEN_RESIDUAL_TOL {
        return Err(Error::NonConvergence { rotations: 0, residual });
    }
    Ok((lambda, v))
}

pub fn max_eigenpair(op: &BellOperatorMatrix) -> Result<(f64, PureState)> {
    let (lambda, v) = max_eigenpair_of(&op.matrix)?;
    Ok((lambda, PureState::normalized(op.d, v)?))
}

/// The CGLMP Bell operator for settings `x, y ∈ {1, 2}` under the
/// CGLMP-optimal phases.
pub fn cglmp_operator(d: usize) -> Result<BellOperatorMatrix> {
    let coeffs = cglmp::cglmp_coefficients(d)?;
    bell_operator(&coeffs, &CGLMP_ALICE_PHASES, &CGLMP_BOB_PHASES, d)
}

/// The state of maximal CGLMP violation under the CGLMP-optimal
/// measurements.
pub fn cglmp_state(d: usize) -> Result<PureState> {
    if d < 2 {
        return Err(Error::InvalidScenario(format!("d = {d} must be at least 2")));
    }
    Ok(max_eigenpair(&cglmp_operator(d)?)?.1)
}

/// Born table of `state` in the protocol scenario under [`protocol_phases`].
pub fn protocol_table(state: &PureState) -> Result<CorrelationTable> {
    let s = Scenario::protocol(state.d())?;
    let (pa, pb) = protocol_phases(&s)?;
    born_table(state, &pa, &pb, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cglmp::{cglmp_value, idmax_closed_form, Settings};
    use crate::scenario::Party;
    use proptest::prelude::*;

    #[test]
    fn fourier_qubit_basis() {
        let b = fourier_basis(2, 0.0, Side::Alice).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (z, e) in b.vector(0).iter().zip([s, s]) {
            assert!((z.re - e).abs() < 1e-15 && z.im.abs() < 1e-15);
        }
        for (z, e) in b.vector(1).iter().zip([s, -s]) {
            assert!((z.re - e).abs() < 1e-15 && z.im.abs() < 1e-15);
        }
        assert!(fourier_basis(1, 0.0, Side::Bob).is_err());
    }

    proptest! {
        #[test]
        fn fourier_bases_are_orthonormal(d in 2usize..12, phase in -1.0f64..1.0, bob in any::<bool>()) {
            let side = if bob { Side::Bob } else { Side::Alice };
            prop_assert!(fourier_basis(d, phase, side).unwrap().orthonormality_residual() < 1e-12);
        }

        #[test]
        fn top_eigenvalue_is_variational_bound(
            d in 2usize..5,
            re in proptest::collection::vec(-1.0f64..1.0, 16),
            im in proptest::collection::vec(-1.0f64..1.0, 16),
        ) {
            let op = cglmp_operator(d).unwrap();
            let (lambda, _) = max_eigenpair(&op).unwrap();
            let v: Vec<Complex> = (0..d * d).map(|i| Complex::new(re[i], im[i])).collect();
            prop_assume!(norm(&v) > 1e-3);
            let n = norm(&v);
            let v: Vec<Complex> = v.into_iter().map(|z| z / n).collect();
            prop_assert!(op.matrix().expectation(&v) <= lambda + 1e-12);
        }
    }

    #[test]
    fn maximally_entangled_basics() {
        let s = maximally_entangled_state(2);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [c, 0.0, 0.0, c];
        for (z, e) in s.amplitudes().iter().zip(expect) {
            assert!((z.re - e).abs() < 1e-15 && z.im == 0.0);
        }
        for d in 2..9 {
            let s = maximally_entangled_state(d);
            assert!((norm(s.amplitudes()) - 1.0).abs() < 1e-14);
            for l in s.reduced_alice().eigen().unwrap().values {
                assert!((l - 1.0 / d as f64).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn key_block_is_perfectly_correlated_on_maximally_entangled() {
        for d in 2..8 {
            let t = protocol_table(&maximally_entangled_state(d)).unwrap();
            let r = t.validate();
            assert!(r.passed() && r.max_residual() < 1e-12, "d={d} {r:?}");
            for a in 1..=d {
                for b in 1..=d {
                    let e = if a == b { 1.0 / d as f64 } else { 0.0 };
                    assert!((t.prob(a, b, 2, 3) - e).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn maximally_entangled_tables_depend_on_outcome_difference_only() {
        for d in 2..7 {
            let t = protocol_table(&maximally_entangled_state(d)).unwrap();
            for x in 1..=2 {
                for y in 1..=3 {
                    for a in 1..=d {
                        for b in 1..=d {
                            let shifted = t.prob(a % d + 1, b % d + 1, x, y);
                            assert!((t.prob(a, b, x, y) - shifted).abs() < 1e-13);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn marginals_of_protocol_tables_are_uniform() {
        for d in 2..7 {
            for state in [maximally_entangled_state(d), cglmp_state(d).unwrap()] {
                let t = protocol_table(&state).unwrap();
                for x in 1..=2 {
                    for p in t.marginal(Party::Alice, x).unwrap() {
                        assert!((p - 1.0 / d as f64).abs() < 1e-9);
                    }
                }
                for p in t.marginal(Party::Bob, 3).unwrap() {
                    assert!((p - 1.0 / d as f64).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn born_table_dimension_checks() {
        let s = Scenario::protocol(3).unwrap();
        let psi = maximally_entangled_state(3);
        assert!(born_table(&psi, &[0.0], &[0.0, 0.0, 0.0], s).is_err());
        assert!(born_table(&maximally_entangled_state(2), &[0.0, 0.0], &[0.0, 0.0, 0.0], s).is_err());
    }

    #[test]
    fn chsh_value_of_maximally_entangled_state() {
        let t = protocol_table(&maximally_entangled_state(2)).unwrap();
        let v = cglmp_value(&t, Settings::default()).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn zero_coefficients_give_zero_operator() {
        let s = Scenario::new(3, 2, 2, 1, 1).unwrap();
        let op = bell_operator(&BellCoefficients::zeros(s), &[0.0, 0.5], &[0.1, 0.2], 3).unwrap();
        let m = op.matrix();
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(m.get(i, j), Complex::ZERO);
            }
        }
    }

    #[test]
    fn complex_coefficients_rejected() {
        let s = Scenario::new(2, 2, 2, 1, 1).unwrap();
        let mut c = vec![Complex::ONE; 16];
        c[3] = Complex::new(1.0, 0.5);
        assert!(matches!(
            BellCoefficients::from_complex(s, &c),
            Err(Error::NonRealCoefficient)
        ));
        c[3] = Complex::ONE;
        assert!(BellCoefficients::from_complex(s, &c).is_ok());
    }

    #[test]
    fn identity_and_diagonal_eigenpairs() {
        let (l, v) = max_eigenpair_of(&HermitianMatrix::identity(5)).unwrap();
        assert!((l - 1.0).abs() < 1e-15 && (norm(&v) - 1.0).abs() < 1e-14);
        let (l, v) = max_eigenpair_of(&HermitianMatrix::from_real_diagonal(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(l, 4.0);
        assert!((v[3].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cglmp_operator_top_eigenvalues() {
        let (l2, _) = max_eigenpair(&cglmp_operator(2).unwrap()).unwrap();
        assert!((l2 - 2.0 * 2f64.sqrt()).abs() < 1e-9);
        let op3 = cglmp_operator(3).unwrap();
        let (l3, psi) = max_eigenpair(&op3).unwrap();
        assert!((l3 - 2.91485).abs() < 1e-5, "{l3}");
        assert!(l3 > idmax_closed_form(3).unwrap());
        assert!(op3.matrix().residual(l3, psi.amplitudes()) < 1e-9);
    }

    #[test]
    fn qutrit_cglmp_state_schmidt_profile() {
        let s = cglmp_state(3).unwrap().schmidt_coefficients().unwrap();
        // (1, γ, 1) up to normalization and ordering
        let gamma = s[2] / s[0];
        assert!((s[1] / s[0] - 1.0).abs() < 1e-9);
        assert!((gamma - 0.7923).abs() < 1e-3, "{gamma}");
    }

    #[test]
    fn qubit_cglmp_state_is_maximally_entangled() {
        let f = cglmp_state(2).unwrap().fidelity(&maximally_entangled_state(2));
        assert!(f >= 1.0 - 1e-9, "{f}");
    }

    #[test]
    fn cglmp_state_beats_maximally_entangled() {
        for d in 2..=8 {
            let state = cglmp_state(d).unwrap();
            let vs = cglmp_value(&protocol_table(&state).unwrap(), Settings::default()).unwrap();
            let vm = cglmp_value(
                &protocol_table(&maximally_entangled_state(d)).unwrap(),
                Settings::default(),
            )
            .unwrap();
            if d == 2 {
                assert!((vs - vm).abs() < 1e-9);
            } else {
                assert!(vs > idmax_closed_form(d).unwrap() + 1e-6, "d={d} {vs} {vm}");
            }
            if d == 3 {
                assert!((vs - 2.91485).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn state_rows_format() {
        let rows = maximally_entangled_state(2).to_rows();
        assert_eq!(rows.lines().count(), 4);
        assert!(rows.lines().next().unwrap().starts_with("0 0 7.07106781186547"));
    }
}
