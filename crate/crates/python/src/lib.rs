//! Python bindings for `diqkd-cc`, importable as `diqkd_cc`.

use diqkd_cc::cglmp::{self, Settings};
use diqkd_cc::keyrate::{self, Branch, KeyRateModel};
use diqkd_cc::polytope::{self, DEFAULT_STRATEGY_CAP};
use diqkd_cc::quantum::{cglmp_state, maximally_entangled_state, protocol_table};
use diqkd_cc::scenario::{self, Visibility};
use diqkd_cc::Error;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn vis(v: f64) -> PyResult<Visibility> {
    Visibility::new(v).map_err(to_py)
}

fn branch(state: &str, method: Option<&str>) -> PyResult<Branch> {
    match (state, method) {
        ("max", None | Some("analytic")) => Ok(Branch::AnalyticMaxEntangled),
        ("max", Some("lp")) => Ok(Branch::LpMaxEntangled),
        ("cglmp", None | Some("lp")) => Ok(Branch::LpCglmpState),
        ("cglmp", Some("analytic")) => Err(PyValueError::new_err("the analytic method applies only to state='max'")),
        _ => Err(PyValueError::new_err(format!(
            "state must be 'max' or 'cglmp' and method 'analytic' or 'lp' (got {state:?}, {method:?})"
        ))),
    }
}

/// Conditional probability table `p(a,b|x,y)`; indices are 1-based.
#[pyclass(name = "CorrelationTable", module = "diqkd_cc", frozen)]
struct PyTable(scenario::CorrelationTable);

#[pymethods]
impl PyTable {
    /// Parses the plain-text `x y a b p` format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        scenario::CorrelationTable::from_text(text).map(PyTable).map_err(to_py)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.scenario().d()
    }

    #[getter]
    fn n_a(&self) -> usize {
        self.0.scenario().n_a()
    }

    #[getter]
    fn n_b(&self) -> usize {
        self.0.scenario().n_b()
    }

    fn prob(&self, a: usize, b: usize, x: usize, y: usize) -> PyResult<f64> {
        let s = self.0.scenario();
        if [a, b].iter().any(|&v| v == 0 || v > s.d()) || x == 0 || x > s.n_a() || y == 0 || y > s.n_b() {
            return Err(PyValueError::new_err("index out of range (indices are 1-based)"));
        }
        Ok(self.0.prob(a, b, x, y))
    }

    /// Flat probabilities ordered by `(x, y, a, b)`.
    fn to_list(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    /// `V·p + (1−V)/d²`.
    fn mix(&self, v: f64) -> PyResult<Self> {
        Ok(PyTable(self.0.mix_with_white_noise(vis(v)?)))
    }

    /// Largest positivity, normalization or no-signaling residual.
    fn max_residual(&self) -> f64 {
        self.0.validate().max_residual()
    }

    fn cglmp_value(&self) -> PyResult<f64> {
        cglmp::cglmp_value(&self.0, Settings::default()).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let s = self.0.scenario();
        format!("CorrelationTable(d={}, n_a={}, n_b={})", s.d(), s.n_a(), s.n_b())
    }
}

#[pyclass(name = "KeyRatePoint", module = "diqkd_cc", frozen, get_all)]
struct PyPoint {
    v: f64,
    q_l: f64,
    pa_term: f64,
    ec_term: f64,
    r_ub: f64,
    branch: &'static str,
}

impl From<keyrate::KeyRatePoint> for PyPoint {
    fn from(p: keyrate::KeyRatePoint) -> Self {
        PyPoint {
            v: p.v,
            q_l: p.q_l,
            pa_term: p.pa_term,
            ec_term: p.ec_term,
            r_ub: p.r_ub,
            branch: p.branch.name(),
        }
    }
}

#[pymethods]
impl PyPoint {
    fn __repr__(&self) -> String {
        format!(
            "KeyRatePoint(v={}, q_l={}, pa_term={}, ec_term={}, r_ub={}, branch={:?})",
            self.v, self.q_l, self.pa_term, self.ec_term, self.r_ub, self.branch
        )
    }
}

/// Noise-free protocol table of the maximally entangled state.
#[pyfunction]
fn max_entangled_table(d: usize) -> PyResult<PyTable> {
    protocol_table(&maximally_entangled_state(d))
        .map(PyTable)
        .map_err(to_py)
}

/// Noise-free protocol table of the state maximizing the CGLMP value.
#[pyfunction]
fn cglmp_state_table(d: usize) -> PyResult<PyTable> {
    cglmp_state(d)
        .and_then(|s| protocol_table(&s))
        .map(PyTable)
        .map_err(to_py)
}

#[pyfunction]
fn idmax_closed_form(d: usize) -> PyResult<f64> {
    cglmp::idmax_closed_form(d).map_err(to_py)
}

#[pyfunction]
fn idmax_asymptotic() -> f64 {
    cglmp::idmax_asymptotic()
}

/// `2 / I_d^max`
#[pyfunction]
fn local_visibility(d: usize) -> PyResult<f64> {
    cglmp::local_visibility_max_entangled(d).map_err(to_py)
}

#[pyfunction]
fn q_l_analytic(d: usize, v: f64) -> PyResult<f64> {
    keyrate::q_l_analytic(d, vis(v)?).map_err(to_py)
}

#[pyfunction]
fn rub_analytic(d: usize, v: f64) -> PyResult<PyPoint> {
    keyrate::rub_analytic(d, vis(v)?).map(Into::into).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (d, v, state = "max"))]
fn rub_lp(py: Python<'_>, d: usize, v: f64, state: &str) -> PyResult<PyPoint> {
    let b = branch(state, Some("lp"))?;
    let v = vis(v)?;
    py.detach(|| keyrate::rub_lp(d, v, b)).map(Into::into).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (d, state = "max", method = None))]
fn critical_visibility(py: Python<'_>, d: usize, state: &str, method: Option<&str>) -> PyResult<f64> {
    let b = branch(state, method)?;
    py.detach(|| keyrate::critical_visibility(d, b))
        .map(|c| c.v_crit)
        .map_err(to_py)
}

#[pyfunction]
fn vcrit_asymptotic() -> f64 {
    keyrate::vcrit_asymptotic()
}

#[pyfunction]
#[pyo3(signature = (d, v_min, v_max, steps, state = "max", method = None))]
fn keyrate_curve(
    py: Python<'_>,
    d: usize,
    v_min: f64,
    v_max: f64,
    steps: usize,
    state: &str,
    method: Option<&str>,
) -> PyResult<Vec<PyPoint>> {
    let b = branch(state, method)?;
    py.detach(|| keyrate::keyrate_curve(d, b, v_min, v_max, steps))
        .map(|pts| pts.into_iter().map(Into::into).collect())
        .map_err(to_py)
}

/// Whether the table is a mixture of deterministic local strategies.
#[pyfunction]
#[pyo3(signature = (table, strategy_cap = DEFAULT_STRATEGY_CAP))]
fn is_local(py: Python<'_>, table: &PyTable, strategy_cap: u64) -> PyResult<bool> {
    let t = table.0.clone();
    py.detach(|| polytope::locality_check(&t, strategy_cap))
        .map(|c| c.local)
        .map_err(to_py)
}

/// Eve's optimal CC decomposition: `(q_l, q_nl, residual)`.
#[pyfunction]
fn max_local_weight(py: Python<'_>, observed: &PyTable, nonlocal: &PyTable) -> PyResult<(f64, f64, f64)> {
    let (o, p) = (observed.0.clone(), nonlocal.0.clone());
    py.detach(|| polytope::max_local_weight(&o, &p))
        .map(|dec| (dec.q_l, dec.q_nl, dec.residual))
        .map_err(to_py)
}

/// Smallest visibility with a positive privacy-amplification term.
#[pyfunction]
#[pyo3(signature = (d, state = "max"))]
fn pa_zero_visibility(py: Python<'_>, d: usize, state: &str) -> PyResult<f64> {
    let b = branch(state, Some("lp"))?;
    py.detach(|| KeyRateModel::new(d, b).and_then(|m| m.pa_zero_visibility()))
        .map_err(to_py)
}

#[pymodule]
#[pyo3(name = "diqkd_cc")]
fn diqkd_cc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTable>()?;
    m.add_class::<PyPoint>()?;
    m.add_function(wrap_pyfunction!(max_entangled_table, m)?)?;
    m.add_function(wrap_pyfunction!(cglmp_state_table, m)?)?;
    m.add_function(wrap_pyfunction!(idmax_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(idmax_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(local_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(q_l_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(rub_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(rub_lp, m)?)?;
    m.add_function(wrap_pyfunction!(critical_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(vcrit_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(keyrate_curve, m)?)?;
    m.add_function(wrap_pyfunction!(is_local, m)?)?;
    m.add_function(wrap_pyfunction!(max_local_weight, m)?)?;
    m.add_function(wrap_pyfunction!(pa_zero_visibility, m)?)?;
    m.add("CATALAN", cglmp::CATALAN)?;
    Ok(())
}
