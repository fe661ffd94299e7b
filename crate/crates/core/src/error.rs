use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("{what} = {value} out of range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    #[error("invalid visibility {0}: must lie in [0, 1]")]
    InvalidVisibility(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("table is signaling: marginal residual {residual:.3e}")]
    Signaling { residual: f64 },

    #[error("Bell operator coefficients must be real")]
    NonRealCoefficient,

    #[error("eigensolver did not converge after {rotations} rotations (residual {residual:.3e})")]
    NonConvergence { rotations: usize, residual: f64 },

    #[error("{count} deterministic strategies exceed the cap of {cap}")]
    StrategyCap { count: u128, cap: u64 },

    #[error("linear program infeasible: max residual {residual:.3e}")]
    Infeasible { residual: f64 },

    #[error("linear program unbounded")]
    Unbounded,

    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),

    #[error("no sign change of r_ub on [{lo}, {hi}] (values {f_lo:.3e}, {f_hi:.3e})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Infeasible { .. }
                | Error::Unbounded
                | Error::IterationLimit(_)
                | Error::NoSignChange { .. }
                | Error::Signaling { .. }
        )
    }
}
