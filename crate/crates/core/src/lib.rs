//! Upper bounds on device-independent QKD key rates for `d`-outcome Bell
//! scenarios under convex-combination (CC) attacks.
//!
//! Eve distributes, round by round, either a deterministic local strategy
//! (whose outcomes she knows) or an ideal nonlocal correlation (about which
//! she knows nothing). Maximizing her local weight by linear programming and
//! subtracting the error-correction cost yields `r_ub`, the upper bound on
//! the one-way key rate, and the critical visibility at which it vanishes.
//!
//! Module map:
//! - [`scenario`]: scenario indexing, correlation tables, noise mixing.
//! - [`quantum`]: states, Fourier measurements, Bell operators, Born tables.
//! - [`cglmp`]: the CGLMP expression and its closed-form maximum.
//! - [`polytope`]: deterministic strategies and the CC-attack LP.
//! - [`keyrate`]: PA/EC terms, `r_ub`, critical visibilities, asymptotics.
//! - [`cli`]: the `diqkd-cc` command-line front end.

pub mod cglmp;
pub mod cli;
pub mod complex;
pub mod error;
pub mod hermitian;
pub mod keyrate;
pub mod polytope;
pub mod quantum;
pub mod scenario;
pub mod simplex;

pub use error::{Error, Result};
pub use keyrate::{Branch, CriticalVisibility, KeyRateModel, KeyRatePoint};
pub use polytope::{CcDecomposition, DeterministicStrategy};
pub use quantum::{BellOperatorMatrix, MeasurementBasis, PureState};
pub use scenario::{CorrelationTable, Party, Scenario, ValidationReport, Visibility};
