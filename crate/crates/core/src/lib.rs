//! Value at Risk, Expected Shortfall and Worst Conditional Expectation on
//! finite-support distributions, with the worst-case dual measure and
//! executable checks of the dual representation
//! `ES_α(X) = sup_{Q ∈ P_α} E_Q(-X)`.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximation;
pub mod cli;
pub mod distributions;
pub mod duality;
pub mod error;
pub mod risk_measures;

pub use distributions::{DiscreteDistribution, FiniteSpace, Level};
pub use duality::{DensityMeasure, Orientation};
pub use error::{Error, Result};
pub use risk_measures::RiskReport;

/// Tolerance on identities that hold exactly up to rounding of a single
/// construction (unit mass, density caps, attainment).
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Tolerance when comparing two independently computed quantities.
pub const ORACLE_TOLERANCE: f64 = 1e-9;
