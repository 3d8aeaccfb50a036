//! Bell expressions for finite measurement scenarios.
//!
//! The crate covers the full pipeline for tripartite (and other small)
//! Bell-type expressions:
//!
//! * [`scenario`]: scenarios, marginal-probability expressions and
//!   correlator expressions with exact rational coefficients.
//! * [`builtins`]: the registered expressions (`g-paper`, `mermin`).
//! * [`parser`]: the line-oriented text format and the full-joint fixture
//!   format.
//! * [`lhv`]: deterministic local strategies, full-joint expansion and exact
//!   local bounds.
//! * [`quantum`]: Born-rule probabilities for multi-qubit states under
//!   projective qubit measurements, white-noise mixing, violation reports.
//! * [`noise`]: critical white-noise fraction, closed form and bisection.
//! * [`optimize`]: seeded Nelder–Mead search over Bloch angles.
//! * [`report`]: machine-readable reports used by the command-line tool.

pub mod builtins;
pub mod error;
pub mod lhv;
pub mod noise;
pub mod optimize;
pub mod parser;
pub mod quantum;
pub mod rational;
pub mod report;
pub mod scenario;

pub use builtins::{builtin, NamedExpression, ValueMode, BUILTIN_NAMES};
pub use error::{Error, Result};
pub use lhv::{
    enumerate_strategies, evaluate_on_strategy, expand_full_joint, local_bounds, trivial_bounds,
    DiffReport, FullJointExpansion, LocalBoundResult, Strategy,
};
pub use noise::{tolerance_by_root_scan, white_noise_tolerance, NoiseReport};
pub use optimize::{optimize_measurements, AngleParameterization, OptimizationResult, OptimizerConfig};
pub use quantum::{
    correlator, expression_value, ghz_state, joint_probability, mix_with_white_noise, paper_model,
    violation_report, BlochVector, DensityMatrix, MeasurementModel, PureState, QuantumState,
    ViolationReport,
};
pub use rational::Coeff;
pub use scenario::{BellExpression, CorrelatorExpression, Expression, MarginalKey, MarginalTerm, Scenario};
