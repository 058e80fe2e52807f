//! Probabilistic compatibility of dichotomous variables and everything that
//! hangs off that question: given pairwise distributions, does one joint
//! distribution reproduce them all?
//!
//! The toolkit decides that question by exact-rational linear programming
//! (with a float fallback for large atom spaces), quantifies incompatibility
//! through minimal-negativity signed joints, evaluates Bell, Wigner and CHSH
//! expressions, predicts two-photon singlet statistics, simulates
//! context-indexed hidden-variable models with detection and run-drift
//! effects, and analyzes coincidence-count data for deviations that the
//! correlation expression happens to cancel.
//!
//! Conventions used throughout:
//! - angles are radians in memory, degrees in files and on the CLI;
//! - atoms index sign vectors with bit `k` set iff variable `k` is `+1`;
//! - every sampler is a pure function of `(spec, trials, seed)`.

pub mod analysis;
pub mod config;
mod elimination;
pub mod inequality;
pub mod io;
pub mod marginal;
pub mod scalar;
pub mod simplex;
pub mod sim;
pub mod singlet;
#[doc(hidden)]
pub mod testutil;
pub mod types;

pub use num_rational::BigRational;

pub use analysis::{
    anomaly_analysis, empirical_table, evaluate_cross_context, AnomalyReport,
    CrossContextEvaluation, InequalityKind,
};
pub use inequality::{
    bell_covariance, chsh, leggett_joint_average, leggett_two_step, model_from_joint, wigner,
    InequalityReport, JointWeights, LeggetModel,
};
pub use marginal::{
    brute_force_compatibility, certificate_gap, check_compatibility, solve_quasi, QuasiSolution,
    SolverOptions,
};
pub use scalar::Scalar;
pub use sim::{
    post_select, run_with_drift, sample_context, sample_context_in_run, sample_from_table,
    sample_threshold, ContextSpec, Density, DetectionRule, DriftRule, EventStream, NoiseLaw,
    OutcomeRule, RunDriftSpec, ThresholdDetectionSpec,
};
pub use singlet::{singlet_correlation, singlet_family, singlet_pair_table, AngleSet, Pairing};
pub use types::{
    correlation_of, validate_family, CoincidenceRecord, CompatibilityVerdict, Feasibility,
    MarginalFamily, Outcome, PairwiseTable, Sign, SignedJoint, VariableId,
};
