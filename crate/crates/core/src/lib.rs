//! Derivative-free stochastic convex optimization with two-point feedback.
//!
//! The crate provides accelerated (ARDFDS) and non-accelerated (RDFDS)
//! randomized directional search methods that only see noisy pairs of
//! objective values, under either the Euclidean or the ℓ1 proximal setup,
//! together with a benchmark harness built around Nesterov's worst-case
//! quadratic.
//!
//! Module map:
//!
//! * [`oracle`]: noisy problems, the two-point oracle and its call ledger.
//! * [`estimator`]: sphere sampling and the batched finite-difference
//!   gradient estimator.
//! * [`prox`]: proximal setups, Bregman divergences and mirror steps.
//! * [`solvers`]: ARDFDS, RDFDS, a random-search baseline and the
//!   parameter planner.
//! * [`benchmarks`]: the noisy Nesterov problem and multi-seed experiments.

pub mod benchmarks;
pub mod error;
pub mod estimator;
mod linalg;
pub mod oracle;
pub mod prox;
pub mod solvers;

pub use error::{Error, Result};
pub use estimator::{
    estimate_gradient, sphere_moments, GradientEstimate, SeedStream, SphereMoments, SphereSampler,
};
pub use oracle::{
    evaluate_pair, CleanObjective, ClosureProblem, NoisyProblem, OracleLedger, XiSeed,
};
pub use prox::{rho, DualExponent, Geometry, MirrorPoint, ProxSetup};
pub use solvers::{
    ardfds, plan_parameters, rdfds, rspgf_baseline, Ardfds, ConvergenceTrace, DirectionalSearch,
    Method, Metrics, PlannedParameters, Rdfds, Rspgf, SolverParams, TraceRecord,
};
