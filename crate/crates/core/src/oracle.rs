//! Noisy two-point zeroth-order oracle.
//!
//! A [`NoisyProblem`] exposes only noisy stochastic realizations
//! `f̃(x, ξ) = F(x, ξ) + η(x, ξ)`. The exact objective lives behind the
//! separate [`CleanObjective`] trait, which solvers never require: they are
//! generic over `NoisyProblem` alone and receive clean values only through an
//! optional metrics probe used for tracing.
//!
//! The stochastic realization `ξ` is represented by an [`XiSeed`]. Both points
//! of a pair evaluation receive the same seed, so they see the same `ξ` by
//! construction.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};

/// Seed identifying one realization of the random variable `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct XiSeed(pub u64);

impl XiSeed {
    /// Seed for batch element `index` of `iteration` in the run seeded with `base`.
    ///
    /// Depends only on its three inputs, so batch elements may be evaluated
    /// in any order or on any worker.
    pub fn derive(base: u64, iteration: u64, index: u64) -> XiSeed {
        let mut h = mix(base ^ 0x243f_6a88_85a3_08d3);
        h = mix(h ^ iteration.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        h = mix(h ^ index.wrapping_mul(0xc2b2_ae3d_27d4_eb4f));
        XiSeed(h)
    }
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Black-box stochastic objective with bounded additive noise.
///
/// Implementations must be deterministic in `(x, xi)` and safe to evaluate
/// from several threads at once.
pub trait NoisyProblem: Sync {
    fn dim(&self) -> usize;

    /// One stochastic realization `F(x, ξ)`.
    fn stochastic_value(&self, x: &[f64], xi: XiSeed) -> f64;

    /// Adversarial noise `η(x, ξ)` with `|η| <= delta_noise()`.
    ///
    /// Noise that depends on `x` only simply ignores `xi`.
    fn adversarial_noise(&self, _x: &[f64], _xi: XiSeed) -> f64 {
        0.0
    }

    fn delta_noise(&self) -> f64 {
        0.0
    }

    /// Lipschitz constant `L₂` of the gradient in the Euclidean norm.
    fn lipschitz_grad(&self) -> f64;

    /// Bound `σ²` on the variance of the stochastic gradient.
    fn sigma2(&self) -> f64 {
        0.0
    }

    /// `f̃(x, ξ) = F(x, ξ) + η(x, ξ)`, the only value a solver ever sees.
    fn noisy_value(&self, x: &[f64], xi: XiSeed) -> f64 {
        self.stochastic_value(x, xi) + self.adversarial_noise(x, xi)
    }
}

/// Exact objective `f(x) = E_ξ F(x, ξ)`, for metrics and benchmarks only.
pub trait CleanObjective: Sync {
    fn clean_value(&self, x: &[f64]) -> f64;
}

/// Counter of two-point oracle calls.
#[derive(Debug, Default)]
pub struct OracleLedger {
    calls: AtomicU64,
}

impl OracleLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn record(&self) {
        self.calls.fetch_add(1, Ordering::Relaxed);
    }
}

impl Clone for OracleLedger {
    fn clone(&self) -> Self {
        Self {
            calls: AtomicU64::new(self.calls()),
        }
    }
}

/// Current number of recorded oracle calls.
pub fn oracle_call_count(ledger: &OracleLedger) -> u64 {
    ledger.calls()
}

/// One two-point oracle call: `(f̃(x, ξ), f̃(y, ξ))` under a shared `ξ`.
pub fn evaluate_pair<P: NoisyProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    y: &[f64],
    xi: XiSeed,
    ledger: &OracleLedger,
) -> Result<(f64, f64)> {
    check_dim(problem.dim(), x.len())?;
    check_dim(problem.dim(), y.len())?;
    let pair = (problem.noisy_value(x, xi), problem.noisy_value(y, xi));
    ledger.record();
    Ok(pair)
}

type ValueFn = dyn Fn(&[f64], XiSeed) -> f64 + Send + Sync;
type CleanFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Problem assembled from closures; handy for tests and quick experiments.
pub struct ClosureProblem {
    dim: usize,
    value: Box<ValueFn>,
    noise: Option<Box<ValueFn>>,
    clean: Option<Box<CleanFn>>,
    delta_noise: f64,
    lipschitz_grad: f64,
    sigma2: f64,
}

impl ClosureProblem {
    /// `value` is the stochastic objective `F(x, ξ)`.
    pub fn new<F>(dim: usize, lipschitz_grad: f64, value: F) -> Self
    where
        F: Fn(&[f64], XiSeed) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Box::new(value),
            noise: None,
            clean: None,
            delta_noise: 0.0,
            lipschitz_grad,
            sigma2: 0.0,
        }
    }

    /// Deterministic problem `F(x, ξ) = f(x)`, which is also its own clean objective.
    pub fn deterministic<F>(dim: usize, lipschitz_grad: f64, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + Clone + 'static,
    {
        let clean = f.clone();
        let mut problem = Self::new(dim, lipschitz_grad, move |x, _| f(x));
        problem.clean = Some(Box::new(clean));
        problem
    }

    /// Adds noise `η(x, ξ)`; the caller guarantees `|η| <= delta`.
    pub fn with_noise<G>(mut self, delta: f64, noise: G) -> Self
    where
        G: Fn(&[f64], XiSeed) -> f64 + Send + Sync + 'static,
    {
        self.delta_noise = delta;
        self.noise = Some(Box::new(noise));
        self
    }

    pub fn with_clean<G>(mut self, clean: G) -> Self
    where
        G: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.clean = Some(Box::new(clean));
        self
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = sigma2;
        self
    }
}

impl std::fmt::Debug for ClosureProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosureProblem")
            .field("dim", &self.dim)
            .field("delta_noise", &self.delta_noise)
            .field("lipschitz_grad", &self.lipschitz_grad)
            .field("sigma2", &self.sigma2)
            .field("has_clean", &self.clean.is_some())
            .finish_non_exhaustive()
    }
}

impl NoisyProblem for ClosureProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn stochastic_value(&self, x: &[f64], xi: XiSeed) -> f64 {
        (self.value)(x, xi)
    }

    fn adversarial_noise(&self, x: &[f64], xi: XiSeed) -> f64 {
        self.noise.as_ref().map_or(0.0, |g| g(x, xi))
    }

    fn delta_noise(&self) -> f64 {
        self.delta_noise
    }

    fn lipschitz_grad(&self) -> f64 {
        self.lipschitz_grad
    }

    fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

impl CleanObjective for ClosureProblem {
    /// Panics if the problem was built without a clean objective.
    fn clean_value(&self, x: &[f64]) -> f64 {
        let clean = self
            .clean
            .as_ref()
            .expect("ClosureProblem has no clean objective attached");
        clean(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::linalg::{dot, norm2};

    fn linear(c: Vec<f64>) -> ClosureProblem {
        let dim = c.len();
        ClosureProblem::deterministic(dim, 1.0, move |x: &[f64]| dot(&c, x))
    }

    #[test]
    fn linear_pair_is_exact() {
        let c = vec![1.0, -2.0, 0.5];
        let problem = linear(c.clone());
        let ledger = OracleLedger::new();
        let (a, b) = evaluate_pair(&problem, &[0.0; 3], &c, XiSeed(7), &ledger).unwrap();
        assert_eq!(a, 0.0);
        assert_eq!(b, dot(&c, &c));
        assert_eq!(ledger.calls(), 1);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let problem = linear(vec![1.0, 2.0]);
        let ledger = OracleLedger::new();
        let err = evaluate_pair(&problem, &[0.0; 3], &[0.0; 2], XiSeed(0), &ledger).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                got: 3
            }
        );
        assert_eq!(ledger.calls(), 0);
    }

    #[test]
    fn ledger_counts_calls() {
        let problem = linear(vec![1.0]);
        let ledger = OracleLedger::new();
        assert_eq!(oracle_call_count(&ledger), 0);
        for i in 0..3 {
            evaluate_pair(&problem, &[1.0], &[2.0], XiSeed(i), &ledger).unwrap();
        }
        assert_eq!(oracle_call_count(&ledger), 3);
    }

    #[test]
    fn sinusoidal_noise_vanishes_at_origin() {
        let delta = 0.1;
        let problem = ClosureProblem::new(4, 1.0, |_, _| 0.0)
            .with_noise(delta, move |x, _| delta * norm2(x).sin());
        assert_eq!(problem.adversarial_noise(&[0.0; 4], XiSeed(3)), 0.0);
    }

    #[test]
    fn shared_xi_cancels_separable_stochastic_part() {
        // F(x, ξ) = f(x) + h(ξ): the pair difference must not depend on ξ.
        let problem = ClosureProblem::new(2, 1.0, |x, xi| {
            let h = (xi.0 % 10_007) as f64 * 0.37;
            x[0] * x[0] - 3.0 * x[1] + h
        })
        .with_noise(0.2, |x, _| 0.2 * norm2(x).sin());
        let ledger = OracleLedger::new();
        let x = [0.3, -1.2];
        let y = [1.5, 0.4];
        let expected = (0.09 + 3.6 + 0.2 * norm2(&x).sin()) - (2.25 - 1.2 + 0.2 * norm2(&y).sin());
        for s in 0..100 {
            let (a, b) =
                evaluate_pair(&problem, &x, &y, XiSeed::derive(11, s, 0), &ledger).unwrap();
            assert!((a - b - expected).abs() < 1e-9);
        }
        assert_eq!(ledger.calls(), 100);
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for k in 0..50 {
            for i in 0..50 {
                assert!(seen.insert(XiSeed::derive(3, k, i)));
            }
        }
        assert_ne!(XiSeed::derive(1, 0, 0), XiSeed::derive(2, 0, 0));
    }
}
