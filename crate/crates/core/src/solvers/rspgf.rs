use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::oracle::NoisyProblem;

use super::{DirectionalSearch, Randomness, Snapshot};

/// Settings of the random-search baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RspgfConfig {
    pub n_iters: usize,
    pub batch: usize,
    pub smoothing: f64,
    /// Stepsize; defaults to `1 / (4 (n + 4) L₂)`.
    pub step: f64,
    pub base_seed: u64,
}

impl RspgfConfig {
    pub fn new(dim: usize, lipschitz_grad: f64, n_iters: usize) -> Self {
        Self {
            n_iters,
            batch: 1,
            smoothing: 1e-6,
            step: Self::default_step(dim, lipschitz_grad),
            base_seed: 0,
        }
    }

    pub fn default_step(dim: usize, lipschitz_grad: f64) -> f64 {
        1.0 / (4.0 * (dim as f64 + 4.0) * lipschitz_grad)
    }
}

/// Euclidean random gradient-free baseline, reimplemented for comparison
/// in the style of randomized stochastic gradient-free (RSPGF) methods:
///
/// ```text
/// x_{k+1} = x_k − step · n · ∇̃ᵐf^t(x_k)
/// ```
///
/// The factor `n` turns the sphere-direction estimate into an estimate of the
/// full gradient (`E[n e eᵀ] = I`), matching the Gaussian-direction
/// convention the default stepsize was designed for.
#[derive(Debug, Clone)]
pub struct Rspgf<'p, P: NoisyProblem + ?Sized> {
    problem: &'p P,
    config: RspgfConfig,
    x: Vec<f64>,
    k: usize,
    random: Randomness,
}

impl<'p, P: NoisyProblem + ?Sized> Rspgf<'p, P> {
    pub fn new(problem: &'p P, x0: &[f64], config: RspgfConfig) -> Result<Self> {
        check_dim(problem.dim(), x0.len())?;
        if config.batch < 1 {
            return Err(invalid("batch", "batch size must be at least 1"));
        }
        if !(config.step > 0.0 && config.step.is_finite()) {
            return Err(invalid(
                "step",
                format!("must be positive, got {}", config.step),
            ));
        }
        if !(config.smoothing > 0.0 && config.smoothing.is_finite()) {
            return Err(invalid(
                "smoothing",
                format!("must be positive, got {}", config.smoothing),
            ));
        }
        let random = Randomness::new(problem.dim(), config.base_seed)?;
        Ok(Self {
            problem,
            config,
            x: x0.to_vec(),
            k: 0,
            random,
        })
    }
}

impl<P: NoisyProblem + ?Sized> DirectionalSearch for Rspgf<'_, P> {
    fn step(&mut self) -> Result<()> {
        let g = self.random.estimate(
            self.problem,
            &self.x,
            self.config.smoothing,
            self.config.batch,
            self.k,
        )?;
        let scale = self.config.step * self.problem.dim() as f64;
        for (x, gi) in self.x.iter_mut().zip(&g.vector) {
            *x -= scale * gi;
        }
        self.k += 1;
        Ok(())
    }

    fn iteration(&self) -> usize {
        self.k
    }

    fn output(&self) -> &[f64] {
        &self.x
    }

    fn oracle_calls(&self) -> u64 {
        self.random.calls()
    }

    fn snapshot(&self) -> Snapshot<'_> {
        Snapshot::Rspgf { x: &self.x }
    }
}
