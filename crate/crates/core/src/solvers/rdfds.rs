use crate::error::{check_dim, Result};
use crate::oracle::NoisyProblem;
use crate::prox::MirrorPoint;

use super::{DirectionalSearch, Randomness, Snapshot, SolverParams};

/// Randomized derivative-free directional search: mirror steps with a
/// constant stepsize `α = γ / (48 n ρ_n L₂)`, returning the running average
/// `x̄_k = (1/k) Σ_{j<k} x_j` of the iterates.
#[derive(Debug, Clone)]
pub struct Rdfds<'p, P: NoisyProblem + ?Sized> {
    problem: &'p P,
    params: SolverParams,
    alpha: f64,
    x: MirrorPoint,
    average: Vec<f64>,
    k: usize,
    random: Randomness,
}

impl<'p, P: NoisyProblem + ?Sized> Rdfds<'p, P> {
    pub fn new(problem: &'p P, params: SolverParams, x0: &[f64]) -> Result<Self> {
        params.validate(problem.dim())?;
        check_dim(problem.dim(), x0.len())?;
        let alpha = params.rdfds_stepsize()?;
        let random = Randomness::new(problem.dim(), params.base_seed)?;
        let x = params.setup.mirror_point(x0)?;
        Ok(Self {
            problem,
            params,
            alpha,
            x,
            average: x0.to_vec(),
            k: 0,
            random,
        })
    }

    pub fn stepsize(&self) -> f64 {
        self.alpha
    }

    /// Current (not averaged) iterate `x_k`.
    pub fn iterate(&self) -> &[f64] {
        self.x.primal()
    }
}

impl<P: NoisyProblem + ?Sized> DirectionalSearch for Rdfds<'_, P> {
    fn step(&mut self) -> Result<()> {
        let k = self.k;
        // the estimate at x_k drives the step from x_k
        let g = self.random.estimate(
            self.problem,
            self.x.primal(),
            self.params.smoothing,
            self.params.batch,
            k,
        )?;

        let weight = 1.0 / (k as f64 + 1.0);
        for (avg, x) in self.average.iter_mut().zip(self.x.primal()) {
            *avg += (x - *avg) * weight;
        }

        let scale = self.alpha * self.params.setup.dim() as f64;
        let s: Vec<f64> = g.vector.iter().map(|gi| scale * gi).collect();
        self.params.setup.advance(&mut self.x, &s)?;

        self.k += 1;
        Ok(())
    }

    fn iteration(&self) -> usize {
        self.k
    }

    fn output(&self) -> &[f64] {
        &self.average
    }

    fn oracle_calls(&self) -> u64 {
        self.random.calls()
    }

    fn snapshot(&self) -> Snapshot<'_> {
        Snapshot::Rdfds {
            x: self.x.primal(),
            average: &self.average,
        }
    }
}
