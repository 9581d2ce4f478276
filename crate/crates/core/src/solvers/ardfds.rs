use crate::error::{check_dim, Result};
use crate::oracle::NoisyProblem;
use crate::prox::MirrorPoint;

use super::{DirectionalSearch, Randomness, Snapshot, SolverParams};

/// Accelerated randomized derivative-free directional search.
///
/// Each iteration couples a Euclidean gradient-type step on `y` with a mirror
/// step on `z` in the chosen proximal setup:
///
/// ```text
/// τ_k     = 2 / (k + 2)
/// x_{k+1} = τ_k z_k + (1 − τ_k) y_k
/// g       = ∇̃ᵐf^t(x_{k+1})
/// y_{k+1} = x_{k+1} − g / (2 L₂)
/// z_{k+1} = argmin_z { α_{k+1} n ⟨g, z − z_k⟩ + V[z_k](z) }
/// ```
#[derive(Debug, Clone)]
pub struct Ardfds<'p, P: NoisyProblem + ?Sized> {
    problem: &'p P,
    params: SolverParams,
    x: Vec<f64>,
    y: Vec<f64>,
    z: MirrorPoint,
    k: usize,
    random: Randomness,
}

impl<'p, P: NoisyProblem + ?Sized> Ardfds<'p, P> {
    pub fn new(problem: &'p P, params: SolverParams, x0: &[f64]) -> Result<Self> {
        params.validate(problem.dim())?;
        check_dim(problem.dim(), x0.len())?;
        let random = Randomness::new(problem.dim(), params.base_seed)?;
        let z = params.setup.mirror_point(x0)?;
        Ok(Self {
            problem,
            params,
            x: x0.to_vec(),
            y: x0.to_vec(),
            z,
            k: 0,
            random,
        })
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// `τ_k = 2 / (k + 2)`.
    pub fn coupling(k: usize) -> f64 {
        2.0 / (k as f64 + 2.0)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        self.z.primal()
    }
}

impl<P: NoisyProblem + ?Sized> DirectionalSearch for Ardfds<'_, P> {
    fn step(&mut self) -> Result<()> {
        let k = self.k;
        let tau = Self::coupling(k);
        // y + τ(z − y) leaves x = y exactly when z = y
        for ((x, y), z) in self.x.iter_mut().zip(&self.y).zip(self.z.primal()) {
            *x = y + tau * (z - y);
        }

        let g = self.random.estimate(
            self.problem,
            &self.x,
            self.params.smoothing,
            self.params.batch,
            k,
        )?;

        let inv_2l = 1.0 / (2.0 * self.params.lipschitz_grad);
        for ((y, x), gi) in self.y.iter_mut().zip(&self.x).zip(&g.vector) {
            *y = x - inv_2l * gi;
        }

        let scale = self.params.ardfds_stepsize(k)? * self.params.setup.dim() as f64;
        let s: Vec<f64> = g.vector.iter().map(|gi| scale * gi).collect();
        self.params.setup.advance(&mut self.z, &s)?;

        self.k += 1;
        Ok(())
    }

    fn iteration(&self) -> usize {
        self.k
    }

    fn output(&self) -> &[f64] {
        &self.y
    }

    fn oracle_calls(&self) -> u64 {
        self.random.calls()
    }

    fn snapshot(&self) -> Snapshot<'_> {
        Snapshot::Ardfds {
            x: &self.x,
            y: &self.y,
            z: self.z.primal(),
        }
    }
}
