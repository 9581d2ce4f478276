//! Uniform directions on the unit sphere and the batched two-point
//! finite-difference gradient estimator
//!
//! ```text
//! ∇̃ᵐf^t(x) = (1/m) Σᵢ [f̃(x + t·e, ξᵢ) − f̃(x, ξᵢ)] / t · e
//! ```
//!
//! One direction `e` is shared by the whole batch; only `ξ` changes between
//! batch members.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::linalg::{add_scaled, norm2};
use crate::oracle::{evaluate_pair, NoisyProblem, OracleLedger, XiSeed};
use crate::prox::{rho, DualExponent};

/// Batches at least this large fan their oracle calls out to the rayon pool.
pub const PARALLEL_BATCH_MIN: usize = 16;

/// Source of directions uniformly distributed on the unit Euclidean sphere.
#[derive(Debug, Clone)]
pub struct SphereSampler {
    dim: usize,
    rng: ChaCha8Rng,
}

impl SphereSampler {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "sphere dimension must be at least 1"));
        }
        Ok(Self {
            dim,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalized standard Gaussian vector.
    pub fn sample(&mut self) -> Vec<f64> {
        let mut e = vec![0.0; self.dim];
        self.sample_into(&mut e);
        e
    }

    pub fn sample_into(&mut self, e: &mut [f64]) {
        debug_assert_eq!(e.len(), self.dim);
        loop {
            for v in e.iter_mut() {
                *v = StandardNormal.sample(&mut self.rng);
            }
            let norm = norm2(e);
            // an all-zero draw has probability zero, but redraw if it happens
            if norm > 0.0 && norm.is_finite() {
                e.iter_mut().for_each(|v| *v /= norm);
                return;
            }
        }
    }
}

/// Monte Carlo estimates of `E‖e‖_q²` and `E⟨s, e⟩²‖e‖_q²` for sphere
/// directions, next to their bounds `ρ_n` and `(6ρ_n/n)‖s‖₂²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereMoments {
    pub n: usize,
    pub q: DualExponent,
    pub samples: usize,
    pub norm_mean: f64,
    pub norm_se: f64,
    pub norm_bound: f64,
    pub projected_mean: f64,
    pub projected_se: f64,
    pub projected_bound: f64,
}

impl SphereMoments {
    /// Both means lie below their bounds plus three standard errors.
    pub fn within_bounds(&self) -> bool {
        self.norm_mean <= self.norm_bound + 3.0 * self.norm_se
            && self.projected_mean <= self.projected_bound + 3.0 * self.projected_se
    }
}

/// Samples `samples` directions in dimension `n >= 8`; `s` is a fixed
/// standard Gaussian vector drawn from the same seed.
pub fn sphere_moments(
    n: usize,
    q: DualExponent,
    samples: usize,
    seed: u64,
) -> Result<SphereMoments> {
    let bound = rho(n, q)?;
    if samples < 2 {
        return Err(invalid(
            "samples",
            "at least two samples are needed for a standard error",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut sampler = SphereSampler::new(n, XiSeed::derive(seed, 0, 0).0)?;
    let mut e = vec![0.0; n];
    let (mut norm, mut projected) = (Welford::default(), Welford::default());
    for _ in 0..samples {
        sampler.sample_into(&mut e);
        let nq = q.norm(&e).powi(2);
        let inner: f64 = s.iter().zip(&e).map(|(a, b)| a * b).sum();
        norm.push(nq);
        projected.push(inner * inner * nq);
    }
    Ok(SphereMoments {
        n,
        q,
        samples,
        norm_mean: norm.mean,
        norm_se: norm.standard_error(),
        norm_bound: bound,
        projected_mean: projected.mean,
        projected_se: projected.standard_error(),
        projected_bound: 6.0 * bound / n as f64 * s.iter().map(|v| v * v).sum::<f64>(),
    })
}

#[derive(Debug, Default)]
struct Welford {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.count += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (v - self.mean);
    }

    fn standard_error(&self) -> f64 {
        (self.m2 / (self.count - 1.0) / self.count).sqrt()
    }
}

/// Per-iteration seed source for the `ξᵢ` of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    pub base: u64,
    pub iteration: u64,
}

impl SeedStream {
    pub fn new(base: u64, iteration: u64) -> Self {
        Self { base, iteration }
    }

    pub fn seed(&self, index: usize) -> XiSeed {
        XiSeed::derive(self.base, self.iteration, index as u64)
    }
}

/// Output of [`estimate_gradient`]: `vector = coefficient · direction`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub vector: Vec<f64>,
    pub direction: Vec<f64>,
    /// Averaged directional finite difference.
    pub coefficient: f64,
    pub batch_size: usize,
    pub smoothing: f64,
}

/// Batched two-point estimate at `x` along a freshly sampled direction.
///
/// Makes exactly `batch` oracle calls. Differences are summed in batch index
/// order after evaluation, so the result does not depend on how many workers
/// evaluated the batch.
pub fn estimate_gradient<P: NoisyProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    smoothing: f64,
    batch: usize,
    sampler: &mut SphereSampler,
    seeds: SeedStream,
    ledger: &OracleLedger,
) -> Result<GradientEstimate> {
    let direction = sampler.sample();
    estimate_along(problem, x, smoothing, batch, direction, seeds, ledger)
}

/// Same as [`estimate_gradient`] with a caller-supplied unit direction.
pub fn estimate_along<P: NoisyProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    smoothing: f64,
    batch: usize,
    direction: Vec<f64>,
    seeds: SeedStream,
    ledger: &OracleLedger,
) -> Result<GradientEstimate> {
    if !(smoothing > 0.0) || !smoothing.is_finite() {
        return Err(invalid(
            "smoothing",
            format!("must be positive and finite, got {smoothing}"),
        ));
    }
    if batch < 1 {
        return Err(invalid("batch", "batch size must be at least 1"));
    }
    check_dim(problem.dim(), x.len())?;
    check_dim(problem.dim(), direction.len())?;

    let shifted = add_scaled(x, smoothing, &direction);
    let difference = |i: usize| -> Result<f64> {
        let (ahead, here) = evaluate_pair(problem, &shifted, x, seeds.seed(i), ledger)?;
        Ok((ahead - here) / smoothing)
    };
    let differences: Vec<f64> = if batch >= PARALLEL_BATCH_MIN {
        (0..batch)
            .into_par_iter()
            .map(difference)
            .collect::<Result<_>>()?
    } else {
        (0..batch).map(difference).collect::<Result<_>>()?
    };
    let coefficient = differences.iter().sum::<f64>() / batch as f64;

    Ok(GradientEstimate {
        vector: direction.iter().map(|e| coefficient * e).collect(),
        direction,
        coefficient,
        batch_size: batch,
        smoothing,
    })
}
