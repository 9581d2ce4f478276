//! Nesterov's worst-case quadratic with a linear stochastic perturbation and
//! sinusoidal adversarial noise, and a multi-seed experiment runner.
//!
//! ```text
//! f(x)    = (L₂/4)(½[(x¹)² + Σᵢ(xⁱ − xⁱ⁺¹)² + (xⁿ)²] − x¹)
//! f̃(x, ξ) = f(x) + ξ⟨a, x⟩ + Δ sin‖x‖₂,   ξ ~ N(0, σ²)
//! ```
//!
//! The optimum is `x*ⁱ = 1 − i/(n + 1)` with `f* = (L₂/8)(−1 + 1/(n + 1))`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimator::SphereSampler;
use crate::linalg::{dot, norm2};
use crate::oracle::{CleanObjective, NoisyProblem, XiSeed};
use crate::prox::{Geometry, ProxSetup};
use crate::solvers::{
    default_record_every, plan_parameters, Ardfds, DirectionalSearch, Method, PlanInput,
    PlannedParameters, Rdfds, Rspgf, RspgfConfig,
};

/// `f(x)` of Nesterov's function with smoothness constant `l2`.
pub fn nesterov_value(l2: f64, x: &[f64]) -> f64 {
    let Some((first, last)) = x.first().zip(x.last()) else {
        return 0.0;
    };
    let chain: f64 = x.windows(2).map(|w| (w[0] - w[1]) * (w[0] - w[1])).sum();
    l2 / 4.0 * (0.5 * (first * first + chain + last * last) - first)
}

/// Noisy Nesterov problem.
#[derive(Debug, Clone)]
pub struct NesterovProblem {
    n: usize,
    l2: f64,
    sigma: f64,
    delta_noise: f64,
    a: Vec<f64>,
    x_star: Vec<f64>,
    f_star: f64,
}

impl NesterovProblem {
    /// The stochastic direction `a` is drawn uniformly from the unit sphere
    /// using `a_seed`.
    pub fn new(n: usize, l2: f64, sigma2: f64, delta_noise: f64, a_seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "dimension must be at least 1"));
        }
        if !(l2 > 0.0 && l2.is_finite()) {
            return Err(invalid("l2", format!("must be positive, got {l2}")));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(invalid(
                "sigma2",
                format!("must be non-negative, got {sigma2}"),
            ));
        }
        if !(delta_noise >= 0.0 && delta_noise.is_finite()) {
            return Err(invalid(
                "delta",
                format!("must be non-negative, got {delta_noise}"),
            ));
        }
        let a = SphereSampler::new(n, a_seed)?.sample();
        let x_star = (1..=n).map(|i| 1.0 - i as f64 / (n as f64 + 1.0)).collect();
        let f_star = l2 / 8.0 * (-1.0 + 1.0 / (n as f64 + 1.0));
        Ok(Self {
            n,
            l2,
            sigma: sigma2.sqrt(),
            delta_noise,
            a,
            x_star,
            f_star,
        })
    }

    /// Noiseless instance.
    pub fn deterministic(n: usize, l2: f64) -> Result<Self> {
        Self::new(n, l2, 0.0, 0.0, 0)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        nesterov_value(self.l2, x)
    }

    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Starting point `x* + L₂·e₁`.
    pub fn make_x0(&self) -> Vec<f64> {
        let mut x0 = self.x_star.clone();
        x0[0] += self.l2;
        x0
    }

    /// `ξ ~ N(0, σ²)` for the given seed.
    pub fn xi(&self, seed: XiSeed) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
        let z: f64 = StandardNormal.sample(&mut rng);
        self.sigma * z
    }

    /// `Θ_p = V[x₀](x*)` in the given setup.
    pub fn theta(&self, setup: &ProxSetup, x0: &[f64]) -> Result<f64> {
        setup.bregman(x0, &self.x_star)
    }
}

impl NoisyProblem for NesterovProblem {
    fn dim(&self) -> usize {
        self.n
    }

    fn stochastic_value(&self, x: &[f64], xi: XiSeed) -> f64 {
        let value = self.value(x);
        if self.sigma == 0.0 {
            value
        } else {
            value + self.xi(xi) * dot(&self.a, x)
        }
    }

    fn adversarial_noise(&self, x: &[f64], _xi: XiSeed) -> f64 {
        if self.delta_noise == 0.0 {
            0.0
        } else {
            self.delta_noise * norm2(x).sin()
        }
    }

    fn delta_noise(&self) -> f64 {
        self.delta_noise
    }

    fn lipschitz_grad(&self) -> f64 {
        self.l2
    }

    fn sigma2(&self) -> f64 {
        self.sigma * self.sigma
    }
}

impl CleanObjective for NesterovProblem {
    fn clean_value(&self, x: &[f64]) -> f64 {
        self.value(x)
    }
}

/// Tuned stepsize scales for the Nesterov experiment.
pub fn gamma_preset(method: Method, geometry: Geometry) -> f64 {
    match (method, geometry) {
        (Method::Ardfds, Geometry::Euclidean) => 8.0,
        (Method::Ardfds, Geometry::L1) => 2000.0,
        (Method::Rdfds, Geometry::Euclidean) => 32.0,
        (Method::Rdfds, Geometry::L1) => 1000.0,
        (Method::Rspgf, _) => 1.0,
    }
}

/// Largest `σ²` for which the ARDFDS `p = 1` recipe keeps the batch size at 1:
/// `ε^{3/2} √n / √(ln n) · √(L₂ / Θ₁)`.
pub fn unit_batch_sigma2(eps: f64, n: usize, l2: f64, theta1: f64) -> f64 {
    let nf = n as f64;
    eps.powf(1.5) * nf.sqrt() / nf.ln().sqrt() * (l2 / theta1).sqrt()
}

/// Starting point rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRule {
    /// `x* + L₂·e₁`.
    ShiftedOptimum,
    Origin,
}

/// One Nesterov experiment across several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    pub p: u8,
    /// Stepsize scale; the tuned preset when absent.
    pub gamma: Option<f64>,
    pub n: usize,
    pub l2: f64,
    /// Noise variance; the unit-batch bound when absent.
    pub sigma2: Option<f64>,
    /// Adversarial noise level; the planned budget when absent.
    pub delta: Option<f64>,
    pub eps: f64,
    pub seeds: Vec<u64>,
    pub x0: StartRule,
    pub c_scale: f64,
    /// Seed of the stochastic direction `a`.
    pub problem_seed: u64,
    pub n_iters: Option<usize>,
    pub batch: Option<usize>,
    pub smoothing: Option<f64>,
    pub rspgf_step: Option<f64>,
    /// Stop once the mean relative accuracy over seeds reaches this level.
    pub until_rel_acc: Option<f64>,
    /// Trace decimation; `max(1, N/2000)` when absent.
    pub record_every: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::Ardfds,
            p: 2,
            gamma: None,
            n: 100,
            l2: 10.0,
            sigma2: None,
            delta: None,
            eps: 1e-3,
            seeds: (0..10).collect(),
            x0: StartRule::ShiftedOptimum,
            c_scale: 1.0,
            problem_seed: 0,
            n_iters: None,
            batch: None,
            smoothing: None,
            rspgf_step: None,
            until_rel_acc: None,
            record_every: None,
        }
    }
}

/// Everything an experiment run derives from its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedExperiment {
    pub geometry: Geometry,
    pub gamma: f64,
    pub sigma2: f64,
    pub delta: f64,
    /// `Θ_p` of the run's geometry.
    pub theta: f64,
    /// `Θ₁`, used for the default `σ²`.
    pub theta1: f64,
    pub plan: PlannedParameters,
    pub n_iters: usize,
    pub batch: usize,
    pub smoothing: f64,
    pub rspgf_step: Option<f64>,
    pub record_every: usize,
    pub f_star: f64,
    pub initial_gap: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("seeds", "seeds must be distinct"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(invalid(
                "eps",
                format!("must be positive, got {}", self.eps),
            ));
        }
        if !(self.l2 > 0.0 && self.l2.is_finite()) {
            return Err(invalid("l2", format!("must be positive, got {}", self.l2)));
        }
        if self.n < 8 {
            return Err(Error::DimensionTooSmall { n: self.n });
        }
        Geometry::from_p(self.p)?;
        if self.method == Method::Rspgf && self.p != 2 {
            return Err(invalid("p", "the random-search baseline is Euclidean only"));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(invalid("gamma", format!("must be positive, got {g}")));
            }
        }
        if self.record_every == Some(0) {
            return Err(invalid("record_every", "must be at least 1"));
        }
        if let Some(r) = self.until_rel_acc {
            if !(r >= 0.0) {
                return Err(invalid(
                    "until_rel_acc",
                    format!("must be non-negative, got {r}"),
                ));
            }
        }
        Ok(())
    }

    fn start(&self, problem: &NesterovProblem) -> Vec<f64> {
        match self.x0 {
            StartRule::ShiftedOptimum => problem.make_x0(),
            StartRule::Origin => vec![0.0; self.n],
        }
    }

    /// Derives noise levels, `Θ_p` and the planned parameters.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        self.validate()?;
        let geometry = Geometry::from_p(self.p)?;
        let clean = NesterovProblem::deterministic(self.n, self.l2)?;
        let x0 = self.start(&clean);

        let theta = clean.theta(&ProxSetup::new(geometry, self.n)?, &x0)?;
        let theta1 = clean.theta(&ProxSetup::l1(self.n)?, &x0)?;
        if !(theta > 0.0 && theta1 > 0.0) {
            return Err(invalid(
                "x0",
                "the starting point coincides with the optimum",
            ));
        }
        let sigma2 = match self.sigma2 {
            Some(s) => s,
            None => unit_batch_sigma2(self.eps, self.n, self.l2, theta1),
        };

        // the baseline borrows the Euclidean non-accelerated recipe
        let plan_method = match self.method {
            Method::Rspgf => Method::Rdfds,
            m => m,
        };
        let mut input = PlanInput::new(
            plan_method,
            geometry,
            self.n,
            self.eps,
            self.l2,
            sigma2,
            theta,
        );
        input.c_scale = self.c_scale;
        let budget = plan_parameters(&input)?.delta_budget;
        let delta = self.delta.unwrap_or(budget);
        input.delta_actual = Some(delta);
        let plan = plan_parameters(&input)?;

        let n_iters = self.n_iters.unwrap_or(plan.n_iters);
        if n_iters == 0 {
            return Err(invalid("n_iters", "at least one iteration is required"));
        }
        let gamma = self
            .gamma
            .unwrap_or_else(|| gamma_preset(self.method, geometry));
        let rspgf_step = (self.method == Method::Rspgf).then(|| {
            self.rspgf_step
                .unwrap_or_else(|| RspgfConfig::default_step(self.n, self.l2))
        });

        Ok(ResolvedExperiment {
            geometry,
            gamma,
            sigma2,
            delta,
            theta,
            theta1,
            n_iters,
            batch: self.batch.unwrap_or(plan.batch),
            smoothing: self.smoothing.unwrap_or(plan.smoothing),
            rspgf_step,
            record_every: self
                .record_every
                .unwrap_or_else(|| default_record_every(n_iters)),
            f_star: clean.f_star(),
            initial_gap: clean.value(&x0) - clean.f_star(),
            plan,
        })
    }
}

/// One row of a per-seed trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub iter: usize,
    pub oracle_calls: u64,
    /// `(f(x_k) − f*) / (f(x₀) − f*)`.
    pub rel_acc: f64,
    pub f_gap: f64,
    /// Wall-clock seconds spent stepping this seed.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<SeedRecord>,
    pub output: Vec<f64>,
    pub oracle_calls: u64,
    pub runtime_s: f64,
}

impl SeedRun {
    pub fn final_rel_acc(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.rel_acc)
    }
}

/// Mean, min and max relative accuracy across seeds at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub iter: usize,
    pub oracle_calls: u64,
    pub rel_acc_mean: f64,
    pub rel_acc_min: f64,
    pub rel_acc_max: f64,
    pub f_gap_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub resolved: ResolvedExperiment,
    pub runs: Vec<SeedRun>,
    pub aggregate: Vec<AggregateRecord>,
    /// Iteration at which the mean relative accuracy reached `until_rel_acc`.
    pub stop_iteration: Option<usize>,
}

impl ExperimentResult {
    /// First recorded iteration whose mean relative accuracy is at most `target`.
    pub fn iterations_to(&self, target: f64) -> Option<usize> {
        self.aggregate
            .iter()
            .find(|r| r.rel_acc_mean <= target)
            .map(|r| r.iter)
    }

    pub fn final_mean_rel_acc(&self) -> f64 {
        self.aggregate.last().map_or(f64::NAN, |r| r.rel_acc_mean)
    }
}

/// Runs the configured solver once per seed on the global rayon pool.
///
/// Seeds advance in lockstep, one recording interval at a time, so the
/// early-stop test on the mean relative accuracy happens at recorded
/// iterations and every seed stops at the same iteration.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let resolved = config.resolve()?;
    let problem = NesterovProblem::new(
        config.n,
        config.l2,
        resolved.sigma2,
        resolved.delta,
        config.problem_seed,
    )?;
    let x0 = config.start(&problem);
    let setup = ProxSetup::new(resolved.geometry, config.n)?;

    let mut solvers: Vec<Box<dyn DirectionalSearch + Send + '_>> =
        Vec::with_capacity(config.seeds.len());
    for (index, &seed) in config.seeds.iter().enumerate() {
        let annotate = |e| seed_error(index, seed, e);
        let solver: Box<dyn DirectionalSearch + Send> = match config.method {
            Method::Ardfds | Method::Rdfds => {
                let params = resolved
                    .plan
                    .solver_params(setup, config.l2, resolved.gamma, seed);
                let params = crate::solvers::SolverParams {
                    n_iters: resolved.n_iters,
                    batch: resolved.batch,
                    smoothing: resolved.smoothing,
                    ..params
                };
                if config.method == Method::Ardfds {
                    Box::new(Ardfds::new(&problem, params, &x0).map_err(annotate)?)
                } else {
                    Box::new(Rdfds::new(&problem, params, &x0).map_err(annotate)?)
                }
            }
            Method::Rspgf => {
                let rspgf = RspgfConfig {
                    n_iters: resolved.n_iters,
                    batch: resolved.batch,
                    smoothing: resolved.smoothing,
                    step: resolved.rspgf_step.expect("resolved for the baseline"),
                    base_seed: seed,
                };
                Box::new(Rspgf::new(&problem, &x0, rspgf).map_err(annotate)?)
            }
        };
        solvers.push(solver);
    }

    let f_star = problem.f_star();
    let gap0 = resolved.initial_gap;
    let mut elapsed = vec![0.0_f64; solvers.len()];
    let mut runs: Vec<SeedRun> = config
        .seeds
        .iter()
        .map(|&seed| SeedRun {
            seed,
            records: Vec::new(),
            output: Vec::new(),
            oracle_calls: 0,
            runtime_s: 0.0,
        })
        .collect();
    let mut aggregate = Vec::new();

    let mut record = |solvers: &[Box<dyn DirectionalSearch + Send + '_>],
                      elapsed: &[f64],
                      runs: &mut [SeedRun]| {
        let mut gaps = Vec::with_capacity(solvers.len());
        for ((solver, run), secs) in solvers.iter().zip(runs.iter_mut()).zip(elapsed) {
            let gap = problem.value(solver.output()) - f_star;
            run.records.push(SeedRecord {
                iter: solver.iteration(),
                oracle_calls: solver.oracle_calls(),
                rel_acc: gap / gap0,
                f_gap: gap,
                elapsed_s: *secs,
            });
            gaps.push(gap);
        }
        let rel: Vec<f64> = gaps.iter().map(|g| g / gap0).collect();
        let count = rel.len() as f64;
        let row = AggregateRecord {
            iter: solvers[0].iteration(),
            oracle_calls: solvers[0].oracle_calls(),
            rel_acc_mean: rel.iter().sum::<f64>() / count,
            rel_acc_min: rel.iter().copied().fold(f64::INFINITY, f64::min),
            rel_acc_max: rel.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            f_gap_mean: gaps.iter().sum::<f64>() / count,
        };
        let mean = row.rel_acc_mean;
        aggregate.push(row);
        mean
    };

    let reached = |mean: f64| config.until_rel_acc.is_some_and(|t| mean <= t);
    let mut stop_iteration = None;
    let mut k = 0;
    if reached(record(&solvers, &elapsed, &mut runs)) {
        stop_iteration = Some(0);
    }
    while stop_iteration.is_none() && k < resolved.n_iters {
        let block = resolved.record_every.min(resolved.n_iters - k);
        let outcomes: Vec<Result<()>> = solvers
            .par_iter_mut()
            .zip(elapsed.par_iter_mut())
            .map(|(solver, secs)| {
                let started = Instant::now();
                let outcome = (0..block).try_for_each(|_| solver.step());
                *secs += started.elapsed().as_secs_f64();
                outcome
            })
            .collect();
        for (index, outcome) in outcomes.into_iter().enumerate() {
            outcome.map_err(|e| seed_error(index, config.seeds[index], e))?;
        }
        k += block;
        if reached(record(&solvers, &elapsed, &mut runs)) {
            stop_iteration = Some(k);
        }
    }

    for ((run, solver), secs) in runs.iter_mut().zip(&solvers).zip(&elapsed) {
        run.output = solver.output().to_vec();
        run.oracle_calls = solver.oracle_calls();
        run.runtime_s = *secs;
    }
    drop(solvers);

    Ok(ExperimentResult {
        config: config.clone(),
        resolved,
        runs,
        aggregate,
        stop_iteration,
    })
}

/// Same as [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    pool.install(|| run_experiment(config))
}

/// Runs the experiment once per stepsize scale in `gammas`.
pub fn run_gamma_grid(
    config: &ExperimentConfig,
    gammas: &[f64],
) -> Result<Vec<(f64, ExperimentResult)>> {
    if gammas.is_empty() {
        return Err(invalid("gammas", "the grid is empty"));
    }
    gammas
        .iter()
        .map(|&gamma| {
            let config = ExperimentConfig {
                gamma: Some(gamma),
                ..config.clone()
            };
            run_experiment(&config).map(|r| (gamma, r))
        })
        .collect()
}

fn seed_error(index: usize, seed: u64, source: Error) -> Error {
    Error::SeedAborted {
        index,
        seed,
        source: Box::new(source),
    }
}
