//! Randomized derivative-free directional search methods.
//!
//! Every solver is a step-wise state machine implementing
//! [`DirectionalSearch`]; the free functions [`ardfds`], [`rdfds`] and
//! [`rspgf_baseline`] drive one for a fixed number of iterations and collect a
//! [`ConvergenceTrace`]. Solvers only ever query the noisy two-point oracle;
//! clean objective values reach the trace through the optional [`Metrics`]
//! probe.

mod ardfds;
mod planner;
mod rdfds;
mod rspgf;
mod trace;

use serde::{Deserialize, Serialize};

pub use ardfds::Ardfds;
pub use planner::{plan_parameters, PlanInput, PlannedParameters};
pub use rdfds::Rdfds;
pub use rspgf::Rspgf;
pub use trace::{default_record_every, ConvergenceTrace, Metrics, RunOptions, TraceRecord};

use crate::error::{check_dim, invalid, Result};
use crate::estimator::{estimate_gradient, GradientEstimate, SeedStream, SphereSampler};
use crate::oracle::{NoisyProblem, OracleLedger, XiSeed};
use crate::prox::ProxSetup;
use trace::Recorder;

/// Which method to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ardfds,
    Rdfds,
    Rspgf,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Ardfds => "ardfds",
            Method::Rdfds => "rdfds",
            Method::Rspgf => "rspgf",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ardfds" => Ok(Method::Ardfds),
            "rdfds" => Ok(Method::Rdfds),
            "rspgf" => Ok(Method::Rspgf),
            other => Err(invalid("method", format!("unknown method `{other}`"))),
        }
    }
}

/// Parameters shared by ARDFDS and RDFDS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub n_iters: usize,
    pub batch: usize,
    pub smoothing: f64,
    /// Scale applied to the theoretical stepsizes.
    pub gamma: f64,
    pub lipschitz_grad: f64,
    pub setup: ProxSetup,
    pub base_seed: u64,
}

impl SolverParams {
    pub fn new(setup: ProxSetup, lipschitz_grad: f64, n_iters: usize) -> Self {
        Self {
            n_iters,
            batch: 1,
            smoothing: 1e-6,
            gamma: 1.0,
            lipschitz_grad,
            setup,
            base_seed: 0,
        }
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = batch;
        self
    }

    pub fn with_smoothing(mut self, smoothing: f64) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_seed(mut self, base_seed: u64) -> Self {
        self.base_seed = base_seed;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        check_dim(self.setup.dim(), dim)?;
        if self.n_iters < 1 {
            return Err(invalid("n_iters", "at least one iteration is required"));
        }
        if self.batch < 1 {
            return Err(invalid("batch", "batch size must be at least 1"));
        }
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return Err(invalid(
                "smoothing",
                format!("must be positive, got {}", self.smoothing),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid(
                "gamma",
                format!("must be positive, got {}", self.gamma),
            ));
        }
        if !(self.lipschitz_grad > 0.0 && self.lipschitz_grad.is_finite()) {
            return Err(invalid(
                "lipschitz_grad",
                format!("must be positive, got {}", self.lipschitz_grad),
            ));
        }
        self.setup.rho()?;
        Ok(())
    }

    /// ARDFDS stepsize `α_{k+1} = γ(k + 2) / (96 n² ρ_n L₂)`.
    pub fn ardfds_stepsize(&self, k: usize) -> Result<f64> {
        let n = self.setup.dim() as f64;
        let denom = 96.0 * n * n * self.setup.rho()? * self.lipschitz_grad;
        Ok(self.gamma * (k as f64 + 2.0) / denom)
    }

    /// RDFDS stepsize `α = γ / (48 n ρ_n L₂)`.
    pub fn rdfds_stepsize(&self) -> Result<f64> {
        let n = self.setup.dim() as f64;
        Ok(self.gamma / (48.0 * n * self.setup.rho()? * self.lipschitz_grad))
    }
}

/// Borrowed view of a solver's state, handed to per-iteration callbacks.
#[derive(Debug, Clone, Copy)]
pub enum Snapshot<'a> {
    Ardfds {
        x: &'a [f64],
        y: &'a [f64],
        z: &'a [f64],
    },
    Rdfds {
        x: &'a [f64],
        average: &'a [f64],
    },
    Rspgf {
        x: &'a [f64],
    },
}

/// Per-iteration callback payload.
#[derive(Debug, Clone, Copy)]
pub struct IterationView<'a> {
    pub iteration: usize,
    pub oracle_calls: u64,
    pub state: Snapshot<'a>,
}

/// A derivative-free method advanced one iteration at a time.
pub trait DirectionalSearch {
    /// Performs one iteration (one batched gradient estimate).
    fn step(&mut self) -> Result<()>;

    /// Number of completed iterations.
    fn iteration(&self) -> usize;

    /// Current output point: `y_k`, `x̄_k` or `x_k`.
    fn output(&self) -> &[f64];

    fn oracle_calls(&self) -> u64;

    fn snapshot(&self) -> Snapshot<'_>;
}

/// Direction sampler, seed stream and ledger owned by one solver run.
#[derive(Debug, Clone)]
pub(crate) struct Randomness {
    sampler: SphereSampler,
    base_seed: u64,
    ledger: OracleLedger,
}

impl Randomness {
    pub(crate) fn new(dim: usize, base_seed: u64) -> Result<Self> {
        // the direction stream uses an iteration index no batch seed ever reaches
        let sampler_seed = XiSeed::derive(base_seed, u64::MAX, 0).0;
        Ok(Self {
            sampler: SphereSampler::new(dim, sampler_seed)?,
            base_seed,
            ledger: OracleLedger::new(),
        })
    }

    pub(crate) fn estimate<P: NoisyProblem + ?Sized>(
        &mut self,
        problem: &P,
        x: &[f64],
        smoothing: f64,
        batch: usize,
        iteration: usize,
    ) -> Result<GradientEstimate> {
        let seeds = SeedStream::new(self.base_seed, iteration as u64);
        let estimate = estimate_gradient(
            problem,
            x,
            smoothing,
            batch,
            &mut self.sampler,
            seeds,
            &self.ledger,
        )?;
        if !estimate.coefficient.is_finite() {
            return Err(crate::Error::NonFinite { iteration });
        }
        Ok(estimate)
    }

    pub(crate) fn calls(&self) -> u64 {
        self.ledger.calls()
    }
}

/// Drives `solver` until it has completed `n_iters` iterations (or the
/// early-stop gap is reached), recording the trace.
///
/// Records iteration 0, every `record_every`-th iteration and the last one.
/// Returns the index of the iteration the run stopped at.
pub fn drive<S: DirectionalSearch + ?Sized>(
    solver: &mut S,
    n_iters: usize,
    metrics: Option<Metrics<'_>>,
    options: RunOptions,
    mut callback: Option<&mut dyn FnMut(&IterationView<'_>)>,
) -> Result<ConvergenceTrace> {
    options.validate(metrics.as_ref())?;
    let every = options.resolved_every(n_iters);
    let mut recorder = Recorder::new(metrics);

    let (value, gap) = recorder.measure(solver.output());
    recorder.push(solver.iteration(), solver.oracle_calls(), value, gap);
    if reached(gap, options.stop_gap) {
        return Ok(recorder.finish());
    }

    while solver.iteration() < n_iters {
        solver.step()?;
        let k = solver.iteration();
        if let Some(cb) = callback.as_mut() {
            cb(&IterationView {
                iteration: k,
                oracle_calls: solver.oracle_calls(),
                state: solver.snapshot(),
            });
        }
        let scheduled = k.is_multiple_of(every) || k == n_iters;
        if scheduled || options.stop_gap.is_some() {
            let (value, gap) = recorder.measure(solver.output());
            let stop = reached(gap, options.stop_gap);
            if scheduled || stop {
                recorder.push(k, solver.oracle_calls(), value, gap);
            }
            if stop {
                break;
            }
        }
    }
    Ok(recorder.finish())
}

fn reached(gap: Option<f64>, target: Option<f64>) -> bool {
    matches!((gap, target), (Some(g), Some(t)) if g <= t)
}

/// Runs ARDFDS for `params.n_iters` iterations and returns `y_N` with its trace.
pub fn ardfds<P: NoisyProblem + ?Sized>(
    problem: &P,
    params: &SolverParams,
    x0: &[f64],
    metrics: Option<Metrics<'_>>,
) -> Result<(Vec<f64>, ConvergenceTrace)> {
    let mut solver = Ardfds::new(problem, params.clone(), x0)?;
    let trace = drive(
        &mut solver,
        params.n_iters,
        metrics,
        RunOptions::default(),
        None,
    )?;
    Ok((solver.output().to_vec(), trace))
}

/// Runs RDFDS for `params.n_iters` iterations and returns `x̄_N` with its trace.
pub fn rdfds<P: NoisyProblem + ?Sized>(
    problem: &P,
    params: &SolverParams,
    x0: &[f64],
    metrics: Option<Metrics<'_>>,
) -> Result<(Vec<f64>, ConvergenceTrace)> {
    let mut solver = Rdfds::new(problem, params.clone(), x0)?;
    let trace = drive(
        &mut solver,
        params.n_iters,
        metrics,
        RunOptions::default(),
        None,
    )?;
    Ok((solver.output().to_vec(), trace))
}

/// Runs the Euclidean random-search baseline.
///
/// Returns the traced iterate with the lowest clean value when a metrics
/// probe is attached, and the last iterate otherwise.
pub fn rspgf_baseline<P: NoisyProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    config: rspgf::RspgfConfig,
    metrics: Option<Metrics<'_>>,
) -> Result<(Vec<f64>, ConvergenceTrace)> {
    let n_iters = config.n_iters;
    let mut solver = Rspgf::new(problem, x0, config)?;
    let mut best: Option<(f64, Vec<f64>)> =
        metrics.map(|m| (m.objective.clean_value(x0), x0.to_vec()));
    let mut track = |view: &IterationView<'_>| {
        if let (Some(m), Snapshot::Rspgf { x }) = (metrics.as_ref(), view.state) {
            let value = m.objective.clean_value(x);
            if let Some((best_value, best_x)) = best.as_mut() {
                if value < *best_value {
                    *best_value = value;
                    best_x.copy_from_slice(x);
                }
            }
        }
    };
    let trace = drive(
        &mut solver,
        n_iters,
        metrics,
        RunOptions::default(),
        Some(&mut track),
    )?;
    let output = match best {
        Some((_, x)) => x,
        None => solver.output().to_vec(),
    };
    Ok((output, trace))
}

pub use rspgf::RspgfConfig;
