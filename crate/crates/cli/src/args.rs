use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dfds_core::benchmarks::{ExperimentConfig, StartRule};
use dfds_core::{DualExponent, Method};

#[derive(Debug, Parser)]
#[command(
    name = "dfds",
    version,
    about = "Derivative-free directional search with two-point feedback"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the planned iteration count, batch size, smoothing and noise budget.
    Plan(PlanArgs),
    /// Run a multi-seed Nesterov experiment and write CSV traces plus a manifest.
    Run(RunArgs),
    /// Monte Carlo check of the sphere moment bounds.
    #[command(name = "verify-lemma1")]
    VerifyLemma1(VerifyArgs),
    /// Repeat an experiment over a list of stepsize scales.
    #[command(name = "gamma-grid")]
    GammaGrid(GridArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub method: Method,
    #[arg(long)]
    pub p: u8,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub eps: f64,
    /// Gradient Lipschitz constant.
    #[arg(long = "L2", visible_alias = "l2")]
    pub l2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma2: f64,
    /// `V[x₀](x*)` of the chosen setup.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub theta: Option<f64>,
    /// Take `Θ_p` from a built-in problem started at `x* + L₂e₁`.
    #[arg(long, value_parser = ["nesterov"])]
    pub preset: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub c_scale: f64,
    /// Actual noise level, when known.
    #[arg(long)]
    pub delta_actual: Option<f64>,
}

/// Experiment fields; each one overrides the config file or manifest.
#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// Flat TOML file with experiment fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Manifest of an earlier run to repeat.
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub p: Option<u8>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "L2", visible_alias = "l2")]
    pub l2: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Adversarial noise level.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// `a..b` or a comma separated list.
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Option<Seeds>,
    #[arg(long, value_parser = parse_start)]
    pub x0: Option<StartRule>,
    #[arg(long)]
    pub c_scale: Option<f64>,
    #[arg(long)]
    pub problem_seed: Option<u64>,
    #[arg(long)]
    pub n_iters: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub smoothing: Option<f64>,
    #[arg(long)]
    pub rspgf_step: Option<f64>,
    /// Stop once the mean relative accuracy reaches this level.
    #[arg(long)]
    pub until_rel_acc: Option<f64>,
    /// Keep every j-th iteration in the traces.
    #[arg(long)]
    pub record_every: Option<usize>,
}

impl ExperimentArgs {
    pub fn apply(&self, mut c: ExperimentConfig) -> ExperimentConfig {
        if let Some(v) = self.method {
            c.method = v;
        }
        if let Some(v) = self.p {
            c.p = v;
        }
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.l2 {
            c.l2 = v;
        }
        if let Some(v) = self.eps {
            c.eps = v;
        }
        if let Some(v) = &self.seeds {
            c.seeds = v.0.clone();
        }
        if let Some(v) = self.x0 {
            c.x0 = v;
        }
        if let Some(v) = self.c_scale {
            c.c_scale = v;
        }
        if let Some(v) = self.problem_seed {
            c.problem_seed = v;
        }
        let optional = [
            (&mut c.gamma, self.gamma),
            (&mut c.sigma2, self.sigma2),
            (&mut c.delta, self.delta),
            (&mut c.smoothing, self.smoothing),
            (&mut c.rspgf_step, self.rspgf_step),
            (&mut c.until_rel_acc, self.until_rel_acc),
        ];
        for (field, value) in optional {
            if value.is_some() {
                *field = value;
            }
        }
        for (field, value) in [
            (&mut c.n_iters, self.n_iters),
            (&mut c.batch, self.batch),
            (&mut c.record_every, self.record_every),
        ] {
            if value.is_some() {
                *field = value;
            }
        }
        c
    }
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output directory.
    #[arg(long, env = "DFDS_OUT_DIR", default_value = "dfds-out")]
    pub out: PathBuf,
    /// Upper bound on the number of seeds stepped concurrently.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Fill the elapsed_s column with wall-clock seconds.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub output: Output,
    /// Comma separated stepsize scales.
    #[arg(long, value_delimiter = ',', required = true)]
    pub gammas: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,100,1000")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,inf")]
    pub q: Vec<DualExponent>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let bad = |e: std::num::ParseIntError| format!("bad seed list `{s}`: {e}");
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(bad)?,
            b.trim().parse().map_err(bad)?,
        );
        if a >= b {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok(Seeds((a..b).collect()));
    }
    s.split(',')
        .map(|v| v.trim().parse().map_err(bad))
        .collect::<Result<_, _>>()
        .map(Seeds)
}

fn parse_start(s: &str) -> Result<StartRule, String> {
    match s.replace('-', "_").as_str() {
        "shifted_optimum" => Ok(StartRule::ShiftedOptimum),
        "origin" => Ok(StartRule::Origin),
        _ => Err(format!("expected shifted-optimum or origin, got `{s}`")),
    }
}
