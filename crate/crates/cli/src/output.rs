//! CSV traces and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dfds_core::benchmarks::{ExperimentConfig, ExperimentResult};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const TRACE_HEADER: &str = "iter,oracle_calls,rel_acc,f_gap,elapsed_s";
pub const AGGREGATE_HEADER: &str =
    "iter,oracle_calls,rel_acc,f_gap,elapsed_s,rel_acc_mean,rel_acc_min,rel_acc_max";

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn seed_file(seed: u64) -> String {
    format!("seed_{seed}.csv")
}

pub fn seed_csv(result: &ExperimentResult, index: usize, timing: bool) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &result.runs[index].records {
        let elapsed = if timing {
            num(r.elapsed_s)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.iter,
            r.oracle_calls,
            num(r.rel_acc),
            num(r.f_gap),
            elapsed
        );
    }
    out
}

/// Mean trace across seeds; `elapsed_s` is the slowest seed.
pub fn aggregate_csv(result: &ExperimentResult, timing: bool) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for (i, a) in result.aggregate.iter().enumerate() {
        let elapsed = if timing {
            let slowest = result
                .runs
                .iter()
                .map(|run| run.records[i].elapsed_s)
                .fold(0.0, f64::max);
            num(slowest)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            a.iter,
            a.oracle_calls,
            num(a.rel_acc_mean),
            num(a.f_gap_mean),
            elapsed,
            num(a.rel_acc_mean),
            num(a.rel_acc_min),
            num(a.rel_acc_max)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub n_iters: usize,
    pub batch: usize,
    pub smoothing: f64,
    pub delta_budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub trace: String,
    pub final_rel_acc: f64,
    pub oracle_calls: u64,
    pub runtime_s: f64,
}

/// Everything needed to repeat a run; only `config` is read back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub planner: PlannerSummary,
    pub gamma: f64,
    pub sigma2: f64,
    pub delta: f64,
    pub theta: f64,
    pub n_iters: usize,
    pub batch: usize,
    pub smoothing: f64,
    pub record_every: usize,
    pub f_star: f64,
    pub initial_gap: f64,
    pub seeds: Vec<u64>,
    pub stop_iteration: Option<usize>,
    pub aggregate: String,
    pub runs: Vec<SeedSummary>,
}

impl RunManifest {
    pub fn new(result: &ExperimentResult, aggregate: &str) -> Self {
        let r = &result.resolved;
        Self {
            toolkit: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: result.config.clone(),
            planner: PlannerSummary {
                n_iters: r.plan.n_iters,
                batch: r.plan.batch,
                smoothing: r.plan.smoothing,
                delta_budget: r.plan.delta_budget,
            },
            gamma: r.gamma,
            sigma2: r.sigma2,
            delta: r.delta,
            theta: r.theta,
            n_iters: r.n_iters,
            batch: r.batch,
            smoothing: r.smoothing,
            record_every: r.record_every,
            f_star: r.f_star,
            initial_gap: r.initial_gap,
            seeds: result.config.seeds.clone(),
            stop_iteration: result.stop_iteration,
            aggregate: aggregate.to_string(),
            runs: result
                .runs
                .iter()
                .map(|run| SeedSummary {
                    seed: run.seed,
                    trace: seed_file(run.seed),
                    final_rel_acc: run.final_rel_acc(),
                    oracle_calls: run.oracle_calls,
                    runtime_s: run.runtime_s,
                })
                .collect(),
        }
    }
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: ExperimentConfig,
}

pub fn read_manifest_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str::<ManifestConfig>(&text)
        .map(|m| m.config)
        .map_err(|e| CliError::Usage(format!("{} is not a run manifest: {e}", path.display())))
}

pub fn read_config_file(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Output directory that has been checked for writability.
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn prepare(path: &Path) -> Result<Self, CliError> {
        let unwritable = |e: std::io::Error| CliError::Output(format!("{}: {e}", path.display()));
        fs::create_dir_all(path).map_err(unwritable)?;
        let probe = path.join(".dfds-write-check");
        fs::write(&probe, b"").map_err(unwritable)?;
        fs::remove_file(&probe).map_err(unwritable)?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.0.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
    }

    pub fn path(&self) -> &Path {
        &self.0
    }
}
