//! Command-line front end: plan parameters, run Nesterov experiments and
//! check the sphere moment bounds.

pub mod args;
mod output;

use clap::Parser;
use dfds_core::benchmarks::{
    run_experiment, run_experiment_with_workers, ExperimentConfig, ExperimentResult,
    NesterovProblem,
};
use dfds_core::solvers::PlanInput;
use dfds_core::{plan_parameters, rho, sphere_moments, Error, Geometry, ProxSetup};

pub use args::Cli;
use args::{Command, ExperimentArgs, GridArgs, Output, PlanArgs, RunArgs, VerifyArgs};
use output::{aggregate_csv, num, seed_csv, seed_file, OutDir, RunManifest};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Output(String),
    Aborted {
        index: usize,
        seed: u64,
        reason: String,
    },
    Failed(String),
}

impl CliError {
    /// Process exit status.
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Output(_) => 3,
            CliError::Aborted { .. } => 4,
            CliError::Failed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Output(m) => write!(f, "cannot write output: {m}"),
            CliError::Aborted {
                index,
                seed,
                reason,
            } => write!(f, "seed index {index} (seed {seed}) aborted: {reason}"),
            CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SeedAborted {
                index,
                seed,
                source,
            } => CliError::Aborted {
                index,
                seed,
                reason: source.to_string(),
            },
            Error::NonFinite { .. } => CliError::Failed(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan(a) => plan(&a),
        Command::Run(a) => run(&a),
        Command::VerifyLemma1(a) => verify(&a),
        Command::GammaGrid(a) => gamma_grid(&a),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from_args<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    dispatch(cli)
}

fn plan(a: &PlanArgs) -> Result<(), CliError> {
    let geometry = Geometry::from_p(a.p)?;
    let theta = match a.theta {
        Some(t) => t,
        None => {
            let problem = NesterovProblem::deterministic(a.n, a.l2)?;
            problem.theta(&ProxSetup::new(geometry, a.n)?, &problem.make_x0())?
        }
    };
    let mut input = PlanInput::new(a.method, geometry, a.n, a.eps, a.l2, a.sigma2, theta);
    input.c_scale = a.c_scale;
    input.delta_actual = a.delta_actual;
    let planned = plan_parameters(&input)?;

    println!("method        {}", planned.method);
    println!("p             {}", a.p);
    println!("n             {}", a.n);
    println!("theta         {}", num(theta));
    println!("N             {}", planned.n_iters);
    println!("m             {}", planned.batch);
    println!("t             {}", num(planned.smoothing));
    println!("delta_budget  {}", num(planned.delta_budget));
    let json = serde_json::json!({
        "method": planned.method,
        "p": a.p,
        "n": a.n,
        "eps": a.eps,
        "l2": a.l2,
        "sigma2": a.sigma2,
        "theta": theta,
        "n_iters": planned.n_iters,
        "batch": planned.batch,
        "smoothing": planned.smoothing,
        "delta_budget": planned.delta_budget,
    });
    println!("{json}");
    Ok(())
}

fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let base = match (&a.config, &a.manifest) {
        (Some(path), _) => output::read_config_file(path)?,
        (None, Some(path)) => output::read_manifest_config(path)?,
        (None, None) => ExperimentConfig::default(),
    };
    let config = a.apply(base);
    config.validate()?;
    Ok(config)
}

fn execute(config: &ExperimentConfig, o: &Output) -> Result<ExperimentResult, CliError> {
    let result = match o.workers {
        Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
        Some(w) => run_experiment_with_workers(config, w)?,
        None => run_experiment(config)?,
    };
    Ok(result)
}

fn describe(result: &ExperimentResult) -> String {
    let c = &result.config;
    let r = &result.resolved;
    format!(
        "{} p={} n={} gamma={} N={} m={} t={} delta={}",
        c.method,
        c.p,
        c.n,
        num(r.gamma),
        r.n_iters,
        r.batch,
        num(r.smoothing),
        num(r.delta)
    )
}

fn run(a: &RunArgs) -> Result<(), CliError> {
    let config = experiment_config(&a.experiment)?;
    let out = OutDir::prepare(&a.output.out)?;
    let result = execute(&config, &a.output)?;

    for (index, run) in result.runs.iter().enumerate() {
        out.write(
            &seed_file(run.seed),
            &seed_csv(&result, index, a.output.timing),
        )?;
    }
    out.write("aggregate.csv", &aggregate_csv(&result, a.output.timing))?;
    let manifest = RunManifest::new(&result, "aggregate.csv");
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Failed(e.to_string()))?;
    out.write("manifest.json", &(json + "\n"))?;

    println!("{}", describe(&result));
    if let Some(k) = result.stop_iteration {
        println!("stopped at iteration {k}");
    }
    println!(
        "final mean relative accuracy {} over {} seeds; wrote {}",
        num(result.final_mean_rel_acc()),
        result.runs.len(),
        out.path().display()
    );
    Ok(())
}

fn gamma_grid(a: &GridArgs) -> Result<(), CliError> {
    let config = experiment_config(&a.experiment)?;
    if a.gammas.is_empty() {
        return Err(CliError::Usage("--gammas needs at least one value".into()));
    }
    let out = OutDir::prepare(&a.output.out)?;
    let mut manifests = Vec::with_capacity(a.gammas.len());
    println!("gamma,final_rel_acc_mean");
    for &gamma in &a.gammas {
        let config = ExperimentConfig {
            gamma: Some(gamma),
            ..config.clone()
        };
        let result = execute(&config, &a.output)?;
        let name = format!("aggregate_gamma_{}.csv", num(gamma));
        out.write(&name, &aggregate_csv(&result, a.output.timing))?;
        println!("{},{}", num(gamma), num(result.final_mean_rel_acc()));
        manifests.push(RunManifest::new(&result, &name));
    }
    let json =
        serde_json::to_string_pretty(&manifests).map_err(|e| CliError::Failed(e.to_string()))?;
    out.write("manifest.json", &(json + "\n"))?;
    Ok(())
}

fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    if let Some(&n) = a.n.iter().find(|&&n| n < 8) {
        return Err(CliError::Usage(format!(
            "n = {n} refused: the sphere moment bounds are only valid for n >= 8"
        )));
    }
    if a.samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let mut failures = 0;
    for &n in &a.n {
        for &q in &a.q {
            let m = sphere_moments(n, q, a.samples, a.seed)?;
            let verdict = if m.within_bounds() { "PASS" } else { "FAIL" };
            if !m.within_bounds() {
                failures += 1;
            }
            println!(
                "{verdict} n={n} q={q} rho={:.5}  E|e|_q^2 = {:.6} (se {:.1e}, bound {:.6})  E<s,e>^2|e|_q^2 = {:.6e} (se {:.1e}, bound {:.6e})",
                rho(n, q)?,
                m.norm_mean,
                m.norm_se,
                m.norm_bound,
                m.projected_mean,
                m.projected_se,
                m.projected_bound
            );
        }
    }
    if failures > 0 {
        return Err(CliError::Failed(format!("{failures} moment checks failed")));
    }
    Ok(())
}
