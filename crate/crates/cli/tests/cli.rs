use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dfds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfds"))
        .args(args)
        .env_remove("DFDS_OUT_DIR")
        .output()
        .expect("runs the binary")
}

fn ok(args: &[&str]) -> String {
    let out = dfds(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn plan_json(args: &[&str]) -> Value {
    let stdout = ok(args);
    serde_json::from_str(stdout.lines().last().unwrap()).unwrap()
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn noiseless_plan_uses_single_pairs() {
    let plan = plan_json(&[
        "plan", "--method", "ardfds", "--p", "2", "--n", "100", "--eps", "1e-3", "--L2", "10",
        "--sigma2", "0", "--theta", "50",
    ]);
    assert_eq!(plan["batch"], 1);
    assert_eq!(plan["n_iters"], 70711);
}

#[test]
fn plan_iterations_scale_with_dimension_by_geometry() {
    let iters = |p: &str, n: usize| {
        let n = n.to_string();
        plan_json(&[
            "plan", "--method", "ardfds", "--p", p, "--n", &n, "--eps", "1e-3", "--l2", "10",
            "--theta", "50",
        ])["n_iters"]
            .as_f64()
            .unwrap()
    };
    for n in [100usize, 1000, 10000] {
        let nf = n as f64;
        let ratio = (iters("2", n) / iters("1", n)).powi(2);
        let expected = nf / nf.ln();
        assert!(
            (ratio / expected - 1.0).abs() < 1e-3,
            "n={n}: {ratio} vs {expected}"
        );
    }
}

#[test]
fn plan_accepts_the_nesterov_preset() {
    let plan = plan_json(&[
        "plan", "--method", "rdfds", "--p", "1", "--n", "100", "--eps", "1e-3", "--L2", "10",
        "--preset", "nesterov",
    ]);
    assert!(plan["theta"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_eps_is_a_usage_error() {
    let out = dfds(&[
        "plan", "--method", "ardfds", "--p", "2", "--n", "100", "--L2", "10", "--theta", "50",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--eps"));
}

#[test]
fn run_writes_one_trace_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&[
        "run",
        "--method",
        "ardfds",
        "--p",
        "1",
        "--n",
        "100",
        "--seeds",
        "0..10",
        "--n-iters",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    let files = csv_files(&out);
    assert_eq!(files.len(), 11);
    assert!(out.join("manifest.json").exists());

    let seed = String::from_utf8(files["seed_4.csv"].clone()).unwrap();
    let mut lines = seed.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iter,oracle_calls,rel_acc,f_gap,elapsed_s"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[..3], ["0", "0", "1.0"]);
    assert!((first[3].parse::<f64>().unwrap() - 250.0).abs() < 1e-9);
    assert_eq!(first[4], "");
    let aggregate = String::from_utf8(files["aggregate.csv"].clone()).unwrap();
    assert!(aggregate.starts_with(
        "iter,oracle_calls,rel_acc,f_gap,elapsed_s,rel_acc_mean,rel_acc_min,rel_acc_max\n"
    ));
    assert_eq!(aggregate.lines().count(), seed.lines().count());

    let m = manifest(&out);
    assert_eq!(m["seeds"].as_array().unwrap().len(), 10);
    assert_eq!(m["runs"].as_array().unwrap().len(), 10);
    assert_eq!(m["gamma"], 2000.0);
    assert_eq!(m["n_iters"], 500);
    assert_eq!(m["runs"][0]["oracle_calls"], 500);
    assert!(m["planner"]["n_iters"].as_u64().unwrap() > 500);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec![
            "run",
            "--p",
            "1",
            "--n",
            "60",
            "--seeds",
            "0..4",
            "--n-iters",
            "400",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        ok(&args);
        out
    };
    let first = run("a", &[]);
    let second = run("b", &[]);
    let one = run("c", &["--workers", "1"]);
    let many = run("d", &["--workers", "8"]);
    let replay = dir.path().join("e");
    ok(&[
        "run",
        "--manifest",
        first.join("manifest.json").to_str().unwrap(),
        "--out",
        replay.to_str().unwrap(),
    ]);

    let reference = csv_files(&first);
    for other in [&second, &one, &many, &replay] {
        assert_eq!(csv_files(other), reference, "{}", other.display());
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        "method = \"rdfds\"\np = 2\nn = 40\nseeds = [3, 5]\nn_iters = 120\ngamma = 4.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--gamma",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    let m = manifest(&out);
    assert_eq!(m["config"]["method"], "rdfds");
    assert_eq!(m["config"]["n"], 40);
    assert_eq!(m["gamma"], 16.0);
    assert!(out.join("seed_3.csv").exists() && out.join("seed_5.csv").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(&config, "dimension = 40\n").unwrap();
    let out = dfds(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn early_stop_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stop");
    ok(&[
        "run",
        "--p",
        "2",
        "--n",
        "100",
        "--sigma2",
        "0",
        "--delta",
        "0",
        "--gamma",
        "8",
        "--seeds",
        "0..3",
        "--n-iters",
        "50000",
        "--record-every",
        "10",
        "--until-rel-acc",
        "1e-5",
        "--out",
        out.to_str().unwrap(),
    ]);
    let m = manifest(&out);
    let stop = m["stop_iteration"].as_u64().expect("stopped early");
    assert!(stop < 50_000 && stop % 10 == 0);
    for run in m["runs"].as_array().unwrap() {
        assert_eq!(run["oracle_calls"].as_u64().unwrap(), stop);
    }
    let aggregate = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    let last: Vec<&str> = aggregate.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0].parse::<u64>().unwrap(), stop);
    assert!(last[5].parse::<f64>().unwrap() <= 1e-5);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env-out");
    let status = Command::new(env!("CARGO_BIN_EXE_dfds"))
        .args(["run", "--n", "20", "--n-iters", "10", "--seeds", "0"])
        .env("DFDS_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(out.join("seed_0.csv").exists());
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let target = blocker.join("sub");
    let out = dfds(&[
        "run",
        "--n",
        "20",
        "--n-iters",
        "10",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn diverging_solver_exits_4_with_seed_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = dfds(&[
        "run",
        "--n",
        "20",
        "--gamma",
        "1e300",
        "--n-iters",
        "20",
        "--seeds",
        "5,6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed index 0"));
}

#[test]
fn invalid_experiments_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for args in [
        vec!["run", "--n", "7", "--out", d],
        vec!["run", "--seeds", "2,2", "--out", d],
        vec!["run", "--method", "rspgf", "--p", "1", "--out", d],
        vec![
            "run",
            "--workers",
            "0",
            "--n",
            "20",
            "--n-iters",
            "5",
            "--out",
            d,
        ],
    ] {
        assert_eq!(dfds(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn gamma_grid_writes_one_aggregate_per_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid");
    let stdout = ok(&[
        "gamma-grid",
        "--n",
        "30",
        "--n-iters",
        "200",
        "--seeds",
        "0..3",
        "--gammas",
        "1,4,16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(csv_files(&out).len(), 3);
    assert!(out.join("aggregate_gamma_16.0.csv").exists());
    let m = manifest(&out);
    let gammas: Vec<f64> = m
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["gamma"].as_f64().unwrap())
        .collect();
    assert_eq!(gammas, [1.0, 4.0, 16.0]);
    assert_eq!(stdout.lines().count(), 4);
}

#[test]
fn lemma_check_passes_and_reports_errors() {
    let stdout = ok(&[
        "verify-lemma1",
        "--n",
        "8,100",
        "--q",
        "2,inf",
        "--samples",
        "20000",
    ]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines
        .iter()
        .all(|l| l.starts_with("PASS") && l.contains("se ")));
    assert!(lines[3].contains("rho=0.65683"));
}

#[test]
fn lemma_check_refuses_small_dimensions() {
    let out = dfds(&["verify-lemma1", "--n", "7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n >= 8"));
}
