//! Invariants of the Nesterov benchmark problem.

use dfds_core::benchmarks::{nesterov_value, run_experiment, ExperimentConfig, NesterovProblem};
use dfds_core::{evaluate_pair, Method, NoisyProblem, OracleLedger, XiSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `H = (L₂/4)·tridiag(−1, 2, −1)` applied to `v`.
fn hessian_apply(l2: f64, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { v[i - 1] } else { 0.0 };
            let right = if i + 1 < n { v[i + 1] } else { 0.0 };
            l2 / 4.0 * (2.0 * v[i] - left - right)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn optimal_value_matches_direct_evaluation() {
    for n in [4, 100, 1000] {
        let l2 = 10.0;
        let x_star: Vec<f64> = (1..=n).map(|i| 1.0 - i as f64 / (n as f64 + 1.0)).collect();
        let direct = nesterov_value(l2, &x_star);
        let closed = l2 / 8.0 * (-1.0 + 1.0 / (n as f64 + 1.0));
        assert!(
            (direct - closed).abs() <= 1e-12 * closed.abs(),
            "n={n}: {direct} vs {closed}"
        );
        let problem = NesterovProblem::deterministic(n, l2).unwrap();
        assert!((problem.f_star() - closed).abs() <= 1e-12 * closed.abs());
    }
}

#[test]
fn pair_at_optimum_returns_optimal_value() {
    let problem = NesterovProblem::deterministic(4, 10.0).unwrap();
    let x = [0.8, 0.6, 0.4, 0.2];
    let ledger = OracleLedger::new();
    let (a, b) = evaluate_pair(&problem, &x, &x, XiSeed(3), &ledger).unwrap();
    assert!((a + 1.0).abs() < 1e-12 && (b + 1.0).abs() < 1e-12);
}

#[test]
fn gap_is_the_hessian_quadratic_form() {
    let l2 = 7.0;
    let n = 60;
    let problem = NesterovProblem::deterministic(n, l2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let scale = rng.random_range(0.1..10.0);
        let x: Vec<f64> = (0..n)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let d: Vec<f64> = x.iter().zip(problem.x_star()).map(|(a, b)| a - b).collect();
        let quad = 0.5 * dot(&d, &hessian_apply(l2, &d));
        let gap = problem.value(&x) - problem.f_star();
        assert!((gap - quad).abs() <= 1e-8 * quad.abs(), "{gap} vs {quad}");
    }
}

#[test]
fn hessian_norm_is_below_smoothness_constant() {
    let l2 = 10.0;
    for n in [10, 100, 1000] {
        let mut v: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -0.7 })
            .collect();
        let mut estimate = 0.0;
        for _ in 0..5000 {
            let w = hessian_apply(l2, &v);
            let norm = dot(&w, &w).sqrt();
            estimate = norm / dot(&v, &v).sqrt();
            v = w.iter().map(|x| x / norm).collect();
        }
        println!("n={n}: ‖H‖ ≈ {estimate}");
        assert!(estimate <= l2, "n={n}: {estimate}");
        assert!(estimate > 0.9 * l2);
    }
}

#[test]
fn noisy_oracle_moments() {
    let n = 20;
    let sigma2 = 0.25;
    let delta = 0.05;
    let problem = NesterovProblem::new(n, 10.0, sigma2, delta, 9).unwrap();
    let x: Vec<f64> = (0..n).map(|i| 0.5 - i as f64 * 0.03).collect();
    let base = problem.value(&x) + delta * dot(&x, &x).sqrt().sin();
    let ax = dot(problem.a(), &x);
    let samples = 100_000;
    let residuals: Vec<f64> = (0..samples)
        .map(|i| problem.noisy_value(&x, XiSeed::derive(77, i, 0)) - base)
        .collect();
    let mean = residuals.iter().sum::<f64>() / samples as f64;
    let var = residuals
        .iter()
        .map(|r| (r - mean) * (r - mean))
        .sum::<f64>()
        / (samples as f64 - 1.0);
    let expected = sigma2 * ax * ax;
    assert!(
        mean.abs() <= 3.0 * (expected / samples as f64).sqrt(),
        "mean {mean}"
    );
    assert!(
        (var - expected).abs() <= 0.05 * expected,
        "{var} vs {expected}"
    );
}

#[test]
fn adversarial_noise_is_bounded() {
    let delta = 0.2;
    let problem = NesterovProblem::new(30, 10.0, 1.0, delta, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..10_000u64 {
        let scale = rng.random_range(0.0..50.0);
        let x: Vec<f64> = (0..30)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        assert!(problem.adversarial_noise(&x, XiSeed(i)).abs() <= delta);
    }
}

#[test]
fn relative_accuracy_trace_is_normalized() {
    for (method, p) in [(Method::Ardfds, 1), (Method::Rdfds, 2), (Method::Rspgf, 2)] {
        let config = ExperimentConfig {
            method,
            p,
            n: 30,
            n_iters: Some(400),
            seeds: vec![3, 4],
            record_every: Some(7),
            ..Default::default()
        };
        let result = run_experiment(&config).unwrap();
        for run in &result.runs {
            assert_eq!(run.records[0].rel_acc, 1.0);
            assert!(run.records.iter().all(|r| r.rel_acc >= -1e-12));
            assert_eq!(run.records.last().unwrap().iter, 400);
        }
    }
}
