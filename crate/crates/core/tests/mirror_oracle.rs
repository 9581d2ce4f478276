//! The closed-form ℓ1 mirror step against a numerical minimizer of
//! `⟨s, u − z⟩ + V[z](u)`.

use dfds_core::ProxSetup;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Subproblem {
    a: f64,
    kappa: f64,
    // u ↦ A‖u‖_κ² − ⟨c, u⟩ with c = ∇d(z) − s
    c: Vec<f64>,
}

fn naive_grad_d(a: f64, kappa: f64, u: &[f64]) -> Vec<f64> {
    let sum: f64 = u.iter().map(|v| v.abs().powf(kappa)).sum();
    if sum == 0.0 {
        return vec![0.0; u.len()];
    }
    u.iter()
        .map(|v| 2.0 * a * sum.powf((2.0 - kappa) / kappa) * v.abs().powf(kappa - 1.0) * v.signum())
        .collect()
}

impl Subproblem {
    fn new(setup: &ProxSetup, z: &[f64], s: &[f64]) -> Self {
        let a = setup.scale();
        let kappa = setup.kappa().unwrap();
        let grad = naive_grad_d(a, kappa, z);
        Self {
            a,
            kappa,
            c: grad.iter().zip(s).map(|(g, si)| g - si).collect(),
        }
    }

    fn value(&self, u: &[f64]) -> f64 {
        let sum: f64 = u.iter().map(|v| v.abs().powf(self.kappa)).sum();
        self.a * sum.powf(2.0 / self.kappa) - u.iter().zip(&self.c).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Exact minimization over coordinate `i`, the rest fixed at `rest = Σ_{j≠i}|u_j|^κ`.
    fn coordinate_min(&self, rest: f64, ci: f64) -> f64 {
        if ci == 0.0 {
            return 0.0;
        }
        let k = self.kappa;
        let slope =
            |w: f64| 2.0 * self.a * (rest + w.powf(k)).powf((2.0 - k) / k) * w.powf(k - 1.0);
        let target = ci.abs();
        let mut hi = 1.0;
        while slope(hi) < target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi) * ci.signum()
    }

    /// `u_i` solving the coordinate optimality condition when `Σ|u_j|^κ = total`.
    fn coordinate_given_total(&self, total: f64, ci: f64) -> f64 {
        let k = self.kappa;
        (ci.abs() / (2.0 * self.a * total.powf((2.0 - k) / k))).powf(1.0 / (k - 1.0)) * ci.signum()
    }

    /// Root of `ln total − ln Σ|u_i(total)|^κ`, found by bisection on `ln total`.
    fn solve(&self) -> Vec<f64> {
        if self.c.iter().all(|v| *v == 0.0) {
            return vec![0.0; self.c.len()];
        }
        let excess = |log_total: f64| {
            let total = log_total.exp();
            let implied: f64 = self
                .c
                .iter()
                .map(|ci| {
                    self.coordinate_given_total(total, *ci)
                        .abs()
                        .powf(self.kappa)
                })
                .sum();
            log_total - implied.ln()
        };
        let (mut lo, mut hi) = (-1.0, 1.0);
        while excess(lo) > 0.0 {
            lo *= 2.0;
        }
        while excess(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if excess(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let total = (0.5 * (lo + hi)).exp();
        self.c
            .iter()
            .map(|ci| self.coordinate_given_total(total, *ci))
            .collect()
    }

    /// One sweep of exact coordinate minimization.
    fn sweep(&self, u: &mut [f64]) {
        let mut powers: Vec<f64> = u.iter().map(|v| v.abs().powf(self.kappa)).collect();
        let mut total: f64 = powers.iter().sum();
        for i in 0..u.len() {
            let rest = (total - powers[i]).max(0.0);
            u[i] = self.coordinate_min(rest, self.c[i]);
            powers[i] = u[i].abs().powf(self.kappa);
            total = rest + powers[i];
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_dimension(n: usize, pairs: usize, seed: u64) {
    let setup = ProxSetup::l1(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_dist = 0.0_f64;
    let mut worst_residual = 0.0_f64;
    for pair in 0..pairs {
        let z_scale = [0.1, 1.0, 10.0][pair % 3];
        let z = gaussian(&mut rng, n, z_scale);
        let s = gaussian(
            &mut rng,
            n,
            setup.scale() * z_scale * [0.01, 0.3, 3.0][pair % 5 % 3],
        );
        let closed = setup.mirror_step(&z, &s).unwrap();

        let sub = Subproblem::new(&setup, &z, &s);
        let numeric = sub.solve();
        // the root must be a fixed point of exact coordinate minimization
        let mut polished = numeric.clone();
        for _ in 0..3 {
            sub.sweep(&mut polished);
        }
        let (fn_, fp) = (sub.value(&numeric), sub.value(&polished));
        assert!(
            fp >= fn_ - 1e-10 * (1.0 + fn_.abs()),
            "n={n} pair {pair}: oracle not optimal, {fn_} vs {fp}"
        );
        assert!(
            dist(&numeric, &polished) <= 1e-8,
            "n={n} pair {pair}: coordinate sweeps moved the oracle"
        );

        let fc = sub.value(&closed);
        assert!(
            fc <= fn_ + 1e-10 * (1.0 + fn_.abs()),
            "n={n} pair {pair}: objective {fc} vs oracle {fn_}"
        );

        let d = dist(&closed, &numeric);
        worst_dist = worst_dist.max(d);
        assert!(d <= 1e-6, "n={n} pair {pair}: distance {d}");

        // ∇d(u) − ∇d(z) + s = 0
        let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let grad_u = naive_grad_d(sub.a, sub.kappa, &closed);
        let residual = grad_u
            .iter()
            .zip(&sub.c)
            .map(|(g, c)| (g - c) * (g - c))
            .sum::<f64>()
            .sqrt();
        worst_residual = worst_residual.max(residual / (1.0 + s_norm));
        assert!(
            residual <= 1e-8 * (1.0 + s_norm),
            "n={n} pair {pair}: residual {residual}"
        );
    }
    println!("n={n}: worst distance {worst_dist:e}, worst scaled residual {worst_residual:e}");
}

#[test]
fn closed_form_matches_numerical_minimizer_n10() {
    check_dimension(10, 200, 10);
}

#[test]
fn closed_form_matches_numerical_minimizer_n100() {
    check_dimension(100, 200, 100);
}

#[test]
fn basis_step_from_origin() {
    let setup = ProxSetup::l1(100).unwrap();
    let mut s = vec![0.0; 100];
    // ŝ = −s/A_n = 2e₁
    s[0] = -2.0 * setup.scale();
    let u = setup.mirror_step(&[0.0; 100], &s).unwrap();
    assert!((u[0] - 1.0).abs() < 1e-12);
    assert!(u[1..].iter().all(|v| *v == 0.0));
    let sub = Subproblem::new(&setup, &[0.0; 100], &s);
    assert!(dist(&sub.solve(), &u) < 1e-9);
}
