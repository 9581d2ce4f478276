//! Order-of-magnitude parameter recipes for ARDFDS and RDFDS.
//!
//! The recipes only fix rates, not constants; every quantity is multiplied by
//! the single knob `c_scale` (default `1`).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::prox::{Geometry, ProxSetup};

use super::{Method, SolverParams};

/// Inputs of [`plan_parameters`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanInput {
    pub method: Method,
    pub geometry: Geometry,
    /// Target accuracy `ε` of `E f(x) − f*`.
    pub eps: f64,
    pub lipschitz_grad: f64,
    pub sigma2: f64,
    /// `Θ_p = V[x₀](x*)`.
    pub theta: f64,
    pub n: usize,
    pub c_scale: f64,
    /// Known actual noise level; floors `t` at `2√(Δ/L₂)`.
    pub delta_actual: Option<f64>,
}

impl PlanInput {
    pub fn new(
        method: Method,
        geometry: Geometry,
        n: usize,
        eps: f64,
        lipschitz_grad: f64,
        sigma2: f64,
        theta: f64,
    ) -> Self {
        Self {
            method,
            geometry,
            eps,
            lipschitz_grad,
            sigma2,
            theta,
            n,
            c_scale: 1.0,
            delta_actual: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("eps", self.eps),
            ("lipschitz_grad", self.lipschitz_grad),
            ("theta", self.theta),
            ("c_scale", self.c_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(invalid(
                "sigma2",
                format!("must be non-negative, got {}", self.sigma2),
            ));
        }
        if let Some(d) = self.delta_actual {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(invalid(
                    "delta_actual",
                    format!("must be non-negative, got {d}"),
                ));
            }
        }
        if self.n < 8 {
            return Err(Error::DimensionTooSmall { n: self.n });
        }
        if self.method == Method::Rspgf {
            return Err(invalid(
                "method",
                "the planner covers ARDFDS and RDFDS only",
            ));
        }
        Ok(())
    }
}

/// Planned iteration count, batch size, smoothing and tolerable noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedParameters {
    pub method: Method,
    pub geometry: Geometry,
    pub n_iters: usize,
    pub batch: usize,
    pub smoothing: f64,
    /// Largest noise level `Δ` the recipe tolerates.
    pub delta_budget: f64,
}

impl PlannedParameters {
    pub fn solver_params(
        &self,
        setup: ProxSetup,
        lipschitz_grad: f64,
        gamma: f64,
        base_seed: u64,
    ) -> SolverParams {
        SolverParams::new(setup, lipschitz_grad, self.n_iters)
            .with_batch(self.batch)
            .with_smoothing(self.smoothing)
            .with_gamma(gamma)
            .with_seed(base_seed)
    }
}

/// Picks `N`, `m`, `t` and the `Δ` budget for the requested method and setup.
pub fn plan_parameters(input: &PlanInput) -> Result<PlannedParameters> {
    input.validate()?;
    let PlanInput {
        method,
        geometry,
        eps,
        lipschitz_grad: l2,
        sigma2,
        theta,
        c_scale: c,
        ..
    } = *input;
    let n = input.n as f64;
    let ln_n = n.ln();

    let (iters, batch, delta, smoothing) = match (method, geometry) {
        (Method::Ardfds, Geometry::L1) => (
            (n * ln_n * l2 * theta / eps).sqrt(),
            sigma2 / eps.powf(1.5) * (theta * ln_n / (n * l2)).sqrt(),
            (eps.powf(1.5) / (l2 * theta * n * ln_n).sqrt()).min(eps * eps / (n * l2 * theta)),
            (eps.powf(0.75) / (l2.powi(3) * theta * n * ln_n).powf(0.25))
                .min(eps / (l2 * (n * theta).sqrt())),
        ),
        (Method::Ardfds, Geometry::Euclidean) => (
            (n * n * l2 * theta / eps).sqrt(),
            sigma2 / eps.powf(1.5) * (theta / l2).sqrt(),
            (eps.powf(1.5) / (n * (l2 * theta).sqrt())).min(eps * eps / (n * l2 * theta)),
            (eps.powf(0.75) / (n * n * l2.powi(3) * theta).powf(0.25))
                .min(eps / (l2 * (n * theta).sqrt())),
        ),
        (Method::Rdfds, Geometry::L1) => (
            ln_n * l2 * theta / eps,
            sigma2 / (l2 * eps),
            (eps / n).min(eps * eps / (n * l2 * theta)),
            (eps / (n * l2))
                .sqrt()
                .min(eps / (n * l2 * l2 * theta).sqrt()),
        ),
        (Method::Rdfds, Geometry::Euclidean) => (
            n * l2 * theta / eps,
            sigma2 / (l2 * eps),
            (eps / n).min(eps * eps / (n * l2 * theta)),
            (eps / (n * l2))
                .sqrt()
                .min(eps / (n * l2 * l2 * theta).sqrt()),
        ),
        (Method::Rspgf, _) => unreachable!("rejected by validate"),
    };

    let n_iters = to_count(c * iters)?;
    let batch = to_count(c * batch)?.max(1);
    let delta_budget = c * delta;
    let mut smoothing = c * smoothing;
    if let Some(delta_actual) = input.delta_actual {
        smoothing = smoothing.max(2.0 * (delta_actual / l2).sqrt());
    }

    Ok(PlannedParameters {
        method,
        geometry,
        n_iters: n_iters.max(1),
        batch,
        smoothing,
        delta_budget,
    })
}

fn to_count(v: f64) -> Result<usize> {
    let v = v.ceil();
    if !v.is_finite() || v > usize::MAX as f64 {
        return Err(invalid(
            "plan",
            format!("planned count {v} is not representable"),
        ));
    }
    Ok(v as usize)
}
