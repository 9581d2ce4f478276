//! Proximal setups for the Euclidean (`p = 2`) and ℓ1 (`p = 1`) geometries.
//!
//! * `p = 2`: `d(x) = ½‖x‖₂²`, Bregman divergence `½‖x − z‖₂²`, mirror step `z − s`.
//! * `p = 1`: `d(x) = A_n‖x‖_κ²` with `κ = 1 + 1/ln n` and
//!   `A_n = e·n^{(κ−1)(2−κ)/κ}·ln n / 2`.
//!
//! The ℓ1 mirror step `argmin_u ⟨s, u − z⟩ + V[z](u)` is solved in closed form.
//! Dividing the objective by `A_n` turns it into `min −⟨ŝ, u⟩ + ‖u‖_κ²` with
//! `ŝ = −s/A_n + ∇‖·‖_κ²(z)`, whose minimizer is the point where
//! `∇‖u‖_κ² = ŝ`:
//!
//! ```text
//! uᵢ = sign(ŝᵢ) (|ŝᵢ|/2)^{1/(κ−1)} (Σⱼ (|ŝⱼ|/2)^{κ/(κ−1)})^{(κ−2)/κ}
//! ```
//!
//! No further rescaling is needed. The exponent `1/(κ−1) = ln n` is large, so
//! every power is taken of a ratio in `[0, 1]` after factoring out the largest
//! magnitude, which keeps the computation free of overflow.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{dot, norm1, norm2, norm_inf};

/// Norm of the proximal setup: `p = 2` or `p = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Euclidean,
    L1,
}

impl Geometry {
    pub fn from_p(p: u8) -> Result<Self> {
        match p {
            2 => Ok(Geometry::Euclidean),
            1 => Ok(Geometry::L1),
            _ => Err(invalid(
                "p",
                format!("only p = 1 and p = 2 are supported, got {p}"),
            )),
        }
    }

    pub fn p(self) -> u8 {
        match self {
            Geometry::Euclidean => 2,
            Geometry::L1 => 1,
        }
    }

    pub fn dual(self) -> DualExponent {
        match self {
            Geometry::Euclidean => DualExponent::Two,
            Geometry::L1 => DualExponent::Infinity,
        }
    }
}

/// Conjugate exponent `q` with `1/p + 1/q = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DualExponent {
    Two,
    Infinity,
}

impl DualExponent {
    pub fn norm(self, g: &[f64]) -> f64 {
        match self {
            DualExponent::Two => norm2(g),
            DualExponent::Infinity => norm_inf(g),
        }
    }
}

impl std::fmt::Display for DualExponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DualExponent::Two => f.write_str("2"),
            DualExponent::Infinity => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for DualExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "2" => Ok(DualExponent::Two),
            "inf" | "infinity" | "∞" => Ok(DualExponent::Infinity),
            other => Err(invalid("q", format!("expected 2 or inf, got `{other}`"))),
        }
    }
}

/// `ρ_n = min{q − 1, 16 ln n − 8}·n^{2/q − 1}`, an upper bound on `E‖e‖_q²`
/// for `e` uniform on the unit sphere. Defined for `n >= 8`.
pub fn rho(n: usize, q: DualExponent) -> Result<f64> {
    if n < 8 {
        return Err(Error::DimensionTooSmall { n });
    }
    let nf = n as f64;
    let log_term = 16.0 * nf.ln() - 8.0;
    Ok(match q {
        DualExponent::Two => 1.0_f64.min(log_term),
        // min{∞, ·} picks the log term; n^{2/∞ − 1} = 1/n
        DualExponent::Infinity => log_term / nf,
    })
}

/// `‖x‖_κ`, computed with the largest magnitude factored out.
pub fn kappa_norm(x: &[f64], kappa: f64) -> f64 {
    let top = norm_inf(x);
    if top == 0.0 {
        return 0.0;
    }
    let sum: f64 = x.iter().map(|v| (v.abs() / top).powf(kappa)).sum();
    top * sum.powf(1.0 / kappa)
}

/// Gradient of `‖z‖_κ²`: `2(Σ|zⱼ|^κ)^{(2−κ)/κ}|zᵢ|^{κ−1}sign(zᵢ)`, and `0` at `z = 0`.
pub fn grad_kappa_norm_sq(z: &[f64], kappa: f64) -> Vec<f64> {
    let top = norm_inf(z);
    if top == 0.0 {
        return vec![0.0; z.len()];
    }
    // r^{κ−1} per coordinate; r^κ follows by one more multiplication
    let powers: Vec<f64> = z
        .iter()
        .map(|v| (v.abs() / top).powf(kappa - 1.0))
        .collect();
    let sum: f64 = z
        .iter()
        .zip(&powers)
        .map(|(v, w)| w * (v.abs() / top))
        .sum();
    let factor = 2.0 * top * sum.powf((2.0 - kappa) / kappa);
    z.iter()
        .zip(powers)
        .map(|(v, w)| {
            if *v == 0.0 {
                0.0
            } else {
                factor * w * v.signum()
            }
        })
        .collect()
}

/// Minimizer of `−⟨ŝ, u⟩ + ‖u‖_κ²`, i.e. the point whose gradient of
/// `‖·‖_κ²` equals `ŝ`.
pub fn kappa_dual_map(s_hat: &[f64], kappa: f64) -> Vec<f64> {
    let top = norm_inf(s_hat) / 2.0;
    if top == 0.0 {
        return vec![0.0; s_hat.len()];
    }
    let ratio = |v: &f64| v.abs() / 2.0 / top;
    let powers: Vec<f64> = s_hat
        .iter()
        .map(|v| ratio(v).powf(1.0 / (kappa - 1.0)))
        .collect();
    // r^{κ/(κ−1)} = r · r^{1/(κ−1)}
    let sum: f64 = s_hat.iter().zip(&powers).map(|(v, w)| w * ratio(v)).sum();
    let factor = top * sum.powf((kappa - 2.0) / kappa);
    s_hat
        .iter()
        .zip(powers)
        .map(|(v, w)| {
            if *v == 0.0 {
                0.0
            } else {
                factor * w * v.signum()
            }
        })
        .collect()
}

/// Mirror-descent iterate stored with `∇‖z‖_κ²` for the ℓ1 setup.
///
/// The gradient of the next iterate is the dual vector `ŝ` of the step that
/// produced it, so it is carried over instead of recomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorPoint {
    primal: Vec<f64>,
    dual: Option<Vec<f64>>,
}

impl MirrorPoint {
    pub fn primal(&self) -> &[f64] {
        &self.primal
    }
}

/// A prox-function together with its geometry and dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxSetup {
    geometry: Geometry,
    dim: usize,
    /// `κ` for `p = 1`; `2` for the Euclidean setup.
    kappa: f64,
    /// Prox-function scale: `A_n` for `p = 1`, `½` for `p = 2`.
    scale: f64,
}

impl ProxSetup {
    pub fn new(geometry: Geometry, dim: usize) -> Result<Self> {
        match geometry {
            Geometry::Euclidean => Self::euclidean(dim),
            Geometry::L1 => Self::l1(dim),
        }
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "dimension must be at least 1"));
        }
        Ok(Self {
            geometry: Geometry::Euclidean,
            dim,
            kappa: 2.0,
            scale: 0.5,
        })
    }

    /// The `κ`-norm setup; needs `n >= 2` so that `κ = 1 + 1/ln n` is finite.
    pub fn l1(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(invalid("dim", "the l1 setup needs dimension at least 2"));
        }
        let n = dim as f64;
        let ln_n = n.ln();
        let kappa = 1.0 + 1.0 / ln_n;
        let scale =
            std::f64::consts::E * n.powf((kappa - 1.0) * (2.0 - kappa) / kappa) * ln_n / 2.0;
        Ok(Self {
            geometry: Geometry::L1,
            dim,
            kappa,
            scale,
        })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> u8 {
        self.geometry.p()
    }

    pub fn q(&self) -> DualExponent {
        self.geometry.dual()
    }

    /// `κ` of the ℓ1 setup.
    pub fn kappa(&self) -> Option<f64> {
        (self.geometry == Geometry::L1).then_some(self.kappa)
    }

    /// `A_n` for `p = 1`, `½` for `p = 2`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rho(&self) -> Result<f64> {
        rho(self.dim, self.q())
    }

    /// `‖x‖_p`.
    pub fn primal_norm(&self, x: &[f64]) -> f64 {
        match self.geometry {
            Geometry::Euclidean => norm2(x),
            Geometry::L1 => norm1(x),
        }
    }

    /// `‖g‖_q`.
    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        self.q().norm(g)
    }

    /// `d(x)`.
    pub fn prox_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(match self.geometry {
            Geometry::Euclidean => 0.5 * dot(x, x),
            Geometry::L1 => self.scale * kappa_norm(x, self.kappa).powi(2),
        })
    }

    /// `∇d(x)`.
    pub fn prox_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(match self.geometry {
            Geometry::Euclidean => x.to_vec(),
            Geometry::L1 => grad_kappa_norm_sq(x, self.kappa)
                .into_iter()
                .map(|g| self.scale * g)
                .collect(),
        })
    }

    /// Gradient of `‖z‖_κ²` for the ℓ1 setup.
    pub fn grad_kappa_norm_sq(&self, z: &[f64]) -> Result<Vec<f64>> {
        if self.geometry != Geometry::L1 {
            return Err(invalid(
                "setup",
                "the κ-norm gradient exists only for the l1 setup",
            ));
        }
        check_dim(self.dim, z.len())?;
        Ok(grad_kappa_norm_sq(z, self.kappa))
    }

    /// `V[z](x) = d(x) − d(z) − ⟨∇d(z), x − z⟩`.
    pub fn bregman(&self, z: &[f64], x: &[f64]) -> Result<f64> {
        check_dim(self.dim, z.len())?;
        check_dim(self.dim, x.len())?;
        match self.geometry {
            Geometry::Euclidean => {
                Ok(0.5 * x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            }
            Geometry::L1 => {
                let grad = self.prox_gradient(z)?;
                let linear: f64 = grad
                    .iter()
                    .zip(x.iter().zip(z))
                    .map(|(g, (a, b))| g * (a - b))
                    .sum();
                let value = self.prox_value(x)? - self.prox_value(z)? - linear;
                // cancellation can leave a tiny negative residue
                Ok(value.max(0.0))
            }
        }
    }

    /// `argmin_u ⟨s, u − z⟩ + V[z](u)`.
    pub fn mirror_step(&self, z: &[f64], s: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, z.len())?;
        check_dim(self.dim, s.len())?;
        Ok(match self.geometry {
            Geometry::Euclidean => z.iter().zip(s).map(|(a, b)| a - b).collect(),
            Geometry::L1 if s.iter().all(|&v| v == 0.0) => z.to_vec(),
            Geometry::L1 => {
                let s_hat = self.mirror_dual(z, s);
                kappa_dual_map(&s_hat, self.kappa)
            }
        })
    }

    /// Wraps `z` for repeated mirror steps.
    pub fn mirror_point(&self, z: &[f64]) -> Result<MirrorPoint> {
        check_dim(self.dim, z.len())?;
        let dual = match self.geometry {
            Geometry::Euclidean => None,
            Geometry::L1 => Some(grad_kappa_norm_sq(z, self.kappa)),
        };
        Ok(MirrorPoint {
            primal: z.to_vec(),
            dual,
        })
    }

    /// In-place [`mirror_step`](Self::mirror_step) on a tracked point.
    pub fn advance(&self, point: &mut MirrorPoint, s: &[f64]) -> Result<()> {
        check_dim(self.dim, s.len())?;
        check_dim(self.dim, point.primal.len())?;
        match point.dual.as_mut() {
            None => {
                for (z, si) in point.primal.iter_mut().zip(s) {
                    *z -= si;
                }
            }
            Some(_) if s.iter().all(|&v| v == 0.0) => {}
            Some(dual) => {
                for (d, si) in dual.iter_mut().zip(s) {
                    *d -= si / self.scale;
                }
                point.primal = kappa_dual_map(dual, self.kappa);
            }
        }
        Ok(())
    }

    /// `ŝ = −s/A_n + ∇‖·‖_κ²(z)`.
    fn mirror_dual(&self, z: &[f64], s: &[f64]) -> Vec<f64> {
        let grad = grad_kappa_norm_sq(z, self.kappa);
        grad.iter()
            .zip(s)
            .map(|(g, si)| g - si / self.scale)
            .collect()
    }
}
