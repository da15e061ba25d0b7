use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numerics::{orthonormalize_columns, Matrix, RngStream};

/// Gaussian residual `β ~ N(0, c² I)` left over after projecting out a rank
/// `F − r` subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualModel {
    /// Rank loss (degrees of freedom of the residual norm).
    pub r: usize,
    /// Per-coordinate standard deviation.
    pub c: f64,
}

impl ResidualModel {
    pub fn new(r: usize, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!(
                "residual scale {c} must be positive"
            )));
        }
        Ok(ResidualModel { r, c })
    }
}

/// `E[c χ_k]` for real `k > 0`.
pub fn chi_mean(k: f64, c: f64) -> f64 {
    c * std::f64::consts::SQRT_2 * (ln_gamma((k + 1.0) / 2.0) - ln_gamma(k / 2.0)).exp()
}

/// Mean and variance of `c χ_r`; `(0, 0)` for `r = 0`.
pub fn chi_moments(rm: ResidualModel) -> (f64, f64) {
    if rm.r == 0 {
        return (0.0, 0.0);
    }
    let r = rm.r as f64;
    let mean = chi_mean(r, rm.c);
    (mean, (rm.c * rm.c * r - mean * mean).max(0.0))
}

/// Norms `‖(I − P) ς‖` for `ς ~ N(0, c² I_F)` and `P` the orthogonal projector
/// onto a random `(F − r)`-dimensional subspace.
pub fn gaussian_projection_samples(
    f: usize,
    r: usize,
    c: f64,
    n_samples: usize,
    rng: RngStream,
) -> Result<Vec<f64>> {
    if f == 0 || r > f {
        return Err(Error::invalid(format!(
            "rank loss {r} must lie in [0, {f}]"
        )));
    }
    ResidualModel::new(r, c)?;
    let mut gen = rng.derive(0).rng();
    let kept = f - r;
    let basis = orthonormalize_columns(&Matrix::from_fn(f, kept, |_, _| {
        RngStream::normal(&mut gen)
    }));
    let mut draw = rng.derive(1).rng();
    let mut s = vec![0.0; f];
    Ok((0..n_samples)
        .map(|_| {
            for v in s.iter_mut() {
                *v = c * RngStream::normal(&mut draw);
            }
            let total: f64 = s.iter().map(|v| v * v).sum();
            let coords = basis.vec_matmul(&s);
            let inside: f64 = coords.iter().map(|v| v * v).sum();
            if r == 0 {
                0.0
            } else {
                (total - inside).max(0.0).sqrt()
            }
        })
        .collect())
}
