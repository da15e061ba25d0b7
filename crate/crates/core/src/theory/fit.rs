use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use super::chi::chi_mean;
use crate::error::{Error, Result};

pub const MIN_FIT_SAMPLES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Chi,
    Gamma,
    ChiSquared,
    Exponential,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Chi,
        Family::Gamma,
        Family::ChiSquared,
        Family::Exponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Chi => "chi",
            Family::Gamma => "gamma",
            Family::ChiSquared => "chi_squared",
            Family::Exponential => "exponential",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub family: Family,
    pub params: BTreeMap<String, f64>,
    /// True when the chi degrees of freedom were fixed rather than fitted.
    #[serde(default)]
    pub fixed_dof: bool,
    pub n_samples: usize,
    pub ks_statistic: f64,
    pub p_value: f64,
}

/// A fitted continuous distribution on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Fitted {
    Chi { dof: f64, scale: f64 },
    Gamma { shape: f64, scale: f64 },
    ChiSquared { dof: f64 },
    Exponential { rate: f64 },
}

impl Fitted {
    fn cdf(self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Fitted::Chi { dof, scale } => gamma_lr(dof / 2.0, (x / scale).powi(2) / 2.0),
            Fitted::Gamma { shape, scale } => gamma_lr(shape, x / scale),
            Fitted::ChiSquared { dof } => gamma_lr(dof / 2.0, x / 2.0),
            Fitted::Exponential { rate } => -(-rate * x).exp_m1(),
        }
    }

    fn params(self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match self {
            Fitted::Chi { dof, scale } => vec![("dof", dof), ("scale", scale)],
            Fitted::Gamma { shape, scale } => vec![("shape", shape), ("scale", scale)],
            Fitted::ChiSquared { dof } => vec![("dof", dof)],
            Fitted::Exponential { rate } => vec![("rate", rate)],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::invalid("samples must be positive and finite"));
    }
    Ok(())
}

fn mean_var(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Degrees of freedom `k` with `E[χ_k]² / E[χ_k²] = ratio`, by bisection in
/// `ln k` (the left side increases from 0 to 1).
fn chi_dof_from_ratio(ratio: f64) -> f64 {
    let g = |k: f64| chi_mean(k, 1.0).powi(2) / k;
    let (mut lo, mut hi) = (1e-3f64.ln(), 1e5f64.ln());
    if ratio <= g(lo.exp()) {
        return lo.exp();
    }
    if ratio >= g(hi.exp()) {
        return hi.exp();
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid.exp()) < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

fn estimate(samples: &[f64], family: Family) -> Fitted {
    let (mean, var) = mean_var(samples);
    match family {
        Family::Exponential => Fitted::Exponential { rate: 1.0 / mean },
        Family::Gamma => Fitted::Gamma {
            shape: mean * mean / var,
            scale: var / mean,
        },
        // standard (unscaled) chi-squared: its mean is its dof
        Family::ChiSquared => Fitted::ChiSquared { dof: mean },
        Family::Chi => {
            let second = var + mean * mean;
            let dof = chi_dof_from_ratio(mean * mean / second);
            Fitted::Chi {
                dof,
                scale: (second / dof).sqrt(),
            }
        }
    }
}

fn report(samples: &[f64], family: Family, fitted: Fitted, fixed_dof: bool) -> FitReport {
    let d = ks_statistic(samples, |x| fitted.cdf(x));
    FitReport {
        family,
        params: fitted.params(),
        fixed_dof,
        n_samples: samples.len(),
        ks_statistic: d,
        p_value: ks_p_value(d, samples.len()),
    }
}

/// Moment-matched (maximum likelihood for the exponential) fit followed by a
/// one-sample Kolmogorov–Smirnov test against the fitted law.
pub fn fit_error_distribution(samples: &[f64], family: Family) -> Result<FitReport> {
    check_samples(samples)?;
    let (_, var) = mean_var(samples);
    if !(var > 0.0) && matches!(family, Family::Gamma | Family::Chi) {
        return Err(Error::invalid("samples have zero variance"));
    }
    Ok(report(samples, family, estimate(samples, family), false))
}

/// Chi fit with the degrees of freedom held at `dof`; the scale is its
/// maximum-likelihood value `sqrt(mean(x²) / dof)`.
pub fn fit_chi_fixed_dof(samples: &[f64], dof: usize) -> Result<FitReport> {
    check_samples(samples)?;
    if dof == 0 {
        return Err(Error::invalid("chi needs at least one degree of freedom"));
    }
    let second = samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
    let dof = dof as f64;
    let fitted = Fitted::Chi {
        dof,
        scale: (second / dof).sqrt(),
    };
    Ok(report(samples, Family::Chi, fitted, true))
}

/// `sup |F_n − F|` over the sample.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS p-value `Q(√n D)`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    kolmogorov_q((n as f64).sqrt() * d)
}

/// Kolmogorov survival function `Q(t) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2 j² t²}`.
/// For small `t` the equivalent theta-function form converges faster.
pub fn kolmogorov_q(t: f64) -> f64 {
    if !(t > 0.0) {
        return 1.0;
    }
    let q = if t < 1.0 {
        let s: f64 = (1..=20)
            .map(|j| {
                let odd = (2 * j - 1) as f64;
                (-(odd * odd) * std::f64::consts::PI.powi(2) / (8.0 * t * t)).exp()
            })
            .sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s
    } else {
        2.0 * (1..=100)
            .map(|j| {
                let j = j as f64;
                let sign = if j as u64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * j * j * t * t).exp()
            })
            .sum::<f64>()
    };
    q.clamp(0.0, 1.0)
}
