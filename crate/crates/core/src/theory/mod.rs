//! Closed-form error bounds, Monte Carlo oracles and distribution fits.

mod bounds;
mod chi;
mod fit;

use serde::{Deserialize, Serialize};

pub use bounds::{
    modulus_estimate, multi_prompt_upper_bound, single_prompt_lower_bound, single_prompt_objective,
    subspace_residual_oracle, MultiPromptBound, SinglePromptBound,
};
pub use chi::{chi_mean, chi_moments, gaussian_projection_samples, ResidualModel};
pub use fit::{
    fit_chi_fixed_dof, fit_error_distribution, kolmogorov_q, ks_p_value, ks_statistic, Family,
    FitReport, MIN_FIT_SAMPLES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Best achievable RMSE of one shared prompt over a batch.
    SinglePromptLower,
    /// RMSE guaranteed reachable with `k` tokens.
    MultiPromptUpper,
    /// `max ε / ‖C(G)‖` across runs.
    Modulus,
}

/// A theoretical value next to the empirical one it constrains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_kind: BoundKind,
    #[serde(deserialize_with = "crate::numerics::nonfinite::nan_if_null")]
    pub theoretical_value: f64,
    #[serde(deserialize_with = "crate::numerics::nonfinite::nan_if_null")]
    pub empirical_value: f64,
    /// `empirical / theoretical`; infinite when the bound is 0 and the error is not.
    #[serde(deserialize_with = "crate::numerics::nonfinite::inf_if_null")]
    pub ratio: f64,
    /// Whether the empirical value sits on the allowed side of the bound,
    /// up to `slack`.
    pub holds: bool,
    pub slack: f64,
    pub config: serde_json::Value,
}

impl BoundReport {
    pub fn new(
        kind: BoundKind,
        theoretical: f64,
        empirical: f64,
        slack: f64,
        config: serde_json::Value,
    ) -> Self {
        let ratio = if theoretical > 0.0 {
            empirical / theoretical
        } else if empirical == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
        let holds = match kind {
            BoundKind::SinglePromptLower => empirical >= theoretical - slack,
            BoundKind::MultiPromptUpper => empirical <= theoretical + slack,
            BoundKind::Modulus => empirical.is_finite() && empirical >= 0.0,
        };
        BoundReport {
            bound_kind: kind,
            theoretical_value: theoretical,
            empirical_value: empirical,
            ratio,
            holds,
            slack,
            config,
        }
    }
}
