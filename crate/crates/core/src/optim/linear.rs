use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{Arch, FrozenModel};
use crate::graphs::Graph;
use crate::numerics::{dot, norm, sub_vec, svd_decompose};
use crate::prompts::{GpfPrompt, Prompt};

/// Closed-form feature shift for a linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSolution {
    pub p: Vec<f64>,
    /// `ε` at `p`, evaluated by a forward pass.
    pub residual: f64,
    /// `wᵀSⁿ1`.
    pub gain: f64,
}

/// `λ = wᵀ Sⁿ 1`: how much a shared shift of every node's features moves the
/// readout of a linear stack, before the weight product.
pub fn propagation_gain(model: &FrozenModel, g: &Graph) -> Result<f64> {
    let s = model.aggregation(g);
    let mut v = vec![1.0; g.n_nodes()];
    for _ in 0..model.layers().len() {
        v = s.matvec(&v);
    }
    Ok(dot(&model.readout().weights(g.n_nodes())?, &v))
}

/// Solves `F(G) + λ pᵀ W₁⋯Wₙ = target` for `p`, in the least-squares sense
/// when the product is singular.
pub fn linear_gpf_solve(model: &FrozenModel, g: &Graph, target: &[f64]) -> Result<LinearSolution> {
    if model.arch() != Arch::GcnLinear {
        return Err(Error::invalid(format!(
            "closed-form solve needs a linear model, got {}",
            model.arch().name()
        )));
    }
    let f = model.feature_dim();
    if target.len() != f {
        return Err(Error::Shape(format!(
            "target has length {}, model outputs {f}",
            target.len()
        )));
    }
    let gain = propagation_gain(model, g)?;
    if !(gain > 0.0) {
        return Err(Error::NonFinite(format!(
            "propagation gain {gain} is not positive"
        )));
    }
    let base = model.model_output(g)?;
    let b: Vec<f64> = sub_vec(target, &base).iter().map(|v| v / gain).collect();

    // pᵀ W = bᵀ  ⇔  p = U Σ⁺ Vᵀ b  for W = U Σ Vᵀ
    let svd = svd_decompose(&model.weight_product())?;
    let cutoff = 1e-10 * svd.singular_values.first().copied().unwrap_or(0.0);
    let vt_b = svd.vt.matvec(&b);
    let mut p = vec![0.0; f];
    for (k, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > cutoff {
            let c = vt_b[k] / sigma;
            for (i, pi) in p.iter_mut().enumerate() {
                *pi += svd.u[(i, k)] * c;
            }
        }
    }
    let prompt = Prompt::Gpf(GpfPrompt { p });
    let out = model.model_output(&prompt.apply(g, 0)?.graph)?;
    let residual = norm(&sub_vec(&out, target));
    let Prompt::Gpf(GpfPrompt { p }) = prompt else {
        unreachable!()
    };
    Ok(LinearSolution { p, residual, gain })
}
