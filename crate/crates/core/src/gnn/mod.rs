//! Frozen message-passing models.
//!
//! A [`FrozenModel`] is a bias-free stack of `F × F` layers,
//! `H⁽ˡ⁾ = σ(Agg · H⁽ˡ⁻¹⁾ · Wₗ)`, followed by a readout. `Agg` is the GCN
//! diffusion matrix or, for GAT, a row-softmax attention over
//! `eᵢⱼ = xᵢ · xⱼ` computed from the input features.

mod backward;
mod model;

pub use backward::GraphGradient;
pub use model::{
    init_frozen_model, Arch, FrozenModel, ModelFile, ModelSettings, RankTarget, Readout,
};

use crate::error::Result;
use crate::graphs::{apply_data_operation, DataOperationSpec, Graph};
use crate::numerics::Matrix;

/// Cached forward pass used by the backward pass and by gradient checks.
#[derive(Debug, Clone)]
pub struct Tape {
    /// `N × N` aggregation operator shared by every layer.
    pub aggregation: Matrix,
    /// `H⁽ˡ⁻¹⁾ Wₗ` per layer.
    pub(crate) transformed: Vec<Matrix>,
    /// Pre-activation `Agg · H⁽ˡ⁻¹⁾ Wₗ` per layer.
    pub pre_activations: Vec<Matrix>,
    pub embedding: Matrix,
    pub readout_weights: Vec<f64>,
    pub output: Vec<f64>,
}

impl Tape {
    /// Smallest |pre-activation|: distance to the nearest Leaky-ReLU kink.
    pub fn kink_margin(&self) -> f64 {
        self.pre_activations
            .iter()
            .flat_map(|z| z.as_slice().iter())
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

/// `C(G) = F(t(G))`: the frozen model's output on the transformed graph.
pub fn target_embedding(
    model: &FrozenModel,
    g: &Graph,
    spec: &DataOperationSpec,
) -> Result<Vec<f64>> {
    model.model_output(&apply_data_operation(g, spec)?)
}
