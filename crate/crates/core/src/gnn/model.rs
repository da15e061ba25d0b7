use serde::{Deserialize, Serialize};

use super::Tape;
use crate::error::{Error, Result};
use crate::graphs::{diffusion_from_adjacency, DiffusionScheme, Graph};
use crate::numerics::{numerical_rank, rank_project, Matrix, RngStream};
use crate::prompts::Prompt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Gcn,
    Gat,
    /// GCN with identity activation.
    GcnLinear,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::Gcn => "gcn",
            Arch::Gat => "gat",
            Arch::GcnLinear => "gcn_linear",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Readout {
    #[default]
    Mean,
    Sum,
    /// `wᵀH` with strictly positive per-node weights.
    Weighted {
        weights: Vec<f64>,
    },
}

impl Readout {
    pub fn weights(&self, n_nodes: usize) -> Result<Vec<f64>> {
        match self {
            Readout::Mean => Ok(vec![1.0 / n_nodes as f64; n_nodes]),
            Readout::Sum => Ok(vec![1.0; n_nodes]),
            Readout::Weighted { weights } => {
                if weights.len() != n_nodes {
                    return Err(Error::Shape(format!(
                        "weighted readout has {} weights for {n_nodes} nodes",
                        weights.len()
                    )));
                }
                Ok(weights.clone())
            }
        }
    }
}

/// Which layers carry the rank deficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankTarget {
    #[default]
    Last,
    All,
}

/// Construction parameters for [`init_frozen_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub n_layers: usize,
    pub feature_dim: usize,
    pub arch: Arch,
    pub rank_loss: usize,
    pub rank_target: RankTarget,
    pub leaky_slope: f64,
    pub readout: Readout,
    pub diffusion_scheme: DiffusionScheme,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            n_layers: 3,
            feature_dim: 25,
            arch: Arch::Gcn,
            rank_loss: 0,
            rank_target: RankTarget::Last,
            leaky_slope: 0.2,
            readout: Readout::Mean,
            diffusion_scheme: DiffusionScheme::SymNormalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct FrozenModel {
    arch: Arch,
    leaky_slope: f64,
    readout: Readout,
    diffusion_scheme: DiffusionScheme,
    rank_loss: usize,
    rank_target: RankTarget,
    layers: Vec<Matrix>,
}

#[derive(Deserialize)]
struct RawModel {
    arch: Arch,
    leaky_slope: f64,
    readout: Readout,
    diffusion_scheme: DiffusionScheme,
    #[serde(default)]
    rank_loss: usize,
    #[serde(default)]
    rank_target: RankTarget,
    layers: Vec<Matrix>,
}

impl TryFrom<RawModel> for FrozenModel {
    type Error = Error;

    fn try_from(r: RawModel) -> Result<Self> {
        let mut m = FrozenModel::from_layers(
            r.arch,
            r.layers,
            r.leaky_slope,
            r.readout,
            r.diffusion_scheme,
        )?;
        m.rank_loss = r.rank_loss;
        m.rank_target = r.rank_target;
        Ok(m)
    }
}

/// Model plus an optional trained prompt, the on-disk JSON container.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub model: FrozenModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<Prompt>,
}

/// Seeded stand-in for a pre-trained model: i.i.d. `N(0, 1/F)` weights,
/// then the designated layers are truncated to rank `F - rank_loss`.
pub fn init_frozen_model(settings: &ModelSettings, rng: RngStream) -> Result<FrozenModel> {
    let f = settings.feature_dim;
    if settings.n_layers == 0 || f == 0 {
        return Err(Error::invalid(
            "model needs at least one layer and one feature",
        ));
    }
    if settings.rank_loss >= f {
        return Err(Error::invalid(format!(
            "rank loss {} must be below feature dim {f}",
            settings.rank_loss
        )));
    }
    let scale = 1.0 / (f as f64).sqrt();
    let mut layers = Vec::with_capacity(settings.n_layers);
    for l in 0..settings.n_layers {
        let mut r = rng.derive(l as u64).rng();
        let mut w = Matrix::from_fn(f, f, |_, _| scale * RngStream::normal(&mut r));
        let deficient = match settings.rank_target {
            RankTarget::Last => l + 1 == settings.n_layers,
            RankTarget::All => true,
        };
        if deficient && settings.rank_loss > 0 {
            w = rank_project(&w, f - settings.rank_loss)?;
        }
        layers.push(w);
    }
    let mut model = FrozenModel::from_layers(
        settings.arch,
        layers,
        settings.leaky_slope,
        settings.readout.clone(),
        settings.diffusion_scheme,
    )?;
    model.rank_loss = settings.rank_loss;
    model.rank_target = settings.rank_target;
    Ok(model)
}

impl FrozenModel {
    /// Model from explicit square layer matrices. Rank metadata is left at
    /// zero; use [`FrozenModel::layer_ranks`] for the true ranks.
    pub fn from_layers(
        arch: Arch,
        layers: Vec<Matrix>,
        leaky_slope: f64,
        readout: Readout,
        diffusion_scheme: DiffusionScheme,
    ) -> Result<Self> {
        let f = layers
            .first()
            .map(Matrix::cols)
            .ok_or_else(|| Error::invalid("model needs at least one layer"))?;
        if layers.iter().any(|w| w.shape() != (f, f)) {
            return Err(Error::Shape("every layer must be F x F".into()));
        }
        if !(leaky_slope > 0.0) || !leaky_slope.is_finite() {
            return Err(Error::invalid(format!(
                "leaky slope {leaky_slope} must be positive"
            )));
        }
        if let Readout::Weighted { weights } = &readout {
            if weights.iter().any(|w| !(*w > 0.0)) {
                return Err(Error::invalid(
                    "weighted readout needs strictly positive weights",
                ));
            }
        }
        Ok(FrozenModel {
            arch,
            leaky_slope,
            readout,
            diffusion_scheme,
            rank_loss: 0,
            rank_target: RankTarget::Last,
            layers,
        })
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn feature_dim(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn leaky_slope(&self) -> f64 {
        self.leaky_slope
    }

    pub fn readout(&self) -> &Readout {
        &self.readout
    }

    pub fn diffusion_scheme(&self) -> DiffusionScheme {
        self.diffusion_scheme
    }

    pub fn rank_loss(&self) -> usize {
        self.rank_loss
    }

    pub fn rank_target(&self) -> RankTarget {
        self.rank_target
    }

    /// Rank each layer is declared to have.
    pub fn reported_ranks(&self) -> Vec<usize> {
        let f = self.feature_dim();
        let n = self.layers.len();
        (0..n)
            .map(|l| {
                let deficient = match self.rank_target {
                    RankTarget::Last => l + 1 == n,
                    RankTarget::All => true,
                };
                if deficient {
                    f - self.rank_loss
                } else {
                    f
                }
            })
            .collect()
    }

    /// Numerical rank of each layer (singular values above 1e-8).
    pub fn layer_ranks(&self) -> Result<Vec<usize>> {
        self.layers.iter().map(numerical_rank).collect()
    }

    /// `W₁ · W₂ ⋯ Wₙ`.
    pub fn weight_product(&self) -> Matrix {
        let mut p = self.layers[0].clone();
        for w in &self.layers[1..] {
            p = p.matmul(w);
        }
        p
    }

    #[inline]
    pub(crate) fn activate(&self, z: f64) -> f64 {
        match self.arch {
            Arch::GcnLinear => z,
            _ if z > 0.0 => z,
            _ => self.leaky_slope * z,
        }
    }

    /// Activation derivative; slope `α` at exactly zero.
    #[inline]
    pub(crate) fn activate_deriv(&self, z: f64) -> f64 {
        match self.arch {
            Arch::GcnLinear => 1.0,
            _ if z > 0.0 => 1.0,
            _ => self.leaky_slope,
        }
    }

    /// Aggregation operator for a graph.
    pub fn aggregation(&self, g: &Graph) -> Matrix {
        match self.arch {
            Arch::Gcn | Arch::GcnLinear => {
                diffusion_from_adjacency(g.adjacency(), self.diffusion_scheme)
            }
            Arch::Gat => attention(g),
        }
    }

    pub fn forward_tape(&self, g: &Graph) -> Result<Tape> {
        if g.feature_dim() != self.feature_dim() {
            return Err(Error::Shape(format!(
                "graph has {} features, model expects {}",
                g.feature_dim(),
                self.feature_dim()
            )));
        }
        let readout_weights = self.readout.weights(g.n_nodes())?;
        let aggregation = self.aggregation(g);
        let mut h = g.features().clone();
        let mut transformed = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for (l, w) in self.layers.iter().enumerate() {
            let hw = h.matmul(w);
            let z = aggregation.matmul(&hw);
            h = z.map(|v| self.activate(v));
            if !h.all_finite() {
                return Err(Error::NonFinite(format!("forward pass, layer {l}")));
            }
            transformed.push(hw);
            pre_activations.push(z);
        }
        let output = h.vec_matmul(&readout_weights);
        Ok(Tape {
            aggregation,
            transformed,
            pre_activations,
            embedding: h,
            readout_weights,
            output,
        })
    }

    /// Node embedding matrix `H⁽ⁿ⁾`.
    pub fn forward_embedding(&self, g: &Graph) -> Result<Matrix> {
        Ok(self.forward_tape(g)?.embedding)
    }

    /// Graph-level embedding after readout.
    pub fn model_output(&self, g: &Graph) -> Result<Vec<f64>> {
        Ok(self.forward_tape(g)?.output)
    }
}

/// Row-softmax attention with logits `xᵢ·xⱼ + ln aᵢⱼ` over `a = A + I`.
/// For binary adjacency this is plain softmax over `N(i) ∪ {i}`; weighted
/// edges scale their neighbour's share.
pub(crate) fn attention(g: &Graph) -> Matrix {
    let x = g.features();
    let a = g.adjacency();
    let n = g.n_nodes();
    let mut att = Matrix::zeros(n, n);
    let mut logits = vec![0.0; n];
    for i in 0..n {
        let mut max = f64::NEG_INFINITY;
        for j in 0..n {
            let w = if i == j { 1.0 } else { a[(i, j)] };
            logits[j] = if w > 0.0 {
                crate::numerics::dot(x.row(i), x.row(j)) + w.ln()
            } else {
                f64::NEG_INFINITY
            };
            max = max.max(logits[j]);
        }
        let mut total = 0.0;
        for j in 0..n {
            let e = if logits[j].is_finite() {
                (logits[j] - max).exp()
            } else {
                0.0
            };
            att[(i, j)] = e;
            total += e;
        }
        for j in 0..n {
            att[(i, j)] /= total;
        }
    }
    att
}
