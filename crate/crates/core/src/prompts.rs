//! Graph prompts: the only trainable objects.
//!
//! Parameters are exposed as one flat vector per prompt so the optimizer and
//! the finite-difference checker can treat every kind uniformly. Layouts:
//!
//! * GPF: `p` (F).
//! * GPF-Plus: token bank `P` (k × F, row-major), then coefficients `Q` (M × k).
//! * All-in-One: token features (k × F), then each graph's raw cross links
//!   (k × Nᵢ) in graph order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::GraphGradient;
use crate::graphs::Graph;
use crate::numerics::{dot, Matrix, RngStream};

const INIT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Gpf,
    GpfPlus,
    AllInOne,
}

impl PromptKind {
    pub fn name(self) -> &'static str {
        match self {
            PromptKind::Gpf => "gpf",
            PromptKind::GpfPlus => "gpf_plus",
            PromptKind::AllInOne => "all_in_one",
        }
    }
}

/// How All-in-One tokens link to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMode {
    Zero,
    /// `A_in[s, t] = sigmoid(ωₛ · ωₜ)` for `s ≠ t`.
    InnerProductSigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpfPrompt {
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpfPlusPrompt {
    /// `k × F` token bank.
    pub tokens: Matrix,
    /// `M × k`; row `i` combines the tokens for graph `i`.
    pub coefficients: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllInOnePrompt {
    /// `k × F` token features.
    pub tokens: Matrix,
    /// Per graph, `k × Nᵢ` unconstrained cross-link parameters; the link
    /// weight is `softplus(raw)`.
    pub cross_raw: Vec<Matrix>,
    pub inner_mode: InnerMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prompt {
    Gpf(GpfPrompt),
    GpfPlus(GpfPlusPrompt),
    AllInOne(AllInOnePrompt),
}

/// A prompted graph; rows `n_original..` are prompt tokens (All-in-One).
#[derive(Debug, Clone, PartialEq)]
pub struct PromptedGraph {
    pub graph: Graph,
    pub n_original: usize,
}

impl PromptedGraph {
    pub fn n_tokens(&self) -> usize {
        self.graph.n_nodes() - self.n_original
    }
}

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Small-Gaussian prompt. `node_counts` lists the node count of each of the
/// `n_graphs` graphs (only All-in-One uses it).
pub fn init_prompt(
    kind: PromptKind,
    k: usize,
    feature_dim: usize,
    n_graphs: usize,
    node_counts: &[usize],
    rng: RngStream,
) -> Result<Prompt> {
    if k == 0 || n_graphs == 0 || feature_dim == 0 {
        return Err(Error::invalid(
            "prompt needs k >= 1, at least one graph and one feature",
        ));
    }
    let mut r = rng.rng();
    let mut gauss = |rows: usize, cols: usize| {
        Matrix::from_fn(rows, cols, |_, _| INIT_SCALE * RngStream::normal(&mut r))
    };
    Ok(match kind {
        PromptKind::Gpf => {
            if k != 1 {
                return Err(Error::invalid(format!(
                    "gpf has exactly one token, got k = {k}"
                )));
            }
            Prompt::Gpf(GpfPrompt {
                p: gauss(1, feature_dim).into_vec(),
            })
        }
        PromptKind::GpfPlus => Prompt::GpfPlus(GpfPlusPrompt {
            tokens: gauss(k, feature_dim),
            coefficients: gauss(n_graphs, k),
        }),
        PromptKind::AllInOne => {
            if node_counts.len() != n_graphs {
                return Err(Error::invalid(format!(
                    "all_in_one needs {n_graphs} node counts, got {}",
                    node_counts.len()
                )));
            }
            let tokens = gauss(k, feature_dim);
            let cross_raw = node_counts.iter().map(|&n| gauss(k, n)).collect();
            Prompt::AllInOne(AllInOnePrompt {
                tokens,
                cross_raw,
                inner_mode: if k == 1 {
                    InnerMode::Zero
                } else {
                    InnerMode::InnerProductSigmoid
                },
            })
        }
    })
}

impl Prompt {
    pub fn kind(&self) -> PromptKind {
        match self {
            Prompt::Gpf(_) => PromptKind::Gpf,
            Prompt::GpfPlus(_) => PromptKind::GpfPlus,
            Prompt::AllInOne(_) => PromptKind::AllInOne,
        }
    }

    pub fn n_tokens(&self) -> usize {
        match self {
            Prompt::Gpf(_) => 1,
            Prompt::GpfPlus(p) => p.tokens.rows(),
            Prompt::AllInOne(p) => p.tokens.rows(),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            Prompt::Gpf(p) => p.p.len(),
            Prompt::GpfPlus(p) => p.tokens.as_slice().len() + p.coefficients.as_slice().len(),
            Prompt::AllInOne(p) => {
                p.tokens.as_slice().len()
                    + p.cross_raw
                        .iter()
                        .map(|c| c.as_slice().len())
                        .sum::<usize>()
            }
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Prompt::Gpf(p) => p.p.clone(),
            Prompt::GpfPlus(p) => [p.tokens.as_slice(), p.coefficients.as_slice()].concat(),
            Prompt::AllInOne(p) => {
                let mut v = p.tokens.as_slice().to_vec();
                for c in &p.cross_raw {
                    v.extend_from_slice(c.as_slice());
                }
                v
            }
        }
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "prompt has {} parameters, got {}",
                self.n_params(),
                values.len()
            )));
        }
        let mut rest = values;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        match self {
            Prompt::Gpf(p) => take(&mut p.p),
            Prompt::GpfPlus(p) => {
                take(p.tokens.as_mut_slice());
                take(p.coefficients.as_mut_slice());
            }
            Prompt::AllInOne(p) => {
                take(p.tokens.as_mut_slice());
                for c in &mut p.cross_raw {
                    take(c.as_mut_slice());
                }
            }
        }
        Ok(())
    }

    fn check_index(&self, g: &Graph, graph_index: usize) -> Result<()> {
        let (f, m) = match self {
            Prompt::Gpf(p) => (p.p.len(), usize::MAX),
            Prompt::GpfPlus(p) => (p.tokens.cols(), p.coefficients.rows()),
            Prompt::AllInOne(p) => (p.tokens.cols(), p.cross_raw.len()),
        };
        if g.feature_dim() != f {
            return Err(Error::Shape(format!(
                "graph has {} features, prompt has {f}",
                g.feature_dim()
            )));
        }
        if graph_index >= m {
            return Err(Error::invalid(format!(
                "graph index {graph_index} out of range for {m} graphs"
            )));
        }
        if let Prompt::AllInOne(p) = self {
            if p.cross_raw[graph_index].cols() != g.n_nodes() {
                return Err(Error::Shape(format!(
                    "cross links for graph {graph_index} cover {} nodes, graph has {}",
                    p.cross_raw[graph_index].cols(),
                    g.n_nodes()
                )));
            }
        }
        Ok(())
    }

    /// `P_ω(G)` for graph `graph_index` of the batch. The input is not modified.
    pub fn apply(&self, g: &Graph, graph_index: usize) -> Result<PromptedGraph> {
        self.check_index(g, graph_index)?;
        let n = g.n_nodes();
        let graph = match self {
            Prompt::Gpf(p) => shifted(g, &p.p)?,
            Prompt::GpfPlus(p) => {
                let shift = p.tokens.vec_matmul(p.coefficients.row(graph_index));
                shifted(g, &shift)?
            }
            Prompt::AllInOne(p) => {
                let k = p.tokens.rows();
                let cross = &p.cross_raw[graph_index];
                let mut a = Matrix::zeros(n + k, n + k);
                for i in 0..n {
                    a.row_mut(i)[..n].copy_from_slice(g.adjacency().row(i));
                }
                for t in 0..k {
                    for i in 0..n {
                        let w = softplus(cross[(t, i)]);
                        a[(n + t, i)] = w;
                        a[(i, n + t)] = w;
                    }
                }
                if p.inner_mode == InnerMode::InnerProductSigmoid {
                    for s in 0..k {
                        for t in (s + 1)..k {
                            let w = sigmoid(dot(p.tokens.row(s), p.tokens.row(t)));
                            a[(n + s, n + t)] = w;
                            a[(n + t, n + s)] = w;
                        }
                    }
                }
                Graph::new(a, g.features().vstack(&p.tokens))?
            }
        };
        Ok(PromptedGraph {
            graph,
            n_original: n,
        })
    }

    /// Adds `∂L/∂ω` for graph `graph_index` into `out`, given the gradient of
    /// the loss with respect to that graph's prompted inputs.
    pub fn accumulate_gradient(
        &self,
        graph_index: usize,
        prompted: &PromptedGraph,
        grad: &GraphGradient,
        out: &mut [f64],
    ) -> Result<()> {
        if out.len() != self.n_params() {
            return Err(Error::Shape("gradient buffer does not match prompt".into()));
        }
        let n = prompted.n_original;
        match self {
            Prompt::Gpf(_) => {
                for (o, s) in out.iter_mut().zip(grad.features.col_sums()) {
                    *o += s;
                }
            }
            Prompt::GpfPlus(p) => {
                let (k, f) = p.tokens.shape();
                let col = grad.features.col_sums();
                let q = p.coefficients.row(graph_index);
                // shift = q P, so dP[t] += q[t] * col and dq[t] = P[t] · col
                for t in 0..k {
                    for j in 0..f {
                        out[t * f + j] += q[t] * col[j];
                    }
                    out[k * f + graph_index * k + t] += dot(p.tokens.row(t), &col);
                }
            }
            Prompt::AllInOne(p) => {
                let (k, f) = p.tokens.shape();
                for t in 0..k {
                    for (j, v) in grad.features.row(n + t).iter().enumerate() {
                        out[t * f + j] += v;
                    }
                }
                let offset = k * f
                    + p.cross_raw[..graph_index]
                        .iter()
                        .map(|c| c.as_slice().len())
                        .sum::<usize>();
                let cross = &p.cross_raw[graph_index];
                for t in 0..k {
                    for i in 0..n {
                        let d_w = grad.adjacency[(n + t, i)] + grad.adjacency[(i, n + t)];
                        out[offset + t * n + i] += d_w * sigmoid(cross[(t, i)]);
                    }
                }
                if p.inner_mode == InnerMode::InnerProductSigmoid {
                    for s in 0..k {
                        for t in (s + 1)..k {
                            let w = sigmoid(dot(p.tokens.row(s), p.tokens.row(t)));
                            let d_w =
                                grad.adjacency[(n + s, n + t)] + grad.adjacency[(n + t, n + s)];
                            let c = d_w * w * (1.0 - w);
                            for j in 0..f {
                                out[s * f + j] += c * p.tokens[(t, j)];
                                out[t * f + j] += c * p.tokens[(s, j)];
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn shifted(g: &Graph, shift: &[f64]) -> Result<Graph> {
    let mut x = g.features().clone();
    for i in 0..x.rows() {
        for (v, s) in x.row_mut(i).iter_mut().zip(shift) {
            *v += s;
        }
    }
    g.with_features(x)
}
