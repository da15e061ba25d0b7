use super::{Arch, FrozenModel, Tape};
use crate::error::{Error, Result};
use crate::graphs::{DiffusionScheme, Graph};
use crate::numerics::Matrix;

/// Derivative of a scalar loss with respect to a graph's inputs.
///
/// `adjacency[(i, j)]` treats each ordered entry as an independent variable;
/// callers that tie `A_ij = A_ji` must add both entries.
#[derive(Debug, Clone)]
pub struct GraphGradient {
    pub features: Matrix,
    pub adjacency: Matrix,
}

impl FrozenModel {
    /// Reverse pass from `∂L/∂output` back to the node features and the
    /// adjacency of `g`. `tape` must come from `forward_tape(g)`.
    pub fn backward(&self, tape: &Tape, g: &Graph, d_output: &[f64]) -> Result<GraphGradient> {
        let n = g.n_nodes();
        let f = self.feature_dim();
        if d_output.len() != f {
            return Err(Error::Shape(format!(
                "output gradient has length {}, expected {f}",
                d_output.len()
            )));
        }
        let agg = &tape.aggregation;
        let mut d_h = Matrix::from_fn(n, f, |i, j| tape.readout_weights[i] * d_output[j]);
        let mut d_agg = Matrix::zeros(n, n);

        for l in (0..self.layers().len()).rev() {
            let z = &tape.pre_activations[l];
            let d_z = d_h.zip_map(z, |d, z| d * self.activate_deriv(z));
            // Z = Agg · (H W)
            d_agg.add_assign(&d_z.matmul_t(&tape.transformed[l]));
            let d_hw = agg.t_matmul(&d_z);
            d_h = d_hw.matmul_t(&self.layers()[l]);
            if !d_h.all_finite() {
                return Err(Error::NonFinite(format!("backward pass, layer {l}")));
            }
        }

        let mut d_x = d_h;
        let d_a = match self.arch() {
            Arch::Gcn | Arch::GcnLinear => {
                diffusion_backward(g.adjacency(), agg, &d_agg, self.diffusion_scheme())
            }
            Arch::Gat => {
                let (d_logit_x, d_a) = attention_backward(g, agg, &d_agg);
                d_x.add_assign(&d_logit_x);
                d_a
            }
        };
        if !d_a.all_finite() || !d_x.all_finite() {
            return Err(Error::NonFinite("backward pass, aggregation".into()));
        }
        Ok(GraphGradient {
            features: d_x,
            adjacency: d_a,
        })
    }
}

/// Chain rule through `S(A)` for both diffusion schemes.
fn diffusion_backward(a: &Matrix, s: &Matrix, d_s: &Matrix, scheme: DiffusionScheme) -> Matrix {
    let n = a.rows();
    match scheme {
        DiffusionScheme::RawSelfLoop => {
            let mut d = d_s.clone();
            for i in 0..n {
                d[(i, i)] = 0.0;
            }
            d
        }
        DiffusionScheme::SymNormalized => {
            // S_ij = Â_ij u_i u_j with u = d^{-1/2}, d_i = Σ_j Â_ij
            let degree: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum::<f64>() + 1.0).collect();
            let mut d_degree = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    let gs = d_s[(i, j)] * s[(i, j)];
                    d_degree[i] += gs;
                    d_degree[j] += gs;
                }
            }
            for (dd, deg) in d_degree.iter_mut().zip(&degree) {
                *dd *= -0.5 / deg;
            }
            Matrix::from_fn(n, n, |i, j| {
                if i == j {
                    0.0
                } else {
                    d_s[(i, j)] / (degree[i] * degree[j]).sqrt() + d_degree[i]
                }
            })
        }
    }
}

/// Softmax backward for `α = softmax_row(x xᵀ + ln a)`. Returns the feature
/// contribution through the logits and the adjacency gradient.
fn attention_backward(g: &Graph, att: &Matrix, d_att: &Matrix) -> (Matrix, Matrix) {
    let n = g.n_nodes();
    let a = g.adjacency();
    let mut d_logit = Matrix::zeros(n, n);
    for i in 0..n {
        let inner: f64 = (0..n).map(|k| att[(i, k)] * d_att[(i, k)]).sum();
        for j in 0..n {
            d_logit[(i, j)] = att[(i, j)] * (d_att[(i, j)] - inner);
        }
    }
    let d_a = Matrix::from_fn(n, n, |i, j| {
        if i != j && a[(i, j)] > 0.0 {
            d_logit[(i, j)] / a[(i, j)]
        } else {
            0.0
        }
    });
    // e = X Xᵀ restricted to the support of a + I
    let sym = d_logit.add(&d_logit.transpose());
    (sym.matmul(g.features()), d_a)
}
