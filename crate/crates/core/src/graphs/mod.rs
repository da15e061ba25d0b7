//! Graphs, synthetic datasets, the data-operation family that defines
//! downstream targets, diffusion matrices and TU-format files.

mod generate;
mod ops;
mod tu;

pub use generate::{generate_dataset, generate_graph, DatasetSpec};
pub use ops::{apply_data_operation, DataOp, DataOperationSpec};
pub use tu::{read_tu_dataset, scan_tu_dataset, write_tu_dataset, TuSummary};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Undirected weighted graph with node features.
///
/// The adjacency is exactly symmetric, nonnegative and has a zero diagonal.
/// Generated graphs are binary; prompted graphs may carry real weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    adjacency: Matrix,
    features: Matrix,
}

impl Graph {
    pub fn new(adjacency: Matrix, features: Matrix) -> Result<Self> {
        let n = adjacency.rows();
        if n == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        if !adjacency.is_square() || features.rows() != n {
            return Err(Error::Shape(format!(
                "adjacency {:?} and features {:?} disagree on node count",
                adjacency.shape(),
                features.shape()
            )));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("self-loop weight at node {i}")));
            }
            for j in 0..i {
                let a = adjacency[(i, j)];
                if a != adjacency[(j, i)] {
                    return Err(Error::Symmetry(format!(
                        "adjacency ({i}, {j}) vs ({j}, {i})"
                    )));
                }
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(Error::invalid(format!("adjacency ({i}, {j}) = {a}")));
                }
            }
        }
        if !features.all_finite() {
            return Err(Error::NonFinite("node features".into()));
        }
        Ok(Graph {
            adjacency,
            features,
        })
    }

    /// Graph with no edges.
    pub fn edgeless(features: Matrix) -> Result<Self> {
        let n = features.rows();
        Graph::new(Matrix::zeros(n, n), features)
    }

    /// Binary graph from an undirected edge list (0-indexed).
    pub fn from_edges(features: Matrix, edges: &[(usize, usize)]) -> Result<Self> {
        let n = features.rows();
        let mut a = Matrix::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i != j {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
        Graph::new(a, features)
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn with_features(&self, features: Matrix) -> Result<Graph> {
        Graph::new(self.adjacency.clone(), features)
    }

    /// Undirected edges `(i, j)` with `i < j` and nonzero weight.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n_nodes();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[(i, j)] != 0.0)
            .collect()
    }

    pub fn n_edges(&self) -> usize {
        self.edges().len()
    }

    /// Relabels nodes so that new node `k` is old node `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::invalid("not a permutation of the node set"));
        }
        let all: Vec<usize> = (0..self.feature_dim()).collect();
        Graph::new(
            self.adjacency.select(perm, perm),
            self.features.select(perm, &all),
        )
    }

    /// Block-diagonal union of two graphs.
    pub fn disjoint_union(&self, other: &Graph) -> Result<Graph> {
        let (n, m) = (self.n_nodes(), other.n_nodes());
        let a = Matrix::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
            (true, true) => self.adjacency[(i, j)],
            (false, false) => other.adjacency[(i - n, j - n)],
            _ => 0.0,
        });
        Graph::new(a, self.features.vstack(&other.features))
    }
}

/// How a GCN layer aggregates neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionScheme {
    /// `S = A + I`.
    RawSelfLoop,
    /// `S = D^{-1/2} (A + I) D^{-1/2}` with `D` the degree of `A + I`.
    #[default]
    SymNormalized,
}

pub fn diffusion_matrix(g: &Graph, scheme: DiffusionScheme) -> Matrix {
    diffusion_from_adjacency(g.adjacency(), scheme)
}

pub(crate) fn diffusion_from_adjacency(adjacency: &Matrix, scheme: DiffusionScheme) -> Matrix {
    let n = adjacency.rows();
    let mut s = adjacency.add(&Matrix::identity(n));
    if scheme == DiffusionScheme::SymNormalized {
        let inv_sqrt: Vec<f64> = s.row_sums().iter().map(|d| 1.0 / d.sqrt()).collect();
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
    }
    s
}
