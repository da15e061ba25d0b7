use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream};

/// Erdős–Rényi graph with standard-normal node features.
pub fn generate_graph(
    n_nodes: usize,
    feature_dim: usize,
    density: f64,
    rng: RngStream,
) -> Result<Graph> {
    if n_nodes == 0 || feature_dim == 0 {
        return Err(Error::invalid(
            "graph needs at least one node and one feature",
        ));
    }
    if !(density > 0.0 && density < 1.0) {
        return Err(Error::invalid(format!(
            "edge density {density} outside (0, 1)"
        )));
    }
    let mut r = rng.rng();
    let mut a = Matrix::zeros(n_nodes, n_nodes);
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            if r.random::<f64>() < density {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    let x = Matrix::from_fn(n_nodes, feature_dim, |_, _| RngStream::normal(&mut r));
    Graph::new(a, x)
}

/// Shape of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_graphs: usize,
    pub feature_dim: usize,
    pub n_avg: usize,
    #[serde(default = "default_density")]
    pub density: f64,
}

fn default_density() -> f64 {
    0.15
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_graphs == 0 || self.feature_dim == 0 || self.n_avg == 0 {
            return Err(Error::invalid("dataset counts must be at least 1"));
        }
        if !(self.density > 0.0 && self.density < 1.0) {
            return Err(Error::invalid(format!(
                "edge density {} outside (0, 1)",
                self.density
            )));
        }
        Ok(())
    }

    /// Inclusive node-count range `[ceil(0.5 N), floor(1.5 N)]`.
    pub fn node_range(&self) -> (usize, usize) {
        let lo = self.n_avg.div_ceil(2).max(1);
        let hi = (3 * self.n_avg / 2).max(lo);
        (lo, hi)
    }
}

/// `n_graphs` graphs with node counts uniform over [`DatasetSpec::node_range`].
/// Graph `i` draws from stream `rng.derive(i)`.
pub fn generate_dataset(spec: &DatasetSpec, rng: RngStream) -> Result<Vec<Graph>> {
    spec.validate()?;
    let (lo, hi) = spec.node_range();
    (0..spec.n_graphs as u64)
        .map(|i| {
            let stream = rng.derive(i);
            let n = stream.derive(u64::MAX).rng().random_range(lo..=hi);
            generate_graph(n, spec.feature_dim, spec.density, stream)
        })
        .collect()
}
