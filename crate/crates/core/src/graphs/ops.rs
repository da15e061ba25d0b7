use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataOp {
    DeleteNode,
    AddNode,
    DeleteEdge,
    AddEdge,
    MaskFeature,
}

/// A randomized graph transformation `t(·)` of intensity `β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataOperationSpec {
    pub intensity: f64,
    pub enabled_ops: Vec<DataOp>,
    /// Edge probability used when wiring inserted nodes and inserted edges.
    #[serde(default = "default_add_density")]
    pub add_density: f64,
    pub rng: RngStream,
}

fn default_add_density() -> f64 {
    0.15
}

impl DataOperationSpec {
    pub fn new(intensity: f64, enabled_ops: Vec<DataOp>, rng: RngStream) -> Self {
        DataOperationSpec {
            intensity,
            enabled_ops,
            add_density: default_add_density(),
            rng,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.intensity) {
            return Err(Error::invalid(format!(
                "intensity {} outside [0, 1]",
                self.intensity
            )));
        }
        if self.enabled_ops.is_empty() {
            return Err(Error::invalid("no data operation enabled"));
        }
        if !(0.0..=1.0).contains(&self.add_density) {
            return Err(Error::invalid("add_density outside [0, 1]"));
        }
        Ok(())
    }

    fn enabled(&self, op: DataOp) -> bool {
        self.enabled_ops.contains(&op)
    }
}

/// Applies the enabled operations in the fixed order delete-node, add-node,
/// delete-edge, add-edge, mask-feature. Every candidate element fires
/// independently with probability `β`:
///
/// * delete_node: each node is removed; if every node would go, the first
///   one survives.
/// * add_node: each current node spawns a new node with standard-normal
///   features, linked to each existing node with probability `add_density`.
/// * delete_edge: each edge is removed.
/// * add_edge: each non-adjacent pair is resampled as an edge with
///   probability `add_density`.
/// * mask_feature: each feature entry is set to zero.
pub fn apply_data_operation(g: &Graph, spec: &DataOperationSpec) -> Result<Graph> {
    spec.validate()?;
    let beta = spec.intensity;
    let mut r = spec.rng.rng();
    let mut adjacency = g.adjacency().clone();
    let mut features = g.features().clone();
    let f = g.feature_dim();

    if spec.enabled(DataOp::DeleteNode) {
        let n = adjacency.rows();
        let mut keep: Vec<usize> = (0..n).filter(|_| r.random::<f64>() >= beta).collect();
        if keep.is_empty() {
            keep.push(0);
        }
        let all: Vec<usize> = (0..f).collect();
        adjacency = adjacency.select(&keep, &keep);
        features = features.select(&keep, &all);
    }

    if spec.enabled(DataOp::AddNode) {
        let n = adjacency.rows();
        let spawned = (0..n).filter(|_| r.random::<f64>() < beta).count();
        for _ in 0..spawned {
            let cur = adjacency.rows();
            let mut grown = Matrix::zeros(cur + 1, cur + 1);
            for i in 0..cur {
                grown.row_mut(i)[..cur].copy_from_slice(adjacency.row(i));
            }
            for i in 0..cur {
                if r.random::<f64>() < spec.add_density {
                    grown[(i, cur)] = 1.0;
                    grown[(cur, i)] = 1.0;
                }
            }
            let row: Vec<f64> = (0..f).map(|_| RngStream::normal(&mut r)).collect();
            features = features.vstack(&Matrix::row_vector(&row));
            adjacency = grown;
        }
    }

    let n = adjacency.rows();
    if spec.enabled(DataOp::DeleteEdge) {
        for i in 0..n {
            for j in (i + 1)..n {
                if adjacency[(i, j)] != 0.0 && r.random::<f64>() < beta {
                    adjacency[(i, j)] = 0.0;
                    adjacency[(j, i)] = 0.0;
                }
            }
        }
    }

    if spec.enabled(DataOp::AddEdge) {
        for i in 0..n {
            for j in (i + 1)..n {
                if adjacency[(i, j)] == 0.0
                    && r.random::<f64>() < beta
                    && r.random::<f64>() < spec.add_density
                {
                    adjacency[(i, j)] = 1.0;
                    adjacency[(j, i)] = 1.0;
                }
            }
        }
    }

    if spec.enabled(DataOp::MaskFeature) {
        for v in features.as_mut_slice() {
            if r.random::<f64>() < beta {
                *v = 0.0;
            }
        }
    }

    Graph::new(adjacency, features)
}
