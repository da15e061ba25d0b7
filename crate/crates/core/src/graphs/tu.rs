//! TU benchmark plain-text format.
//!
//! A dataset `NAME` is a directory holding
//! * `NAME_A.txt`: one `i, j` edge per line, 1-indexed global node ids;
//! * `NAME_graph_indicator.txt`: line `k` is the 1-indexed graph id of node `k`;
//! * `NAME_node_labels.txt` (integer per node, one-hot encoded) and/or
//!   `NAME_node_attributes.txt` (comma-separated reals per node).
//!
//! When both node files exist the features are `[one-hot labels | attributes]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::Graph;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn file(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

pub fn read_tu_dataset(dir: impl AsRef<Path>, name: &str) -> Result<Vec<Graph>> {
    let dir = dir.as_ref();

    let indicator_path = file(dir, name, "graph_indicator");
    let mut membership = Vec::new();
    for (line, text) in read_lines(&indicator_path)? {
        let id: usize = text.parse().map_err(|_| {
            parse_err(
                &indicator_path,
                line,
                format!("graph id {text:?} is not an integer"),
            )
        })?;
        if id == 0 {
            return Err(parse_err(&indicator_path, line, "graph ids are 1-indexed"));
        }
        membership.push(id);
    }
    let n_total = membership.len();
    if n_total == 0 {
        return Err(parse_err(&indicator_path, 1, "no nodes"));
    }

    // graph id -> (dense graph index, global node ids in order)
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (node, &gid) in membership.iter().enumerate() {
        groups.entry(gid).or_default().push(node);
    }
    let graph_index: BTreeMap<usize, usize> =
        groups.keys().enumerate().map(|(i, &g)| (g, i)).collect();
    let mut local = vec![0usize; n_total];
    for nodes in groups.values() {
        for (k, &node) in nodes.iter().enumerate() {
            local[node] = k;
        }
    }

    let labels_path = file(dir, name, "node_labels");
    let attrs_path = file(dir, name, "node_attributes");
    let mut blocks: Vec<Vec<Vec<f64>>> = Vec::new();
    if labels_path.exists() {
        let mut labels = Vec::with_capacity(n_total);
        for (line, text) in read_lines(&labels_path)? {
            let first = text.split(',').next().unwrap_or("").trim();
            let v: i64 = first.parse().map_err(|_| {
                parse_err(
                    &labels_path,
                    line,
                    format!("label {first:?} is not an integer"),
                )
            })?;
            labels.push(v);
        }
        if labels.len() != n_total {
            return Err(parse_err(
                &labels_path,
                labels.len(),
                format!("{} labels for {n_total} nodes", labels.len()),
            ));
        }
        let mut distinct: Vec<i64> = labels.clone();
        distinct.sort_unstable();
        distinct.dedup();
        blocks.push(
            labels
                .iter()
                .map(|l| {
                    let k = distinct.binary_search(l).expect("label present");
                    let mut row = vec![0.0; distinct.len()];
                    row[k] = 1.0;
                    row
                })
                .collect(),
        );
    }
    if attrs_path.exists() {
        let mut rows = Vec::with_capacity(n_total);
        for (line, text) in read_lines(&attrs_path)? {
            let row: Result<Vec<f64>> = text
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| {
                            parse_err(
                                &attrs_path,
                                line,
                                format!("attribute {s:?} is not a finite real"),
                            )
                        })
                })
                .collect();
            rows.push(row?);
        }
        if rows.len() != n_total {
            return Err(parse_err(
                &attrs_path,
                rows.len(),
                format!("{} rows for {n_total} nodes", rows.len()),
            ));
        }
        let width = rows[0].len();
        if let Some(bad) = rows.iter().position(|r| r.len() != width) {
            return Err(parse_err(&attrs_path, bad + 1, "ragged attribute rows"));
        }
        blocks.push(rows);
    }
    if blocks.is_empty() {
        return Err(Error::io(
            labels_path,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "neither node_labels nor node_attributes present",
            ),
        ));
    }
    let feature_dim: usize = blocks.iter().map(|b| b[0].len()).sum();

    let mut adjacency: Vec<Matrix> = groups
        .values()
        .map(|nodes| Matrix::zeros(nodes.len(), nodes.len()))
        .collect();
    let a_path = file(dir, name, "A");
    for (line, text) in read_lines(&a_path)? {
        let mut parts = text.split(',').map(str::trim);
        let mut next = || -> Result<usize> {
            let s = parts
                .next()
                .ok_or_else(|| parse_err(&a_path, line, "expected `i, j`"))?;
            let v: usize = s.parse().map_err(|_| {
                parse_err(&a_path, line, format!("node id {s:?} is not an integer"))
            })?;
            if v == 0 || v > n_total {
                return Err(parse_err(
                    &a_path,
                    line,
                    format!("node id {v} out of range 1..={n_total}"),
                ));
            }
            Ok(v - 1)
        };
        let (i, j) = (next()?, next()?);
        if membership[i] != membership[j] {
            return Err(parse_err(
                &a_path,
                line,
                format!("edge ({}, {}) crosses graphs", i + 1, j + 1),
            ));
        }
        if i == j {
            continue;
        }
        let a = &mut adjacency[graph_index[&membership[i]]];
        a[(local[i], local[j])] = 1.0;
        a[(local[j], local[i])] = 1.0;
    }

    groups
        .values()
        .zip(adjacency)
        .map(|(nodes, a)| {
            let x = Matrix::from_fn(nodes.len(), feature_dim, |k, c| {
                let node = nodes[k];
                let mut c = c;
                for block in &blocks {
                    let w = block[node].len();
                    if c < w {
                        return block[node][c];
                    }
                    c -= w;
                }
                unreachable!()
            });
            Graph::new(a, x)
        })
        .collect()
}

/// Sizes of a TU dataset, read without materializing any graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TuSummary {
    pub n_graphs: usize,
    pub n_nodes: usize,
    /// Distinct undirected non-loop edges.
    pub n_edges: usize,
    /// Distinct node labels, when a label file exists.
    pub n_node_labels: Option<usize>,
}

pub fn scan_tu_dataset(dir: impl AsRef<Path>, name: &str) -> Result<TuSummary> {
    let dir = dir.as_ref();
    let indicator = read_lines(&file(dir, name, "graph_indicator"))?;
    let graphs: BTreeSet<&str> = indicator.iter().map(|(_, t)| t.as_str()).collect();
    let a_path = file(dir, name, "A");
    let mut edges = BTreeSet::new();
    for (line, text) in read_lines(&a_path)? {
        let ids: Vec<usize> = text
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(&a_path, line, format!("bad edge line {text:?}")))?;
        if let [i, j] = ids[..] {
            if i != j {
                edges.insert((i.min(j), i.max(j)));
            }
        } else {
            return Err(parse_err(&a_path, line, "expected `i, j`"));
        }
    }
    let labels_path = file(dir, name, "node_labels");
    let n_node_labels = if labels_path.exists() {
        let lines = read_lines(&labels_path)?;
        Some(
            lines
                .iter()
                .map(|(_, t)| t.split(',').next().unwrap_or("").trim().to_string())
                .collect::<BTreeSet<_>>()
                .len(),
        )
    } else {
        None
    };
    Ok(TuSummary {
        n_graphs: graphs.len(),
        n_nodes: indicator.len(),
        n_edges: edges.len(),
        n_node_labels,
    })
}

/// Writes graphs as `A`, `graph_indicator` and `node_attributes` files.
/// Reals are printed in shortest round-trip form, so reading back is exact.
pub fn write_tu_dataset(dir: impl AsRef<Path>, name: &str, graphs: &[Graph]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (mut a, mut ind, mut attr) = (String::new(), String::new(), String::new());
    let mut offset = 0;
    for (gi, g) in graphs.iter().enumerate() {
        for i in 0..g.n_nodes() {
            for j in 0..g.n_nodes() {
                if i != j && g.adjacency()[(i, j)] != 0.0 {
                    let _ = writeln!(a, "{}, {}", offset + i + 1, offset + j + 1);
                }
            }
            let _ = writeln!(ind, "{}", gi + 1);
            let row: Vec<String> = g
                .features()
                .row(i)
                .iter()
                .map(|v| format!("{v:?}"))
                .collect();
            let _ = writeln!(attr, "{}", row.join(", "));
        }
        offset += g.n_nodes();
    }
    for (suffix, body) in [
        ("A", a),
        ("graph_indicator", ind),
        ("node_attributes", attr),
    ] {
        let path = file(dir, name, suffix);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
