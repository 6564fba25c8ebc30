//! Directory container:
//!
//! ```text
//! meta.json     {"num_nodes", "feature_dim", "num_classes"}
//! features.csv  one comma-separated row of decimal floats per node
//! edges.tsv     "src<TAB>dst" per undirected edge, src < dst
//! labels.csv    "node_id,label" or "node_id," when unlabeled
//! splits.json   {"train": [...], "validation": [...], "test": [...]}
//! ```
//!
//! No file carries a header. Floats are written in Rust's shortest
//! round-trip decimal form, so loading reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{NodeTable, SplitMasks};
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainerMeta {
    pub num_nodes: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub graph: Graph,
    pub table: NodeTable,
    pub split: SplitMasks,
}

pub fn save_container(dir: &Path, graph: &Graph, table: &NodeTable, split: &SplitMasks) -> Result<()> {
    if graph.num_nodes() != table.num_nodes() {
        return Err(Error::DimensionMismatch {
            context: "graph vs node table",
            expected: graph.num_nodes(),
            found: table.num_nodes(),
        });
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = ContainerMeta {
        num_nodes: table.num_nodes(),
        feature_dim: table.feature_dim(),
        num_classes: table.num_classes(),
    };
    write_json(&dir.join("meta.json"), &meta)?;

    let mut features = String::new();
    for row in table.features().rows() {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                features.push(',');
            }
            write!(features, "{v}").expect("string write");
        }
        features.push('\n');
    }
    write_text(&dir.join("features.csv"), &features)?;

    let mut edges = String::new();
    for (u, v) in graph.edges() {
        writeln!(edges, "{u}\t{v}").expect("string write");
    }
    write_text(&dir.join("edges.tsv"), &edges)?;

    let mut labels = String::new();
    for (i, label) in table.labels().iter().enumerate() {
        match label {
            Some(c) => writeln!(labels, "{i},{c}"),
            None => writeln!(labels, "{i},"),
        }
        .expect("string write");
    }
    write_text(&dir.join("labels.csv"), &labels)?;

    write_json(&dir.join("splits.json"), split)
}

pub fn load_container(dir: &Path) -> Result<Container> {
    let meta_path = dir.join("meta.json");
    let meta: ContainerMeta = read_json(&meta_path)?;

    let features = parse_features(&dir.join("features.csv"), &meta)?;
    let graph = parse_edges(&dir.join("edges.tsv"), meta.num_nodes)?;
    let labels = parse_labels(&dir.join("labels.csv"), &meta)?;
    let table = NodeTable::new(features, labels, meta.num_classes)?;

    let split_path = dir.join("splits.json");
    let split: SplitMasks = read_json(&split_path)?;
    split.validate(meta.num_nodes).map_err(|e| Error::parse(&split_path, 0, e.to_string()))?;
    Ok(Container { graph, table, split })
}

fn parse_features(path: &Path, meta: &ContainerMeta) -> Result<Array2<f64>> {
    let text = read_text(path)?;
    let mut data = Vec::with_capacity(meta.num_nodes * meta.feature_dim);
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != meta.feature_dim {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {} fields, found {}", meta.feature_dim, fields.len()),
            ));
        }
        for (k, f) in fields.iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("field {}: `{f}` is not a number", k + 1)))?;
            data.push(v);
        }
        rows += 1;
    }
    if rows != meta.num_nodes {
        return Err(Error::parse(path, rows, format!("expected {} rows, found {rows}", meta.num_nodes)));
    }
    Ok(Array2::from_shape_vec((rows, meta.feature_dim), data).expect("shape checked"))
}

fn parse_edges(path: &Path, num_nodes: usize) -> Result<Graph> {
    let text = read_text(path)?;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let mut parts = line.split('\t');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(path, line_no, "expected `src<TAB>dst`"));
        };
        let parse = |s: &str, field: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::parse(path, line_no, format!("{field}: `{s}` is not a node index")))
        };
        let (u, v) = (parse(a, "src")?, parse(b, "dst")?);
        if u >= v {
            return Err(Error::parse(path, line_no, format!("edge {u}-{v} must satisfy src < dst")));
        }
        if v >= num_nodes {
            return Err(Error::parse(path, line_no, format!("node {v} out of range ({num_nodes} nodes)")));
        }
        edges.push((u, v));
    }
    Graph::build(num_nodes, &edges)
}

fn parse_labels(path: &Path, meta: &ContainerMeta) -> Result<Vec<Option<usize>>> {
    let text = read_text(path)?;
    let mut labels = Vec::with_capacity(meta.num_nodes);
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let Some((id, label)) = line.split_once(',') else {
            return Err(Error::parse(path, line_no, "expected `node_id,label`"));
        };
        if id.parse::<usize>().ok() != Some(labels.len()) {
            return Err(Error::parse(
                path,
                line_no,
                format!("node_id `{id}` out of sequence, expected {}", labels.len()),
            ));
        }
        if label.is_empty() {
            labels.push(None);
        } else {
            let c: usize = label
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("label `{label}` is not a class index")))?;
            if c >= meta.num_classes {
                return Err(Error::parse(path, line_no, format!("label {c} >= num_classes {}", meta.num_classes)));
            }
            labels.push(Some(c));
        }
    }
    if labels.len() != meta.num_nodes {
        return Err(Error::parse(
            path,
            labels.len(),
            format!("expected {} rows, found {}", meta.num_nodes, labels.len()),
        ));
    }
    Ok(labels)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: PathBuf::from(path), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: PathBuf::from(path), source })?;
    text.push('\n');
    write_text(path, &text)
}
