//! Undirected sparse graphs in compressed-row form.
//!
//! A [`Graph`] is immutable: augmentation builds a new graph rather than
//! editing one in place. Self-loops are dropped on ingestion; the single
//! self-loop the GCN propagation operator needs is added only inside
//! [`Graph::normalized_adjacency`].

use std::collections::VecDeque;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    edge_count: usize,
}

impl Graph {
    /// Builds a symmetric, deduplicated, self-loop-free graph. Edge order and
    /// orientation in `edges` do not affect the result.
    pub fn build(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            check_edge(u, v, num_nodes)?;
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        Ok(Self::from_rows(adj))
    }

    pub fn empty(num_nodes: usize) -> Self {
        Self { num_nodes, row_offsets: vec![0; num_nodes + 1], col_indices: Vec::new(), edge_count: 0 }
    }

    fn from_rows(mut adj: Vec<Vec<usize>>) -> Self {
        let num_nodes = adj.len();
        let mut row_offsets = Vec::with_capacity(num_nodes + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        for row in adj.iter_mut() {
            row.sort_unstable();
            row.dedup();
            col_indices.extend_from_slice(row);
            row_offsets.push(col_indices.len());
        }
        let edge_count = col_indices.len() / 2;
        Self { num_nodes, row_offsets, col_indices, edge_count }
    }

    /// Returns a copy of this graph with the union of its edges and
    /// `new_edges`. The receiver is left untouched.
    pub fn add_edges(&self, new_edges: &[(usize, usize)]) -> Result<Self> {
        if new_edges.is_empty() {
            return Ok(self.clone());
        }
        let mut adj: Vec<Vec<usize>> = (0..self.num_nodes).map(|i| self.neighbors(i).to_vec()).collect();
        for &(u, v) in new_edges {
            check_edge(u, v, self.num_nodes)?;
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        Ok(Self::from_rows(adj))
    }

    /// Appends `additional` isolated nodes after the existing indices.
    pub fn with_extra_nodes(&self, additional: usize) -> Self {
        let mut row_offsets = self.row_offsets.clone();
        let end = *row_offsets.last().unwrap_or(&0);
        row_offsets.extend(std::iter::repeat_n(end, additional));
        Self {
            num_nodes: self.num_nodes + additional,
            row_offsets,
            col_indices: self.col_indices.clone(),
            edge_count: self.edge_count,
        }
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.num_nodes {
            return Err(Error::DimensionMismatch {
                context: "graph permutation",
                expected: self.num_nodes,
                found: perm.len(),
            });
        }
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Self::build(self.num_nodes, &edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[node]..self.row_offsets[node + 1]]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.row_offsets[node + 1] - self.row_offsets[node]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// GCN renormalized propagation operator `D̃^{-1/2}(A+I)D̃^{-1/2}`.
    pub fn normalized_adjacency(&self) -> NormalizedAdjacency {
        let deg: Vec<f64> = (0..self.num_nodes).map(|i| (self.degree(i) + 1) as f64).collect();
        let weight = |i: usize, j: usize| 1.0 / (deg[i] * deg[j]).sqrt();
        let mut row_offsets = Vec::with_capacity(self.num_nodes + 1);
        row_offsets.push(0);
        let nnz = self.col_indices.len() + self.num_nodes;
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for i in 0..self.num_nodes {
            let mut self_done = false;
            for &j in self.neighbors(i) {
                if !self_done && j > i {
                    col_indices.push(i);
                    values.push(weight(i, i));
                    self_done = true;
                }
                col_indices.push(j);
                values.push(weight(i, j));
            }
            if !self_done {
                col_indices.push(i);
                values.push(weight(i, i));
            }
            row_offsets.push(col_indices.len());
        }
        NormalizedAdjacency { num_nodes: self.num_nodes, row_offsets, col_indices, values }
    }

    /// Unweighted shortest-path hop counts from `source`; `None` when
    /// unreachable.
    pub fn hop_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_nodes];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Buckets every unordered node pair by hop distance. Disconnected
    /// pairs count as far.
    pub fn hop_distance_classes(&self, near_max: usize, far_min: usize) -> Result<HopClasses> {
        if near_max >= far_min {
            return Err(Error::InvalidConfig(format!("near_max ({near_max}) must be below far_min ({far_min})")));
        }
        let mut near = Vec::new();
        let mut far = Vec::new();
        for i in 0..self.num_nodes {
            let dist = self.hop_distances(i);
            for (j, d) in dist.iter().enumerate().skip(i + 1) {
                match classify_hops(*d, near_max, far_min) {
                    PairClass::Near => near.push((i, j)),
                    PairClass::Far => far.push((i, j)),
                    PairClass::Neither => {}
                }
            }
        }
        Ok(HopClasses { near_max, far_min, near, far })
    }

    pub fn is_connected(&self) -> bool {
        self.num_nodes == 0 || self.hop_distances(0).iter().all(Option::is_some)
    }
}

fn check_edge(u: usize, v: usize, num_nodes: usize) -> Result<()> {
    if u >= num_nodes || v >= num_nodes {
        return Err(Error::EdgeOutOfRange { src: u, dst: v, num_nodes });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    Near,
    Far,
    Neither,
}

pub fn classify_hops(hops: Option<usize>, near_max: usize, far_min: usize) -> PairClass {
    match hops {
        None => PairClass::Far,
        Some(h) if h <= near_max => PairClass::Near,
        Some(h) if h >= far_min => PairClass::Far,
        Some(_) => PairClass::Neither,
    }
}

/// Near/far node-pair lists (`i < j`) derived from hop distances.
#[derive(Debug, Clone)]
pub struct HopClasses {
    pub near_max: usize,
    pub far_min: usize,
    pub near: Vec<(usize, usize)>,
    pub far: Vec<(usize, usize)>,
}

/// Sparse symmetric propagation operator sharing the [`Graph`] layout, with
/// the diagonal stored explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v).sum()
    }

    /// Sparse-dense product `Â · M`. `Â` is symmetric, so this also serves
    /// as `Âᵀ · M` during backpropagation.
    pub fn matmul(&self, dense: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(dense.nrows(), self.num_nodes, "row count must match node count");
        let cols = dense.ncols();
        let mut out = Array2::<f64>::zeros((self.num_nodes, cols));
        for (i, mut out_row) in out.outer_iter_mut().enumerate() {
            for (j, w) in self.row(i) {
                out_row.scaled_add(w, &dense.row(j));
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.num_nodes, self.num_nodes));
        for i in 0..self.num_nodes {
            for (j, v) in self.row(i) {
                m[[i, j]] = v;
            }
        }
        m
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn edge_set(g: &Graph) -> BTreeSet<(usize, usize)> {
        g.edges().collect()
    }

    #[test]
    fn mirrored_edge_is_deduplicated() {
        let g = Graph::build(3, &[(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn empty_graph_has_empty_rows() {
        let g = Graph::build(2, &[]).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.row_offsets(), &[0, 0, 0]);
    }

    #[test]
    fn self_loops_are_dropped() {
        let g = Graph::build(4, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(!g.has_edge(0, 0));
    }

    #[test]
    fn out_of_range_edge_is_reported() {
        let err = Graph::build(3, &[(0, 1), (2, 3)]).unwrap_err();
        match err {
            Error::EdgeOutOfRange { src, dst, .. } => assert_eq!((src, dst), (2, 3)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn add_edges_returns_new_graph() {
        let g = Graph::build(3, &[(0, 1)]).unwrap();
        let h = g.add_edges(&[(1, 2)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(edge_set(&h), BTreeSet::from([(0, 1), (1, 2)]));
        let same = h.add_edges(&[(2, 1)]).unwrap();
        assert_eq!(same.edge_count(), 2);
    }

    #[test]
    fn extra_nodes_are_isolated() {
        let g = Graph::build(2, &[(0, 1)]).unwrap().with_extra_nodes(3);
        assert_eq!(g.num_nodes(), 5);
        assert_eq!(g.degree(4), 0);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn isolated_nodes_normalize_to_one() {
        let a = Graph::build(2, &[]).unwrap().normalized_adjacency();
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(1, 1), 1.0);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn single_edge_normalizes_to_half() {
        let a = Graph::build(2, &[(0, 1)]).unwrap().normalized_adjacency();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(a.get(i, j), 0.5);
            }
        }
    }

    fn dense_reference(g: &Graph) -> Array2<f64> {
        let n = g.num_nodes();
        let mut a = Array2::<f64>::eye(n);
        for (u, v) in g.edges() {
            a[[u, v]] = 1.0;
            a[[v, u]] = 1.0;
        }
        let deg: Vec<f64> = a.rows().into_iter().map(|r| r.sum()).collect();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] = a[[i, j]] / (deg[i] * deg[j]).sqrt();
            }
        }
        out
    }

    #[test]
    fn path_graph_matches_dense_oracle() {
        let g = Graph::build(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let sparse = g.normalized_adjacency().to_dense();
        let dense = dense_reference(&g);
        for (s, d) in sparse.iter().zip(dense.iter()) {
            assert!((s - d).abs() < 1e-15);
        }
    }

    #[test]
    fn cycle_rows_sum_to_one() {
        for n in 3..12 {
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            let a = Graph::build(n, &edges).unwrap().normalized_adjacency();
            for i in 0..n {
                assert!((a.row_sum(i) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_matches_dense_product() {
        let g = Graph::build(4, &[(0, 1), (1, 2), (1, 3)]).unwrap();
        let a = g.normalized_adjacency();
        let x = Array2::from_shape_fn((4, 3), |(i, j)| (i * 3 + j) as f64 - 4.0);
        let sparse = a.matmul(x.view());
        let dense = a.to_dense().dot(&x);
        for (s, d) in sparse.iter().zip(dense.iter()) {
            assert!((s - d).abs() < 1e-12);
        }
    }

    #[test]
    fn path_hop_buckets() {
        let g = Graph::build(3, &[(0, 1), (1, 2)]).unwrap();
        let c = g.hop_distance_classes(1, 2).unwrap();
        assert!(c.near.contains(&(0, 1)));
        assert!(c.far.contains(&(0, 2)));
    }

    #[test]
    fn disconnected_pairs_are_far() {
        let g = Graph::build(4, &[(0, 1)]).unwrap();
        let c = g.hop_distance_classes(1, 5).unwrap();
        assert_eq!(c.near, vec![(0, 1)]);
        assert_eq!(c.far.len(), 5);
    }

    #[test]
    fn hop_thresholds_must_be_ordered() {
        let g = Graph::build(3, &[]).unwrap();
        assert!(g.hop_distance_classes(2, 2).is_err());
    }

    fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<usize>>> {
        let n = g.num_nodes();
        let mut d = vec![vec![None; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = Some(0);
        }
        for (u, v) in g.edges() {
            d[u][v] = Some(1);
            d[v][u] = Some(1);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                        if d[i][j].is_none_or(|c| a + b < c) {
                            d[i][j] = Some(a + b);
                        }
                    }
                }
            }
        }
        d
    }

    #[test]
    fn hop_buckets_match_floyd_warshall() {
        let mut rng = crate::rng::SeedStream::new(11);
        let n = 30;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.uniform() < 0.08 {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::build(n, &edges).unwrap();
        let classes = g.hop_distance_classes(2, 4).unwrap();
        let d = floyd_warshall(&g);
        let mut near = Vec::new();
        let mut far = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                match d[i][j] {
                    Some(h) if h <= 2 => near.push((i, j)),
                    Some(h) if h < 4 => {}
                    _ => far.push((i, j)),
                }
            }
        }
        assert_eq!(classes.near, near);
        assert_eq!(classes.far, far);
    }

    fn arb_edges() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..25).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..60)))
    }

    proptest! {
        #[test]
        fn build_is_symmetric_sorted_and_loop_free((n, edges) in arb_edges()) {
            let g = Graph::build(n, &edges).unwrap();
            prop_assert_eq!(g.row_offsets()[n], 2 * g.edge_count());
            for i in 0..n {
                let row = g.neighbors(i);
                prop_assert!(row.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(!row.contains(&i));
                for &j in row {
                    prop_assert!(g.has_edge(j, i));
                }
            }
        }

        #[test]
        fn add_nothing_is_identity((n, edges) in arb_edges()) {
            let g = Graph::build(n, &edges).unwrap();
            let h = g.add_edges(&[]).unwrap();
            prop_assert_eq!(g.row_offsets(), h.row_offsets());
            prop_assert_eq!(g.col_indices(), h.col_indices());
        }

        #[test]
        fn add_edges_commutes_and_matches_set_reference(
            (n, base) in arb_edges(),
            extra1 in prop::collection::vec((0usize..1000, 0usize..1000), 0..20),
            extra2 in prop::collection::vec((0usize..1000, 0usize..1000), 0..20),
        ) {
            let e1: Vec<_> = extra1.iter().map(|&(a, b)| (a % n, b % n)).collect();
            let e2: Vec<_> = extra2.iter().map(|&(a, b)| (a % n, b % n)).collect();
            let g = Graph::build(n, &base).unwrap();
            let ab = g.add_edges(&e1).unwrap().add_edges(&e2).unwrap();
            let ba = g.add_edges(&e2).unwrap().add_edges(&e1).unwrap();
            prop_assert_eq!(&ab, &ba);

            let mut reference: BTreeSet<(usize, usize)> = BTreeSet::new();
            for &(a, b) in base.iter().chain(&e1).chain(&e2) {
                if a != b {
                    reference.insert((a.min(b), a.max(b)));
                }
            }
            prop_assert_eq!(edge_set(&ab), reference.clone());
            prop_assert_eq!(ab.edge_count(), reference.len());
        }

        #[test]
        fn normalized_adjacency_is_symmetric_with_positive_rows((n, edges) in arb_edges()) {
            let a = Graph::build(n, &edges).unwrap().normalized_adjacency();
            let dense = a.to_dense();
            for i in 0..n {
                prop_assert!(a.row_sum(i) > 0.0);
                for j in 0..n {
                    prop_assert_eq!(dense[[i, j]], dense[[j, i]]);
                }
            }
        }
    }

    #[test]
    fn fresh_edges_increase_count_exactly() {
        let g = Graph::build(10, &[(0, 1), (2, 3)]).unwrap();
        let fresh = [(4, 5), (6, 7), (8, 9), (0, 9)];
        let h = g.add_edges(&fresh).unwrap();
        assert_eq!(h.edge_count(), g.edge_count() + fresh.len());
    }
}
