use ndarray::ArrayView1;

use super::GeneratedBatch;
use crate::dataset::NodeTable;
use crate::error::Result;
use crate::graph::Graph;
use crate::rng::SeedStream;

/// Where each generated node's edges go.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorRule {
    /// Two distinct high-quality original nodes of the generated label.
    HighQualitySameClass,
    /// The node's own mixup parents.
    Parents,
    /// Two distinct original nodes of any class.
    Uniform,
    /// The two original nodes with the most cosine-similar features.
    MostSimilar,
}

fn choose_two(pool: &[usize], rng: &mut SeedStream) -> Vec<usize> {
    match pool.len() {
        0 => Vec::new(),
        1 => vec![pool[0]],
        n => {
            let a = rng.below(n);
            let mut b = rng.below(n - 1);
            if b >= a {
                b += 1;
            }
            vec![pool[a], pool[b]]
        }
    }
}

fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(&b) / (na * nb)
}

fn most_similar(row: ArrayView1<f64>, table: &NodeTable, num_original: usize) -> Vec<usize> {
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(3);
    for i in 0..num_original {
        let s = cosine(row, table.feature_row(i));
        // strict comparison keeps the lower index on ties
        let pos = best.iter().position(|&(b, _)| s > b).unwrap_or(best.len());
        if pos < 2 {
            best.insert(pos, (s, i));
            best.truncate(2);
        }
    }
    best.into_iter().map(|(_, i)| i).collect()
}

/// Appends the batch's nodes to `graph` and connects each according to
/// `rule`, recording the chosen anchors in `batch.anchors`. Generated nodes
/// with no eligible anchor stay isolated and are listed in
/// `batch.unanchored`.
///
/// `table` describes the original nodes only. Anchors are sampled
/// independently per generated node, so one anchor may serve many.
pub fn wire_neighbors(
    batch: &mut GeneratedBatch,
    table: &NodeTable,
    graph: &Graph,
    rule: AnchorRule,
    seed: u64,
) -> Result<Graph> {
    let n = graph.num_nodes();
    let m = batch.len();
    let mut high_quality = vec![Vec::new(); table.num_classes()];
    if rule == AnchorRule::HighQualitySameClass {
        for i in 0..n {
            if table.is_high_quality(i) {
                if let Some(c) = table.label(i) {
                    high_quality[c].push(i);
                }
            }
        }
    }
    let everyone: Vec<usize> = (0..n).collect();
    let root = SeedStream::new(seed).split_named("wiring");
    batch.anchors = (0..m)
        .map(|g| {
            let mut rng = root.split(g as u64);
            match rule {
                AnchorRule::HighQualitySameClass => choose_two(&high_quality[batch.new_labels[g]], &mut rng),
                AnchorRule::Parents => {
                    let (a, b) = batch.parent_pairs[g];
                    if a == b {
                        vec![a]
                    } else {
                        vec![a, b]
                    }
                }
                AnchorRule::Uniform => choose_two(&everyone, &mut rng),
                AnchorRule::MostSimilar => most_similar(batch.new_features.row(g), table, n),
            }
        })
        .collect();
    batch.unanchored = (0..m).filter(|&g| batch.anchors[g].is_empty()).collect();
    let edges: Vec<(usize, usize)> =
        batch.anchors.iter().enumerate().flat_map(|(g, a)| a.iter().map(move |&u| (n + g, u))).collect();
    graph.with_extra_nodes(m).add_edges(&edges)
}
