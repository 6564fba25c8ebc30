use super::*;
use crate::dataset::SplitMasks;
use ndarray::{array, Array2};
use proptest::prelude::{any, prop_assert, prop_assert_eq, prop_assert_ne, proptest, ProptestConfig};

fn table_with(features: Array2<f64>, labels: Vec<Option<usize>>, classes: usize) -> NodeTable {
    NodeTable::new(features, labels, classes).unwrap()
}

fn fixed(lambda: f64, per_class: usize, strategy: Strategy) -> AugmentationConfig {
    AugmentationConfig { nodes_per_class: per_class, lambda_law: LambdaLaw::Fixed(lambda), strategy, seed: 3 }
}

fn split(train: Vec<usize>) -> SplitMasks {
    SplitMasks { train, validation: vec![], test: vec![] }
}

#[test]
fn midpoint_of_two_parents() {
    let t = table_with(array![[1.0, 0.0], [0.0, 1.0]], vec![Some(0), Some(0)], 1);
    let b = mixup_generate(&t, &fixed(0.5, 1, Strategy::Intramix)).unwrap();
    assert_eq!(b.new_features.row(0).to_vec(), vec![0.5, 0.5]);
    assert_eq!(b.new_labels, vec![0]);
}

#[test]
fn lambda_one_copies_first_parent() {
    let t = table_with(array![[0.3, -2.0], [7.0, 1.5], [4.0, 4.0]], vec![Some(0), Some(0), Some(0)], 1);
    let b = mixup_generate(&t, &fixed(1.0, 20, Strategy::Intramix)).unwrap();
    for (g, &(i, _)) in b.parent_pairs.iter().enumerate() {
        assert_eq!(b.new_features.row(g), t.feature_row(i));
    }
}

#[test]
fn beta_lambda_has_mean_one_half() {
    let t = table_with(array![[0.0], [1.0]], vec![Some(0), Some(0)], 1);
    let cfg = AugmentationConfig { nodes_per_class: 10_000, ..Default::default() };
    let b = mixup_generate(&t, &cfg).unwrap();
    let mean = b.lambdas.iter().sum::<f64>() / b.lambdas.len() as f64;
    assert!((0.49..=0.51).contains(&mean), "{mean}");
}

#[test]
fn classes_without_two_labeled_nodes_are_skipped() {
    let t = table_with(array![[0.0], [1.0], [2.0], [3.0]], vec![Some(0), Some(0), Some(1), None], 3);
    let b = mixup_generate(&t, &fixed(0.5, 4, Strategy::Intramix)).unwrap();
    assert_eq!(b.skipped_classes, vec![1, 2]);
    assert_eq!(b.new_labels, vec![0; 4]);
}

#[test]
fn no_eligible_class_is_an_error() {
    let t = table_with(array![[0.0], [1.0]], vec![Some(0), Some(1)], 2);
    assert!(matches!(mixup_generate(&t, &fixed(0.5, 1, Strategy::Intramix)), Err(Error::NoEligibleClass)));
}

#[test]
fn rejects_bad_lambda_laws() {
    let t = table_with(array![[0.0], [1.0]], vec![Some(0), Some(0)], 1);
    assert!(mixup_generate(&t, &fixed(1.5, 1, Strategy::Intramix)).is_err());
    let cfg = AugmentationConfig { lambda_law: LambdaLaw::Beta { alpha: 0.0, beta: 2.0 }, ..Default::default() };
    assert!(mixup_generate(&t, &cfg).is_err());
}

/// Nodes 0..k are high-quality class 0 (gold), the rest pseudo class 1.
fn anchor_setup(k: usize, extra: usize) -> (NodeTable, Graph) {
    let n = k + extra;
    let features = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
    let labels = (0..n).map(|i| Some(usize::from(i >= k))).collect();
    let mut t = table_with(features, labels, 2);
    for i in k..n {
        t.set_tag(i, Provenance::Pseudo);
    }
    (t, Graph::empty(n))
}

fn batch_of(class: usize, count: usize, dim: usize) -> GeneratedBatch {
    GeneratedBatch {
        new_features: Array2::zeros((count, dim)),
        new_labels: vec![class; count],
        parent_pairs: vec![(0, 0); count],
        lambdas: vec![0.5; count],
        ..Default::default()
    }
}

#[test]
fn two_anchors_are_forced() {
    let (t, g) = anchor_setup(2, 3);
    let mut b = batch_of(0, 5, 2);
    let out = wire_neighbors(&mut b, &t, &g, AnchorRule::HighQualitySameClass, 0).unwrap();
    for (k, a) in b.anchors.iter().enumerate() {
        let mut a = a.clone();
        a.sort();
        assert_eq!(a, vec![0, 1]);
        assert_eq!(out.neighbors(5 + k), &[0, 1]);
    }
    assert_eq!(out.edge_count(), 10);
}

#[test]
fn single_anchor_gives_one_edge() {
    let (t, g) = anchor_setup(1, 3);
    let mut b = batch_of(0, 4, 2);
    let out = wire_neighbors(&mut b, &t, &g, AnchorRule::HighQualitySameClass, 0).unwrap();
    assert_eq!(out.edge_count(), 4);
    assert!(b.anchors.iter().all(|a| a == &vec![0]));
}

#[test]
fn missing_anchor_is_reported_not_fatal() {
    // class 1 nodes are only pseudo, never high-quality
    let (t, g) = anchor_setup(2, 3);
    let mut b = batch_of(1, 3, 2);
    let out = wire_neighbors(&mut b, &t, &g, AnchorRule::HighQualitySameClass, 0).unwrap();
    assert_eq!(out.edge_count(), 0);
    assert_eq!(out.num_nodes(), 8);
    assert_eq!(b.unanchored, vec![0, 1, 2]);
}

#[test]
fn anchor_usage_is_uniform() {
    let (t, g) = anchor_setup(10, 0);
    let mut b = batch_of(0, 100, 2);
    wire_neighbors(&mut b, &t, &g, AnchorRule::HighQualitySameClass, 11).unwrap();
    let mut counts = [0.0f64; 10];
    for a in &b.anchors {
        assert_eq!(a.len(), 2);
        assert_ne!(a[0], a[1]);
        for &x in a {
            counts[x] += 1.0;
        }
    }
    let expected = 20.0;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    // 99th percentile of chi-square with 9 degrees of freedom
    assert!(chi2 < 21.666, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn most_similar_picks_top_two_cosine_rows() {
    let t = table_with(array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.1], [-1.0, 0.0], [2.0, 0.3]], vec![Some(0); 5], 1);
    let mut b = batch_of(0, 1, 2);
    b.new_features = array![[1.0, 0.12]];
    wire_neighbors(&mut b, &t, &Graph::empty(5), AnchorRule::MostSimilar, 0).unwrap();
    assert_eq!(b.anchors[0], vec![2, 4]);
}

fn labeled_line(n: usize, classes: usize) -> (Graph, NodeTable) {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    let features = Array2::from_shape_fn((n, 3), |(i, j)| ((i * 7 + j * 3) % 11) as f64 - 5.0);
    let labels = (0..n).map(|i| Some(i % classes)).collect();
    let mut t = table_with(features, labels, classes);
    for i in (0..n).filter(|i| i % 3 == 0) {
        t.set_tag(i, Provenance::HighQuality);
    }
    for i in (0..n).filter(|i| i % 3 == 1) {
        t.set_tag(i, Provenance::Pseudo);
    }
    (Graph::build(n, &edges).unwrap(), t)
}

#[test]
fn pl_only_leaves_graph_and_grows_mask() {
    let (g, t) = labeled_line(30, 3);
    let s = split(vec![2, 5]);
    let out = apply_strategy(&g, &t, &s, &fixed(0.5, 4, Strategy::PlOnly)).unwrap();
    assert_eq!(out.graph, g);
    let pseudo = t.count(Provenance::Pseudo) + t.count(Provenance::HighQuality);
    assert_eq!(out.train_mask.len(), s.train.len() + pseudo);
}

#[test]
fn without_con_adds_nodes_but_no_edges() {
    let (g, t) = labeled_line(30, 3);
    let s = split(vec![2, 5]);
    let out = apply_strategy(&g, &t, &s, &fixed(0.5, 4, Strategy::WithoutCon)).unwrap();
    assert_eq!(out.graph.edge_count(), g.edge_count());
    assert_eq!(out.graph.num_nodes(), 30 + 12);
    assert_eq!(out.train_mask.len(), 2 + 12);
}

#[test]
fn mask_without_generation_is_train_split() {
    let (_, t) = labeled_line(9, 3);
    assert_eq!(augmented_train_mask(&t, &split(vec![4, 1]), false), vec![1, 4]);
}

#[test]
fn zeros_and_ones_replace_features_but_keep_wiring() {
    let (g, t) = labeled_line(30, 3);
    let s = split(vec![0]);
    let reference = apply_strategy(&g, &t, &s, &fixed(0.5, 4, Strategy::Intramix)).unwrap();
    for (strategy, v) in [(Strategy::Zeros, 0.0), (Strategy::Ones, 1.0)] {
        let out = apply_strategy(&g, &t, &s, &fixed(0.5, 4, strategy)).unwrap();
        assert!(out.batch.new_features.iter().all(|&x| x == v));
        assert_eq!(out.graph, reference.graph);
    }
}

#[test]
fn vanilla_mixup_soft_labels() {
    let (g, t) = labeled_line(30, 3);
    let out = apply_strategy(&g, &t, &split(vec![0]), &fixed(0.7, 5, Strategy::MixupWCon)).unwrap();
    let soft = out.batch.soft_labels.as_ref().unwrap();
    assert_eq!(soft.len(), 15);
    for (g_idx, dist) in soft.iter().enumerate() {
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (i, j) = out.batch.parent_pairs[g_idx];
        // λ = 0.7 puts the larger weight on the first parent
        assert_eq!(out.batch.new_labels[g_idx], t.label(i).unwrap());
        let mut a = out.batch.anchors[g_idx].clone();
        a.sort();
        let mut p = vec![i, j];
        p.sort();
        assert_eq!(a, p);
    }
    assert_eq!(out.soft_targets().len(), 15);
    assert_eq!(out.soft_targets()[0].0, 30);
}

#[test]
fn strategy_names_round_trip() {
    for s in Strategy::ALL {
        assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
    }
    assert!("mixup".parse::<Strategy>().is_err());
}

#[test]
fn deterministic_given_seed() {
    let (g, t) = labeled_line(40, 4);
    let cfg = AugmentationConfig { nodes_per_class: 6, ..Default::default() };
    let a = apply_strategy(&g, &t, &split(vec![0]), &cfg).unwrap();
    let b = apply_strategy(&g, &t, &split(vec![0]), &cfg).unwrap();
    assert_eq!(a.batch, b.batch);
    assert_eq!(a.graph, b.graph);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn intramix_invariants(n in 12usize..60, classes in 2usize..5, per_class in 1usize..8, seed in any::<u64>()) {
        let (g, t) = labeled_line(n, classes);
        let cfg = AugmentationConfig { nodes_per_class: per_class, seed, ..Default::default() };
        let out = apply_strategy(&g, &t, &split(vec![0]), &cfg).unwrap();
        let b = &out.batch;
        for k in 0..b.len() {
            let (i, j) = b.parent_pairs[k];
            // label purity
            prop_assert_ne!(i, j);
            prop_assert_eq!(t.label(i), Some(b.new_labels[k]));
            prop_assert_eq!(t.label(j), Some(b.new_labels[k]));
            // convexity
            for d in 0..t.feature_dim() {
                let (a, c) = (t.feature_row(i)[d], t.feature_row(j)[d]);
                let x = b.new_features[[k, d]];
                prop_assert!(a.min(c) - 1e-12 <= x && x <= a.max(c) + 1e-12);
            }
            // anchors: high quality, same class, distinct
            for &a in &b.anchors[k] {
                prop_assert!(t.is_high_quality(a));
                prop_assert_eq!(t.label(a), Some(b.new_labels[k]));
            }
            if b.anchors[k].len() == 2 {
                prop_assert_ne!(b.anchors[k][0], b.anchors[k][1]);
            }
        }
        // edge accounting
        let expected = 2 * b.len() - out.report.single_anchor_nodes - 2 * out.report.unanchored_nodes;
        prop_assert_eq!(out.report.new_edges, expected);
        prop_assert_eq!(out.graph.num_nodes(), n + b.len());
        prop_assert_eq!(out.train_mask.len(), 1 + b.len());
    }
}
