use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;

use super::*;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

fn rows(columns: &[&[f64]]) -> Vec<Vec<f64>> {
    let n = columns[0].len();
    (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect()
}

#[test]
fn gini_impurity_hand_values() {
    assert_eq!(gini_impurity(&[4, 0]), 0.0);
    assert_eq!(gini_impurity(&[2, 2]), 0.5);
    // Four equally likely classes: 1 − 4·(1/4)² = 0.75.
    assert!((gini_impurity(&[1, 1, 1, 1]) - 0.75).abs() < 1e-15);
    assert_eq!(gini_impurity(&[]), 0.0);
    assert_eq!(gini_impurity(&[0, 0]), 0.0);
}

#[test]
fn best_split_separates_two_blocks_at_the_midpoint() {
    let data = rows(&[&[1.0, 2.0, 3.0, 4.0]]);
    let labels = [0, 0, 1, 1];
    let s = best_split::<f64>(&data, &labels, &[0, 1, 2, 3], &[0], 2).unwrap();
    assert_eq!(s.feature, 0);
    assert_eq!(s.threshold, 2.5);
    // Parent impurity 0.5, both children pure.
    assert!((s.gain - 0.5).abs() < 1e-15);
}

#[test]
fn best_split_works_in_f32_too() {
    let data: Vec<Vec<f32>> = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
    let labels = [0, 0, 1, 1];
    let s = best_split::<f32>(&data, &labels, &[0, 1, 2, 3], &[0], 2).unwrap();
    assert_eq!(s.threshold, 2.5f32);
    assert!((s.gain - 0.5).abs() < 1e-12);
}

#[test]
fn pure_node_yields_no_split() {
    let data = rows(&[&[1.0, 2.0, 3.0]]);
    let labels = [1, 1, 1];
    assert!(best_split::<f64>(&data, &labels, &[0, 1, 2], &[0], 2).is_none());
}

#[test]
fn constant_feature_yields_no_split() {
    let data = rows(&[&[7.0, 7.0, 7.0, 7.0], &[1.0, 2.0, 3.0, 4.0]]);
    let labels = [0, 0, 1, 1];
    // Only the constant column is offered: no candidate thresholds at all.
    assert!(best_split::<f64>(&data, &labels, &[0, 1, 2, 3], &[0], 2).is_none());
    // The informative column alone still splits.
    let s = best_split::<f64>(&data, &labels, &[0, 1, 2, 3], &[1], 2).unwrap();
    assert_eq!(s.feature, 1);
    assert_eq!(s.threshold, 2.5);
}

#[test]
fn gain_ties_break_to_the_lowest_feature_index() {
    // Both columns separate the two samples with identical gain 0.5.
    let data = rows(&[&[1.0, 2.0], &[5.0, 6.0]]);
    let labels = [0, 1];
    let s = best_split::<f64>(&data, &labels, &[0, 1], &[0, 1], 2).unwrap();
    assert_eq!(s.feature, 0);
    assert_eq!(s.threshold, 1.5);
}

#[test]
fn gain_ties_break_to_the_lowest_threshold() {
    // Alternating labels: thresholds 1.5 and 3.5 both gain 1/6; 2.5 gains 0.
    let data = rows(&[&[1.0, 2.0, 3.0, 4.0]]);
    let labels = [0, 1, 0, 1];
    let s = best_split::<f64>(&data, &labels, &[0, 1, 2, 3], &[0], 2).unwrap();
    assert_eq!(s.threshold, 1.5);
    assert!((s.gain - (0.5 - 0.75 * (4.0 / 9.0))).abs() < 1e-15);
}

#[test]
fn adjacent_float_values_still_split_apart() {
    // mid(1, 1+ε) rounds down onto the lower value: usable as-is.
    let a = 1.0f64;
    let b = 1.0 + f64::EPSILON;
    let s = best_split::<f64>(&rows(&[&[a, b]]), &[0, 1], &[0, 1], &[0], 2).unwrap();
    assert_eq!(s.threshold, a);
    assert!(a <= s.threshold && b > s.threshold);

    // mid(1+ε, 1+2ε) rounds up onto the upper value: the guard must fall
    // back to the lower value so the pair still routes apart.
    let a = 1.0 + f64::EPSILON;
    let b = 1.0 + 2.0 * f64::EPSILON;
    let s = best_split::<f64>(&rows(&[&[a, b]]), &[0, 1], &[0, 1], &[0], 2).unwrap();
    assert_eq!(s.threshold, a);
    assert!(a <= s.threshold && b > s.threshold);
}

/// Brute force: enumerate every candidate feature and every midpoint of
/// consecutive distinct sorted values, recounting partitions from scratch.
fn brute_best(
    data: &[Vec<f64>],
    labels: &[usize],
    idx: &[u32],
    feats: &[usize],
    n_classes: usize,
) -> Option<(usize, f64, f64)> {
    let count = |rows: &[u32]| {
        let mut c = vec![0u32; n_classes];
        for &r in rows {
            c[labels[r as usize]] += 1;
        }
        c
    };
    let parent = gini_impurity(&count(idx));
    let n = idx.len() as f64;
    let mut best: Option<(usize, f64, f64)> = None;
    for &f in feats {
        let mut vals: Vec<f64> = idx.iter().map(|&r| data[r as usize][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let mut t = (w[0] + w[1]) / 2.0;
            if !(t < w[1]) {
                t = w[0];
            }
            let left: Vec<u32> =
                idx.iter().copied().filter(|&r| data[r as usize][f] <= t).collect();
            let right: Vec<u32> =
                idx.iter().copied().filter(|&r| data[r as usize][f] > t).collect();
            let weighted = left.len() as f64 / n * gini_impurity(&count(&left))
                + right.len() as f64 / n * gini_impurity(&count(&right));
            let gain = parent - weighted;
            if gain > best.map_or(0.0, |b| b.2) {
                best = Some((f, t, gain));
            }
        }
    }
    best
}

#[test]
fn best_split_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for case in 0..150 {
        let n = rng.random_range(2..12usize);
        let d = rng.random_range(1..4usize);
        let n_classes = 3;
        // Small integer grids force plenty of duplicate values and ties.
        let data: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(0..6) as f64 / 3.0).collect())
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..n_classes)).collect();
        let idx: Vec<u32> = (0..n as u32).collect();
        let feats: Vec<usize> = (0..d).collect();

        let got = best_split::<f64>(&data, &labels, &idx, &feats, n_classes);
        let want = brute_best(&data, &labels, &idx, &feats, n_classes);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some(w)) => {
                assert_eq!(g.feature, w.0, "case {case}");
                assert_eq!(g.threshold, w.1, "case {case}");
                assert!((g.gain - w.2).abs() < 1e-12, "case {case}: {} vs {}", g.gain, w.2);
                // An accepted split strictly reduces weighted impurity and
                // routes at least one row to each side.
                assert!(g.gain > 0.0, "case {case}");
                let left = idx.iter().filter(|&&r| data[r as usize][g.feature] <= g.threshold).count();
                assert!(left > 0 && left < n, "case {case}");
            }
            (g, w) => panic!("case {case}: impl {g:?} vs oracle {w:?}"),
        }
    }
}

#[test]
fn one_sample_dataset_fits_single_leaf_trees() {
    let forest = RandomForest::<f64>::fit(
        &[vec![1.0, 2.0]],
        &[1],
        &names(2),
        &ForestConfig { n_trees: 5, ..ForestConfig::default() },
    )
    .unwrap();
    assert_eq!(forest.n_trees(), 5);
    for tree in &forest.trees {
        assert_eq!(tree.nodes.len(), 1);
    }
    let (class, fractions) = forest.predict(&[9.0, 9.0]).unwrap();
    assert_eq!(class, 1);
    assert_eq!(fractions, vec![0.0, 1.0]);
}

fn separable_dataset(rng: &mut ChaCha8Rng, n_per_class: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n_per_class {
        samples.push(vec![i as f64 / n_per_class as f64, rng.random_range(-1.0..1.0)]);
        labels.push(0);
        samples.push(vec![2.0 + i as f64 / n_per_class as f64, rng.random_range(-1.0..1.0)]);
        labels.push(1);
    }
    (samples, labels)
}

#[test]
fn separable_data_reaches_near_perfect_training_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (samples, labels) = separable_dataset(&mut rng, 100);
    let cfg = ForestConfig { n_trees: 25, seed: 7, ..ForestConfig::default() };
    let forest = RandomForest::<f64>::fit(&samples, &labels, &names(2), &cfg).unwrap();
    let correct = samples
        .iter()
        .zip(&labels)
        .filter(|(x, &y)| forest.predict(x).unwrap().0 == y)
        .count();
    assert!(correct as f64 / samples.len() as f64 >= 0.99, "got {correct}/200");

    // The f32 forest handles the same data.
    let forest32 = RandomForest::<f32>::fit(&samples, &labels, &names(2), &cfg).unwrap();
    let correct32 = samples
        .iter()
        .zip(&labels)
        .filter(|(x, &y)| forest32.predict(x).unwrap().0 == y)
        .count();
    assert!(correct32 as f64 / samples.len() as f64 >= 0.99);
}

#[test]
fn noisy_three_class_data_reaches_ninety_percent_test_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let centers = [[0.0, 0.0, 0.0], [6.0, 0.0, 3.0], [0.0, 6.0, -3.0]];
    let mut make = |count: usize| {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..count {
            let class = rng.random_range(0..3usize);
            let x: Vec<f64> = centers[class]
                .iter()
                .map(|c| c + rng.random_range(-2.8..2.8))
                .collect();
            xs.push(x);
            ys.push(class);
        }
        (xs, ys)
    };
    let (train_x, train_y) = make(240);
    let (test_x, test_y) = make(90);
    let cfg = ForestConfig { n_trees: 40, seed: 11, ..ForestConfig::default() };
    let forest = RandomForest::<f64>::fit(&train_x, &train_y, &names(3), &cfg).unwrap();
    let correct = test_x
        .iter()
        .zip(&test_y)
        .filter(|(x, &y)| forest.predict(x).unwrap().0 == y)
        .count();
    assert!(correct as f64 / test_x.len() as f64 >= 0.9, "got {correct}/90");
}

#[test]
fn same_seed_serializes_to_identical_bytes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (samples, labels) = separable_dataset(&mut rng, 30);
    let cfg = ForestConfig { n_trees: 8, seed: 99, ..ForestConfig::default() };
    let a = RandomForest::<f64>::fit(&samples, &labels, &names(2), &cfg).unwrap();
    let b = RandomForest::<f64>::fit(&samples, &labels, &names(2), &cfg).unwrap();
    let mut bytes_a = Vec::new();
    let mut bytes_b = Vec::new();
    save_forest_to(&a, &mut bytes_a).unwrap();
    save_forest_to(&b, &mut bytes_b).unwrap();
    assert_eq!(bytes_a, bytes_b);
    assert_eq!(a, b);
}

#[test]
fn vote_ties_go_to_the_lowest_class_and_unanimity_gives_fraction_one() {
    let leaf_tree = |counts: Vec<u32>| Tree::<f64> {
        nodes: vec![TreeNode::Leaf { class_counts: counts }],
    };
    let forest = RandomForest {
        config: ForestConfig::default(),
        n_features: 1,
        class_names: names(2),
        trees: vec![leaf_tree(vec![1, 0]), leaf_tree(vec![0, 1])],
    };
    let (class, fractions) = forest.predict(&[0.0]).unwrap();
    assert_eq!(class, 0, "50/50 vote must resolve to the lowest class");
    assert_eq!(fractions, vec![0.5, 0.5]);

    let unanimous = RandomForest {
        config: ForestConfig::default(),
        n_features: 1,
        class_names: names(2),
        trees: vec![leaf_tree(vec![0, 3]); 4],
    };
    assert_eq!(unanimous.predict(&[0.0]).unwrap(), (1, vec![0.0, 1.0]));

    // A single-tree forest is exactly that tree, and a tied leaf histogram
    // also resolves to the lowest class.
    let single = RandomForest {
        config: ForestConfig::default(),
        n_features: 1,
        class_names: names(2),
        trees: vec![leaf_tree(vec![2, 2])],
    };
    assert_eq!(single.predict(&[0.0]).unwrap().0, 0);
}

#[test]
fn predict_is_pure() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (samples, labels) = separable_dataset(&mut rng, 20);
    let cfg = ForestConfig { n_trees: 5, seed: 1, ..ForestConfig::default() };
    let forest = RandomForest::<f64>::fit(&samples, &labels, &names(2), &cfg).unwrap();
    let x = [1.3, 0.0];
    assert_eq!(forest.predict(&x).unwrap(), forest.predict(&x).unwrap());
}

#[test]
fn depth_and_split_size_limits_force_leaves() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (samples, labels) = separable_dataset(&mut rng, 20);
    let stump = RandomForest::<f64>::fit(
        &samples,
        &labels,
        &names(2),
        &ForestConfig { n_trees: 3, max_depth: Some(0), ..ForestConfig::default() },
    )
    .unwrap();
    for tree in &stump.trees {
        assert_eq!(tree.nodes.len(), 1);
    }
    let unsplit = RandomForest::<f64>::fit(
        &samples,
        &labels,
        &names(2),
        &ForestConfig { n_trees: 3, min_samples_split: 10_000, ..ForestConfig::default() },
    )
    .unwrap();
    for tree in &unsplit.trees {
        assert_eq!(tree.nodes.len(), 1);
    }
    // One-level trees stop after a single split.
    let one_level = RandomForest::<f64>::fit(
        &samples,
        &labels,
        &names(2),
        &ForestConfig { n_trees: 3, max_depth: Some(1), ..ForestConfig::default() },
    )
    .unwrap();
    for tree in &one_level.trees {
        assert!(tree.nodes.len() <= 3);
    }
}

#[test]
fn fit_rejects_bad_inputs() {
    let cfg = ForestConfig::default();
    assert!(matches!(
        RandomForest::<f64>::fit(&[], &[], &names(2), &cfg),
        Err(ForestError::EmptyDataset)
    ));
    assert!(matches!(
        RandomForest::<f64>::fit(&[vec![1.0, 2.0], vec![3.0]], &[0, 1], &names(2), &cfg),
        Err(ForestError::DimensionMismatch { expected: 2, found: 1 })
    ));
    assert!(matches!(
        RandomForest::<f64>::fit(&[vec![1.0], vec![2.0]], &[0], &names(2), &cfg),
        Err(ForestError::LengthMismatch { samples: 2, labels: 1 })
    ));
    assert!(matches!(
        RandomForest::<f64>::fit(&[vec![1.0], vec![2.0]], &[0, 5], &names(2), &cfg),
        Err(ForestError::LabelOutOfRange { label: 5, classes: 2 })
    ));
    assert!(matches!(
        RandomForest::<f64>::fit(&[vec![]], &[0], &names(2), &cfg),
        Err(ForestError::DimensionMismatch { expected: 1, found: 0 })
    ));
    assert!(matches!(
        RandomForest::<f64>::fit(&[vec![1.0]], &[0], &names(1), &cfg),
        Err(ForestError::BadConfig(_))
    ));

    let zero_trees = ForestConfig { n_trees: 0, ..ForestConfig::default() };
    assert!(matches!(
        RandomForest::<f64>::fit(&[vec![1.0]], &[0], &names(2), &zero_trees),
        Err(ForestError::BadConfig(_))
    ));
    let too_many = ForestConfig { features_per_split: Some(3), ..ForestConfig::default() };
    assert!(matches!(
        RandomForest::<f64>::fit(&[vec![1.0, 2.0]], &[0], &names(2), &too_many),
        Err(ForestError::BadConfig(_))
    ));
    let zero_feats = ForestConfig { features_per_split: Some(0), ..ForestConfig::default() };
    assert!(matches!(
        RandomForest::<f64>::fit(&[vec![1.0]], &[0], &names(2), &zero_feats),
        Err(ForestError::BadConfig(_))
    ));
    let tiny_split = ForestConfig { min_samples_split: 1, ..ForestConfig::default() };
    assert!(matches!(
        RandomForest::<f64>::fit(&[vec![1.0]], &[0], &names(2), &tiny_split),
        Err(ForestError::BadConfig(_))
    ));
}

#[test]
fn predict_rejects_wrong_dimension() {
    let forest = RandomForest::<f64>::fit(
        &[vec![0.0, 0.0], vec![1.0, 1.0]],
        &[0, 1],
        &names(2),
        &ForestConfig { n_trees: 1, ..ForestConfig::default() },
    )
    .unwrap();
    assert!(matches!(
        forest.predict(&[1.0, 2.0, 3.0]),
        Err(ForestError::DimensionMismatch { expected: 2, found: 3 })
    ));
}

#[test]
fn forest_file_round_trips_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let samples: Vec<Vec<f64>> = (0..60)
        .map(|_| (0..4).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
    let cfg = ForestConfig { n_trees: 10, seed: 42, ..ForestConfig::default() };
    let forest = RandomForest::<f64>::fit(&samples, &labels, &names(3), &cfg).unwrap();

    let dir = tempdir().unwrap();
    let path = dir.path().join("model.tlrf");
    save_forest(&forest, &path).unwrap();
    let loaded = load_forest(&path).unwrap();

    assert_eq!(loaded.class_names(), forest.class_names());
    assert_eq!(loaded.n_features(), 4);
    assert_eq!(loaded.config(), forest.config());
    assert_eq!(loaded, forest);
    for x in samples.iter().take(20) {
        assert_eq!(loaded.predict(x).unwrap(), forest.predict(x).unwrap());
    }

    // Serialization is canonical: saving the loaded forest reproduces the
    // file byte for byte.
    let mut first = Vec::new();
    let mut second = Vec::new();
    save_forest_to(&forest, &mut first).unwrap();
    save_forest_to(&loaded, &mut second).unwrap();
    assert_eq!(first, second);
}

#[test]
fn split_counts_follow_the_informative_feature() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (samples, labels) = separable_dataset(&mut rng, 50);
    let cfg = ForestConfig { n_trees: 15, seed: 3, ..ForestConfig::default() };
    let forest = RandomForest::<f64>::fit(&samples, &labels, &names(2), &cfg).unwrap();
    let counts = forest.split_counts();
    assert!(counts[0] > counts[1], "feature 0 carries the signal: {counts:?}");
}

/// Minimal hand-built forest file: 1 tree, 1 feature, classes "a"/"b".
fn mini_file(nodes: &[Vec<u8>]) -> Vec<u8> {
    let mut v = Vec::new();
    v.extend_from_slice(&MAGIC);
    v.extend_from_slice(&VERSION.to_le_bytes());
    v.extend_from_slice(&1u32.to_le_bytes()); // trees
    v.extend_from_slice(&1u32.to_le_bytes()); // features
    v.extend_from_slice(&2u32.to_le_bytes()); // classes
    v.extend_from_slice(&0u64.to_le_bytes()); // seed
    v.extend_from_slice(&u64::MAX.to_le_bytes()); // unlimited depth
    v.extend_from_slice(&2u32.to_le_bytes()); // min_samples_split
    v.extend_from_slice(&1u32.to_le_bytes()); // features_per_split
    v.push(1); // bootstrap
    for name in ["a", "b"] {
        v.extend_from_slice(&(name.len() as u32).to_le_bytes());
        v.extend_from_slice(name.as_bytes());
    }
    v.extend_from_slice(&(nodes.len() as u32).to_le_bytes());
    for node in nodes {
        v.extend_from_slice(node);
    }
    v
}

fn split_node(feature: u32, threshold: f64, left: u32, right: u32) -> Vec<u8> {
    let mut v = vec![0x00];
    v.extend_from_slice(&feature.to_le_bytes());
    v.extend_from_slice(&threshold.to_le_bytes());
    v.extend_from_slice(&left.to_le_bytes());
    v.extend_from_slice(&right.to_le_bytes());
    v
}

fn leaf_node(counts: [u32; 2]) -> Vec<u8> {
    let mut v = vec![0x01];
    for c in counts {
        v.extend_from_slice(&c.to_le_bytes());
    }
    v
}

#[test]
fn hand_built_file_loads_and_validation_catches_corruption() {
    let good = mini_file(&[
        split_node(0, 0.5, 1, 2),
        leaf_node([3, 0]),
        leaf_node([0, 2]),
    ]);
    let forest = load_forest_from(&mut good.as_slice()).unwrap();
    assert_eq!(forest.predict(&[0.0]).unwrap().0, 0);
    assert_eq!(forest.predict(&[1.0]).unwrap().0, 1);

    // Child index pointing at or before the parent.
    let cyclic = mini_file(&[split_node(0, 0.5, 0, 1), leaf_node([1, 0])]);
    assert!(matches!(
        load_forest_from(&mut cyclic.as_slice()),
        Err(ForestError::Corrupt("child index out of order"))
    ));

    let bad_feature = mini_file(&[split_node(9, 0.5, 1, 2), leaf_node([1, 0]), leaf_node([0, 1])]);
    assert!(matches!(
        load_forest_from(&mut bad_feature.as_slice()),
        Err(ForestError::Corrupt("split feature out of range"))
    ));

    let empty_leaf = mini_file(&[leaf_node([0, 0])]);
    assert!(matches!(
        load_forest_from(&mut empty_leaf.as_slice()),
        Err(ForestError::Corrupt("empty leaf"))
    ));

    let bad_tag = mini_file(&[vec![0x07]]);
    assert!(matches!(
        load_forest_from(&mut bad_tag.as_slice()),
        Err(ForestError::Corrupt("unknown node tag"))
    ));

    let nan_threshold = mini_file(&[
        split_node(0, f64::NAN, 1, 2),
        leaf_node([1, 0]),
        leaf_node([0, 1]),
    ]);
    assert!(matches!(
        load_forest_from(&mut nan_threshold.as_slice()),
        Err(ForestError::Corrupt("non-finite threshold"))
    ));
}

#[test]
fn loader_rejects_bad_magic_version_truncation_and_trailing_bytes() {
    let mut bytes = mini_file(&[leaf_node([1, 0])]);

    let mut wrong_magic = bytes.clone();
    wrong_magic[..4].copy_from_slice(b"TLNN");
    assert!(matches!(
        load_forest_from(&mut wrong_magic.as_slice()),
        Err(ForestError::BadMagic)
    ));

    let mut wrong_version = bytes.clone();
    wrong_version[4..8].copy_from_slice(&9u32.to_le_bytes());
    assert!(matches!(
        load_forest_from(&mut wrong_version.as_slice()),
        Err(ForestError::VersionMismatch(9))
    ));

    let truncated = &bytes[..bytes.len() - 3];
    assert!(matches!(
        load_forest_from(&mut &truncated[..]),
        Err(ForestError::Truncated(_))
    ));

    bytes.push(0xAB);
    assert!(matches!(
        load_forest_from(&mut bytes.as_slice()),
        Err(ForestError::Corrupt("trailing bytes"))
    ));
}

#[test]
fn default_features_per_split_is_ceil_sqrt_d() {
    // d = 5 → ⌈√5⌉ = 3, recorded in the fitted config.
    let samples: Vec<Vec<f64>> = vec![vec![0.0; 5], vec![1.0; 5]];
    let forest = RandomForest::<f64>::fit(
        &samples,
        &[0, 1],
        &names(2),
        &ForestConfig { n_trees: 1, ..ForestConfig::default() },
    )
    .unwrap();
    assert_eq!(forest.config().features_per_split, Some(3));
}
