//! From-scratch random-forest classifier over flow feature vectors.
//!
//! Plain CART trees: axis-aligned splits chosen by Gini impurity decrease,
//! grown on bootstrap samples with a random feature subset per node. No
//! pruning; leaves keep their class histograms and vote their plurality
//! class. Trees are independent (and could be grown in parallel); this
//! implementation grows them sequentially in index order so a fixed seed
//! always produces a bit-identical forest.
//!
//! Thresholds are stored in the scalar type `T`; impurity arithmetic is
//! always f64 because it only involves integer counts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;

pub const MAGIC: [u8; 4] = *b"TLRF";
pub const VERSION: u32 = 1;

/// Guards against absurd headers when reading untrusted files.
const MAX_TREES: u32 = 1 << 20;
const MAX_NODES: u32 = 1 << 26;
const MAX_CLASSES: u32 = 1 << 16;
const MAX_FEATURES: u32 = 1 << 20;
const MAX_NAME_LEN: u32 = 4096;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("cannot fit a forest on an empty dataset")]
    EmptyDataset,
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{samples} samples but {labels} labels")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid forest configuration: {0}")]
    BadConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a forest file (bad magic)")]
    BadMagic,
    #[error("unsupported forest version {0}")]
    VersionMismatch(u32),
    #[error("forest file truncated: {0}")]
    Truncated(&'static str),
    #[error("class name is not valid UTF-8")]
    BadName,
    #[error("forest file is inconsistent: {0}")]
    Corrupt(&'static str),
}

/// Forest hyperparameters. `features_per_split: None` resolves to ⌈√d⌉ at
/// fit time; `max_depth: None` means unlimited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    fn validate(&self, n_features: usize) -> Result<usize, ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::BadConfig("n_trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(ForestError::BadConfig(
                "min_samples_split must be at least 2".into(),
            ));
        }
        let k = self
            .features_per_split
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize);
        if k == 0 || k > n_features {
            return Err(ForestError::BadConfig(format!(
                "features_per_split {k} not in 1..={n_features}"
            )));
        }
        Ok(k)
    }
}

/// One tree node in the arena; children are indices into the same arena and
/// always come after their parent (pre-order layout).
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode<T> {
    Split {
        feature: usize,
        threshold: T,
        left: u32,
        right: u32,
    },
    Leaf {
        class_counts: Vec<u32>,
    },
}

/// A single CART tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree<T> {
    nodes: Vec<TreeNode<T>>,
}

impl<T: Scalar> Tree<T> {
    /// The leaf's plurality class for `x`; ties go to the lowest class index.
    fn vote(&self, x: &[f64]) -> usize {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { class_counts } => return argmax_lowest(class_counts),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if T::from_f64(x[*feature]) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

/// Index of the largest count, lowest index first on ties.
fn argmax_lowest<C: PartialOrd + Copy>(counts: &[C]) -> usize {
    let mut best = 0usize;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Gini impurity `1 − Σ (c/n)²` of a class histogram.
pub fn gini_impurity(counts: &[u32]) -> f64 {
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = f64::from(c) / n;
            p * p
        })
        .sum::<f64>()
}

/// The split CART chose for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice<T> {
    pub feature: usize,
    pub threshold: T,
    pub gain: f64,
}

/// Best axis-aligned split of the rows in `idx` over the `candidates`
/// feature set, or `None` when no split strictly reduces impurity (pure
/// node, constant candidate features, fewer than 2 rows).
///
/// Thresholds are midpoints of consecutive distinct sorted values; when the
/// midpoint rounds up onto the upper value it falls back to the lower value
/// so that `x <= threshold` still routes the pair apart. Ties on gain are
/// broken by the lowest feature index, then the lowest threshold
/// (`candidates` are scanned in the order given, so pass them sorted).
pub fn best_split<T: Scalar>(
    data: &[Vec<T>],
    labels: &[usize],
    idx: &[u32],
    candidates: &[usize],
    n_classes: usize,
) -> Option<SplitChoice<T>> {
    if idx.len() < 2 {
        return None;
    }
    let mut parent_counts = vec![0u32; n_classes];
    for &r in idx {
        parent_counts[labels[r as usize]] += 1;
    }
    let parent = gini_impurity(&parent_counts);
    let n = idx.len() as f64;

    let mut best: Option<SplitChoice<T>> = None;
    let mut pairs: Vec<(T, usize)> = Vec::with_capacity(idx.len());
    for &feature in candidates {
        pairs.clear();
        pairs.extend(
            idx.iter()
                .map(|&r| (data[r as usize][feature], labels[r as usize])),
        );
        pairs.sort_by(|a, b| a.0.as_f64().total_cmp(&b.0.as_f64()));

        let mut left_counts = vec![0u32; n_classes];
        let mut left_n = 0.0f64;
        for i in 0..pairs.len() - 1 {
            left_counts[pairs[i].1] += 1;
            left_n += 1.0;
            let (a, b) = (pairs[i].0, pairs[i + 1].0);
            if a == b {
                continue;
            }
            let mut threshold = (a + b) / T::from_f64(2.0);
            if !(threshold < b) {
                threshold = a; // midpoint rounded onto b; keep b on the right
            }
            let right_counts: Vec<u32> = parent_counts
                .iter()
                .zip(&left_counts)
                .map(|(&p, &l)| p - l)
                .collect();
            let weighted = left_n / n * gini_impurity(&left_counts)
                + (n - left_n) / n * gini_impurity(&right_counts);
            let gain = parent - weighted;
            if gain > best.as_ref().map_or(0.0, |s| s.gain) {
                best = Some(SplitChoice {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

/// Bagged ensemble of [`Tree`]s with majority-vote prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest<T> {
    config: ForestConfig,
    n_features: usize,
    class_names: Vec<String>,
    trees: Vec<Tree<T>>,
}

struct GrowContext<'a, T> {
    data: &'a [Vec<T>],
    labels: &'a [usize],
    n_classes: usize,
    n_features: usize,
    features_per_split: usize,
    max_depth: Option<usize>,
    min_samples_split: usize,
}

impl<T: Scalar> RandomForest<T> {
    /// Fits `config.n_trees` trees on `samples` (row-major, one label per
    /// row). `class_names.len()` fixes the class count; every label must be
    /// a valid index into it.
    pub fn fit(
        samples: &[Vec<f64>],
        labels: &[usize],
        class_names: &[String],
        config: &ForestConfig,
    ) -> Result<RandomForest<T>, ForestError> {
        if samples.is_empty() {
            return Err(ForestError::EmptyDataset);
        }
        if samples.len() != labels.len() {
            return Err(ForestError::LengthMismatch {
                samples: samples.len(),
                labels: labels.len(),
            });
        }
        let n_features = samples[0].len();
        if n_features == 0 {
            return Err(ForestError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        for row in samples {
            if row.len() != n_features {
                return Err(ForestError::DimensionMismatch {
                    expected: n_features,
                    found: row.len(),
                });
            }
        }
        let n_classes = class_names.len();
        if n_classes < 2 {
            return Err(ForestError::BadConfig(
                "need at least 2 class names".into(),
            ));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(ForestError::LabelOutOfRange {
                label,
                classes: n_classes,
            });
        }
        let features_per_split = config.validate(n_features)?;

        let data: Vec<Vec<T>> = samples
            .iter()
            .map(|row| row.iter().map(|&v| T::from_f64(v)).collect())
            .collect();
        let ctx = GrowContext {
            data: &data,
            labels,
            n_classes,
            n_features,
            features_per_split,
            max_depth: config.max_depth,
            min_samples_split: config.min_samples_split,
        };

        // One independent stream per tree, all derived from the forest seed.
        let mut master = ChaCha8Rng::seed_from_u64(config.seed);
        let tree_seeds: Vec<u64> = (0..config.n_trees).map(|_| master.random()).collect();

        let n = samples.len();
        let mut trees = Vec::with_capacity(config.n_trees);
        for seed in tree_seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let idx: Vec<u32> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n) as u32).collect()
            } else {
                (0..n as u32).collect()
            };
            let mut nodes = Vec::new();
            grow(&ctx, &mut nodes, idx, 0, &mut rng);
            trees.push(Tree { nodes });
        }

        Ok(RandomForest {
            config: ForestConfig {
                features_per_split: Some(features_per_split),
                ..config.clone()
            },
            n_features,
            class_names: class_names.to_vec(),
            trees,
        })
    }

    /// Majority vote over all trees: the winning class (ties to the lowest
    /// index) and the per-class vote fractions.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, Vec<f64>), ForestError> {
        if x.len() != self.n_features {
            return Err(ForestError::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let mut votes = vec![0u32; self.class_names.len()];
        for tree in &self.trees {
            votes[tree.vote(x)] += 1;
        }
        let fractions: Vec<f64> = votes
            .iter()
            .map(|&v| f64::from(v) / self.trees.len() as f64)
            .collect();
        Ok((argmax_lowest(&votes), fractions))
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    /// Total split-node count per feature, a crude importance signal.
    pub fn split_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_features];
        for tree in &self.trees {
            for node in &tree.nodes {
                if let TreeNode::Split { feature, .. } = node {
                    counts[*feature] += 1;
                }
            }
        }
        counts
    }
}

/// Grows a subtree over the rows in `idx`, returning its root node index.
fn grow<T: Scalar>(
    ctx: &GrowContext<'_, T>,
    nodes: &mut Vec<TreeNode<T>>,
    idx: Vec<u32>,
    depth: usize,
    rng: &mut ChaCha8Rng,
) -> u32 {
    let mut class_counts = vec![0u32; ctx.n_classes];
    for &r in &idx {
        class_counts[ctx.labels[r as usize]] += 1;
    }
    let pure = class_counts.iter().filter(|&&c| c > 0).count() <= 1;
    let depth_capped = ctx.max_depth.is_some_and(|m| depth >= m);
    let make_leaf = |nodes: &mut Vec<TreeNode<T>>| {
        nodes.push(TreeNode::Leaf { class_counts });
        (nodes.len() - 1) as u32
    };
    if pure || depth_capped || idx.len() < ctx.min_samples_split {
        return make_leaf(nodes);
    }

    // Random candidate subset (partial Fisher–Yates), sorted so the
    // lowest-feature-index tie rule applies within the sample.
    let mut features: Vec<usize> = (0..ctx.n_features).collect();
    for i in 0..ctx.features_per_split {
        let j = rng.random_range(i..ctx.n_features);
        features.swap(i, j);
    }
    features.truncate(ctx.features_per_split);
    features.sort_unstable();

    let Some(split) = best_split(ctx.data, ctx.labels, &idx, &features, ctx.n_classes) else {
        return make_leaf(nodes);
    };

    let (left_idx, right_idx): (Vec<u32>, Vec<u32>) = idx
        .iter()
        .partition(|&&r| ctx.data[r as usize][split.feature] <= split.threshold);
    debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());

    let me = nodes.len() as u32;
    nodes.push(TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: u32::MAX,
        right: u32::MAX,
    });
    let l = grow(ctx, nodes, left_idx, depth + 1, rng);
    let r = grow(ctx, nodes, right_idx, depth + 1, rng);
    if let TreeNode::Split { left, right, .. } = &mut nodes[me as usize] {
        *left = l;
        *right = r;
    }
    me
}

/// Serializes a forest. Layout (integers little-endian):
///
/// ```text
/// "TLRF" | version: u32
/// | n_trees: u32 | n_features: u32 | n_classes: u32
/// | seed: u64 | max_depth: u64 (u64::MAX = unlimited)
/// | min_samples_split: u32 | features_per_split: u32 | bootstrap: u8
/// | class name × n_classes   (len: u32 | UTF-8 bytes)
/// | tree × n_trees           (node_count: u32 | node × node_count)
/// node = 0x00 | feature: u32 | threshold: f64 | left: u32 | right: u32
///      | 0x01 | count: u32 × n_classes
/// ```
pub fn save_forest<T: Scalar>(forest: &RandomForest<T>, path: &Path) -> Result<(), ForestError> {
    let mut out = BufWriter::new(File::create(path)?);
    save_forest_to(forest, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn save_forest_to<T: Scalar, W: Write>(
    forest: &RandomForest<T>,
    out: &mut W,
) -> Result<(), ForestError> {
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(forest.trees.len() as u32).to_le_bytes())?;
    out.write_all(&(forest.n_features as u32).to_le_bytes())?;
    out.write_all(&(forest.class_names.len() as u32).to_le_bytes())?;
    out.write_all(&forest.config.seed.to_le_bytes())?;
    let depth = forest.config.max_depth.map_or(u64::MAX, |d| d as u64);
    out.write_all(&depth.to_le_bytes())?;
    out.write_all(&(forest.config.min_samples_split as u32).to_le_bytes())?;
    let fps = forest.config.features_per_split.unwrap_or(0) as u32;
    out.write_all(&fps.to_le_bytes())?;
    out.write_all(&[u8::from(forest.config.bootstrap)])?;
    for name in &forest.class_names {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
    }
    for tree in &forest.trees {
        out.write_all(&(tree.nodes.len() as u32).to_le_bytes())?;
        for node in &tree.nodes {
            match node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    out.write_all(&[0x00])?;
                    out.write_all(&(*feature as u32).to_le_bytes())?;
                    out.write_all(&threshold.as_f64().to_le_bytes())?;
                    out.write_all(&left.to_le_bytes())?;
                    out.write_all(&right.to_le_bytes())?;
                }
                TreeNode::Leaf { class_counts } => {
                    out.write_all(&[0x01])?;
                    for &c in class_counts {
                        out.write_all(&c.to_le_bytes())?;
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn load_forest(path: &Path) -> Result<RandomForest<f64>, ForestError> {
    load_forest_from(&mut BufReader::new(File::open(path)?))
}

pub fn load_forest_from<R: Read>(input: &mut R) -> Result<RandomForest<f64>, ForestError> {
    let mut magic = [0u8; 4];
    read_exact(input, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(ForestError::BadMagic);
    }
    let version = read_u32(input, "version")?;
    if version != VERSION {
        return Err(ForestError::VersionMismatch(version));
    }
    let n_trees = read_u32(input, "tree count")?;
    let n_features = read_u32(input, "feature count")?;
    let n_classes = read_u32(input, "class count")?;
    if n_trees == 0 || n_trees > MAX_TREES {
        return Err(ForestError::Corrupt("tree count"));
    }
    if n_features == 0 || n_features > MAX_FEATURES {
        return Err(ForestError::Corrupt("feature count"));
    }
    if n_classes < 2 || n_classes > MAX_CLASSES {
        return Err(ForestError::Corrupt("class count"));
    }
    let seed = read_u64(input, "seed")?;
    let max_depth_raw = read_u64(input, "max depth")?;
    let min_samples_split = read_u32(input, "min samples split")? as usize;
    let features_per_split = read_u32(input, "features per split")? as usize;
    let mut bootstrap = [0u8; 1];
    read_exact(input, &mut bootstrap, "bootstrap flag")?;

    let mut class_names = Vec::with_capacity(n_classes as usize);
    for _ in 0..n_classes {
        let len = read_u32(input, "class name length")?;
        if len > MAX_NAME_LEN {
            return Err(ForestError::Corrupt("class name length"));
        }
        let mut bytes = vec![0u8; len as usize];
        read_exact(input, &mut bytes, "class name")?;
        class_names.push(String::from_utf8(bytes).map_err(|_| ForestError::BadName)?);
    }

    let mut trees = Vec::with_capacity(n_trees as usize);
    for _ in 0..n_trees {
        let node_count = read_u32(input, "node count")?;
        if node_count == 0 || node_count > MAX_NODES {
            return Err(ForestError::Corrupt("node count"));
        }
        let mut nodes = Vec::with_capacity(node_count as usize);
        for i in 0..node_count {
            let mut tag = [0u8; 1];
            read_exact(input, &mut tag, "node tag")?;
            match tag[0] {
                0x00 => {
                    let feature = read_u32(input, "split feature")?;
                    let mut raw = [0u8; 8];
                    read_exact(input, &mut raw, "split threshold")?;
                    let threshold = f64::from_le_bytes(raw);
                    let left = read_u32(input, "left child")?;
                    let right = read_u32(input, "right child")?;
                    if feature >= n_features {
                        return Err(ForestError::Corrupt("split feature out of range"));
                    }
                    // Pre-order layout: children strictly after the parent.
                    if left <= i || right <= i || left >= node_count || right >= node_count {
                        return Err(ForestError::Corrupt("child index out of order"));
                    }
                    if !threshold.is_finite() {
                        return Err(ForestError::Corrupt("non-finite threshold"));
                    }
                    nodes.push(TreeNode::Split {
                        feature: feature as usize,
                        threshold,
                        left,
                        right,
                    });
                }
                0x01 => {
                    let mut class_counts = Vec::with_capacity(n_classes as usize);
                    for _ in 0..n_classes {
                        class_counts.push(read_u32(input, "leaf count")?);
                    }
                    if class_counts.iter().all(|&c| c == 0) {
                        return Err(ForestError::Corrupt("empty leaf"));
                    }
                    nodes.push(TreeNode::Leaf { class_counts });
                }
                _ => return Err(ForestError::Corrupt("unknown node tag")),
            }
        }
        trees.push(Tree { nodes });
    }

    let mut trailing = [0u8; 1];
    if read_at_most(input, &mut trailing)? != 0 {
        return Err(ForestError::Corrupt("trailing bytes"));
    }

    Ok(RandomForest {
        config: ForestConfig {
            n_trees: n_trees as usize,
            max_depth: (max_depth_raw != u64::MAX).then_some(max_depth_raw as usize),
            min_samples_split,
            features_per_split: (features_per_split > 0).then_some(features_per_split),
            bootstrap: bootstrap[0] != 0,
            seed,
        },
        n_features: n_features as usize,
        class_names,
        trees,
    })
}

fn read_u32<R: Read>(input: &mut R, what: &'static str) -> Result<u32, ForestError> {
    let mut bytes = [0u8; 4];
    read_exact(input, &mut bytes, what)?;
    Ok(u32::from_le_bytes(bytes))
}

fn read_u64<R: Read>(input: &mut R, what: &'static str) -> Result<u64, ForestError> {
    let mut bytes = [0u8; 8];
    read_exact(input, &mut bytes, what)?;
    Ok(u64::from_le_bytes(bytes))
}

fn read_exact<R: Read>(
    input: &mut R,
    buf: &mut [u8],
    what: &'static str,
) -> Result<(), ForestError> {
    if read_at_most(input, buf)? < buf.len() {
        return Err(ForestError::Truncated(what));
    }
    Ok(())
}

fn read_at_most<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<usize, ForestError> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

#[cfg(test)]
mod tests;
