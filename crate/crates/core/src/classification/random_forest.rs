use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{prepare, ClassifyError, InputShape, LabeledRow};
use crate::features::MixedVector;
use crate::seed;

/// Nominal id for symbols absent from the training vocabulary.
const UNSEEN: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct RfParams {
    pub n_trees: usize,
    pub seed: u64,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    /// `None` means `floor(sqrt(d))`.
    pub features_per_split: Option<usize>,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams { n_trees: 100, seed: 0, max_depth: None, features_per_split: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum TreeNode {
    #[serde(rename = "leaf")]
    Leaf(u32),
    /// feature, threshold, left, right; `x <= threshold` goes left
    #[serde(rename = "num")]
    Numeric(u32, f64, u32, u32),
    /// feature, symbol, left, right; `x == symbol` goes left
    #[serde(rename = "nom")]
    Nominal(u32, u32, u32, u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    fn predict(&self, numeric: &[f64], nominal: &[u32]) -> u32 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf(label) => return label,
                TreeNode::Numeric(f, t, l, r) => at = if numeric[f as usize] <= t { l } else { r } as usize,
                TreeNode::Nominal(f, s, l, r) => at = if nominal[f as usize] == s { l } else { r } as usize,
            }
        }
    }
}

/// Bagged CART trees with Gini impurity. Numeric splits threshold at midpoints
/// between adjacent distinct values; nominal splits test one symbol against the
/// rest, so unseen symbols always follow the "rest" branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub(super) labels: Vec<String>,
    shape: InputShape,
    vocab: Vec<Vec<String>>,
    trees: Vec<Tree>,
}

struct Columns {
    numeric: Vec<Vec<f64>>,
    nominal: Vec<Vec<u32>>,
    labels: Vec<u32>,
    n_classes: usize,
}

impl Columns {
    fn n_features(&self) -> usize {
        self.numeric.len() + self.nominal.len()
    }
}

pub fn rf_fit(rows: &[LabeledRow], params: &RfParams) -> Result<RandomForest, ClassifyError> {
    if params.n_trees == 0 {
        return Err(ClassifyError::InvalidParameter("n_trees must be at least 1".into()));
    }
    let (shape, labels) = prepare(rows)?;
    let vocab: Vec<Vec<String>> = (0..shape.nominal)
        .map(|j| {
            let mut v: Vec<String> = rows.iter().map(|r| r.input.nominal[j].clone()).collect();
            v.sort();
            v.dedup();
            v
        })
        .collect();
    let columns = Columns {
        numeric: (0..shape.numeric).map(|j| rows.iter().map(|r| r.input.numeric[j]).collect()).collect(),
        nominal: (0..shape.nominal)
            .map(|j| rows.iter().map(|r| vocab[j].binary_search(&r.input.nominal[j]).expect("in vocab") as u32).collect())
            .collect(),
        labels: rows.iter().map(|r| labels.binary_search(&r.label).expect("in label set") as u32).collect(),
        n_classes: labels.len(),
    };
    let d = columns.n_features();
    let mtry = params
        .features_per_split
        .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
        .clamp(1, d.max(1));
    let trees = (0..params.n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive_indexed(params.seed, "tree", t as u64));
            grow_tree(&columns, &mut rng, mtry, params.max_depth)
        })
        .collect();
    Ok(RandomForest { labels, shape, vocab, trees })
}

struct Split {
    node: TreeNode,
    score: f64,
}

fn class_counts(columns: &Columns, idx: &[u32]) -> Vec<usize> {
    let mut counts = vec![0; columns.n_classes];
    for &i in idx {
        counts[columns.labels[i as usize] as usize] += 1;
    }
    counts
}

fn majority(counts: &[usize]) -> u32 {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u32
}

fn purity(counts: &[usize], n: usize) -> f64 {
    // sum c^2 / n; larger is purer
    counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / n as f64
}

fn grow_tree(columns: &Columns, rng: &mut ChaCha8Rng, mtry: usize, max_depth: Option<usize>) -> Tree {
    let n = columns.labels.len();
    let sample: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
    let mut nodes = vec![TreeNode::Leaf(0)];
    let mut pending = vec![(0usize, sample, 0usize)];
    let mut features: Vec<usize> = (0..columns.n_features()).collect();
    while let Some((slot, idx, depth)) = pending.pop() {
        let counts = class_counts(columns, &idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let capped = max_depth.is_some_and(|m| depth >= m);
        let split = if pure || capped || idx.len() < 2 {
            None
        } else {
            features.shuffle(rng);
            best_split(columns, &idx, &counts, &features, mtry)
        };
        let Some(split) = split else {
            nodes[slot] = TreeNode::Leaf(majority(&counts));
            continue;
        };
        let (left_idx, right_idx): (Vec<u32>, Vec<u32>) = idx.iter().partition(|&&i| goes_left(columns, &split.node, i));
        let (l, r) = (nodes.len() as u32, nodes.len() as u32 + 1);
        nodes.push(TreeNode::Leaf(0));
        nodes.push(TreeNode::Leaf(0));
        nodes[slot] = match split.node {
            TreeNode::Numeric(f, t, ..) => TreeNode::Numeric(f, t, l, r),
            TreeNode::Nominal(f, s, ..) => TreeNode::Nominal(f, s, l, r),
            TreeNode::Leaf(_) => unreachable!("splits are never leaves"),
        };
        pending.push((r as usize, right_idx, depth + 1));
        pending.push((l as usize, left_idx, depth + 1));
    }
    Tree { nodes }
}

fn goes_left(columns: &Columns, node: &TreeNode, i: u32) -> bool {
    match *node {
        TreeNode::Numeric(f, t, ..) => columns.numeric[f as usize][i as usize] <= t,
        TreeNode::Nominal(f, s, ..) => columns.nominal[f as usize][i as usize] == s,
        TreeNode::Leaf(_) => unreachable!(),
    }
}

/// Examines features in the given order until at least `mtry` have been tried
/// and a valid split exists.
fn best_split(columns: &Columns, idx: &[u32], counts: &[usize], order: &[usize], mtry: usize) -> Option<Split> {
    let n_num = columns.numeric.len();
    let mut best: Option<Split> = None;
    for (tried, &f) in order.iter().enumerate() {
        if tried >= mtry && best.is_some() {
            break;
        }
        let candidate = if f < n_num {
            numeric_split(columns, idx, counts, f)
        } else {
            nominal_split(columns, idx, counts, f - n_num)
        };
        if let Some(c) = candidate {
            if best.as_ref().is_none_or(|b| c.score > b.score) {
                best = Some(c);
            }
        }
    }
    best
}

fn numeric_split(columns: &Columns, idx: &[u32], counts: &[usize], f: usize) -> Option<Split> {
    let column = &columns.numeric[f];
    let mut pairs: Vec<(f64, u32)> = idx.iter().map(|&i| (column[i as usize], columns.labels[i as usize])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let mut left = vec![0usize; counts.len()];
    let mut right = counts.to_vec();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n - 1 {
        let (x, y) = pairs[i];
        left[y as usize] += 1;
        right[y as usize] -= 1;
        let next = pairs[i + 1].0;
        if next <= x {
            continue;
        }
        let score = purity(&left, i + 1) + purity(&right, n - i - 1);
        if best.is_none_or(|(s, _)| score > s) {
            let mut threshold = x + (next - x) / 2.0;
            if threshold >= next {
                threshold = x;
            }
            best = Some((score, threshold));
        }
    }
    best.map(|(score, t)| Split { node: TreeNode::Numeric(f as u32, t, 0, 0), score })
}

fn nominal_split(columns: &Columns, idx: &[u32], counts: &[usize], f: usize) -> Option<Split> {
    let column = &columns.nominal[f];
    let mut per_symbol: std::collections::BTreeMap<u32, Vec<usize>> = std::collections::BTreeMap::new();
    for &i in idx {
        per_symbol.entry(column[i as usize]).or_insert_with(|| vec![0; counts.len()])[columns.labels[i as usize] as usize] += 1;
    }
    if per_symbol.len() < 2 {
        return None;
    }
    let n = idx.len();
    let mut best: Option<Split> = None;
    for (&symbol, inside) in &per_symbol {
        let n_in: usize = inside.iter().sum();
        let outside: Vec<usize> = counts.iter().zip(inside).map(|(t, i)| t - i).collect();
        let score = purity(inside, n_in) + purity(&outside, n - n_in);
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(Split { node: TreeNode::Nominal(f as u32, symbol, 0, 0), score });
        }
    }
    best
}

impl RandomForest {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Fraction of trees voting for each label.
    pub fn predict_dist(&self, input: &MixedVector) -> Result<Vec<f64>, ClassifyError> {
        self.shape.check(input)?;
        let nominal: Vec<u32> = input
            .nominal
            .iter()
            .zip(&self.vocab)
            .map(|(v, vocab)| vocab.binary_search(v).map_or(UNSEEN, |i| i as u32))
            .collect();
        let mut votes = vec![0usize; self.labels.len()];
        for tree in &self.trees {
            votes[tree.predict(&input.numeric, &nominal) as usize] += 1;
        }
        let total = self.trees.len() as f64;
        Ok(votes.into_iter().map(|v| v as f64 / total).collect())
    }
}
