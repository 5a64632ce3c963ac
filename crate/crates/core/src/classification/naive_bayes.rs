use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{prepare, ClassifyError, InputShape, LabeledRow};
use crate::features::MixedVector;

const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian likelihoods on numeric slots, Laplace-smoothed categorical
/// likelihoods on nominal slots. Each nominal slot reserves one extra bucket for
/// symbols never seen in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub(super) labels: Vec<String>,
    shape: InputShape,
    alpha: f64,
    log_prior: Vec<f64>,
    class_counts: Vec<usize>,
    /// `[class][slot]`
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    /// `[slot]` sorted observed symbols
    vocab: Vec<Vec<String>>,
    /// `[class][slot][symbol index]`
    symbol_counts: Vec<Vec<Vec<usize>>>,
}

pub fn nb_fit(rows: &[LabeledRow], laplace_alpha: f64) -> Result<NaiveBayes, ClassifyError> {
    if !(laplace_alpha > 0.0 && laplace_alpha.is_finite()) {
        return Err(ClassifyError::InvalidParameter(format!("laplace_alpha must be > 0, got {laplace_alpha}")));
    }
    let (shape, labels) = prepare(rows)?;
    let class_of: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let n_classes = labels.len();

    let mut vocab_sets: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); shape.nominal];
    for row in rows {
        for (set, v) in vocab_sets.iter_mut().zip(&row.input.nominal) {
            set.insert(v.as_str(), 0);
        }
    }
    for set in &mut vocab_sets {
        for (i, slot) in set.values_mut().enumerate() {
            *slot = i;
        }
    }

    let mut class_counts = vec![0usize; n_classes];
    let mut sums = vec![vec![0.0; shape.numeric]; n_classes];
    let mut symbol_counts: Vec<Vec<Vec<usize>>> = (0..n_classes)
        .map(|_| vocab_sets.iter().map(|s| vec![0; s.len()]).collect())
        .collect();
    for row in rows {
        let c = class_of[row.label.as_str()];
        class_counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(&row.input.numeric) {
            *s += x;
        }
        for (j, v) in row.input.nominal.iter().enumerate() {
            symbol_counts[c][j][vocab_sets[j][v.as_str()]] += 1;
        }
    }
    let means: Vec<Vec<f64>> = sums
        .iter()
        .zip(&class_counts)
        .map(|(s, &n)| s.iter().map(|x| x / n as f64).collect())
        .collect();
    let mut sq = vec![vec![0.0; shape.numeric]; n_classes];
    for row in rows {
        let c = class_of[row.label.as_str()];
        for ((acc, x), m) in sq[c].iter_mut().zip(&row.input.numeric).zip(&means[c]) {
            *acc += (x - m) * (x - m);
        }
    }
    let variances = sq
        .iter()
        .zip(&class_counts)
        .map(|(s, &n)| s.iter().map(|x| (x / n as f64).max(VARIANCE_FLOOR)).collect())
        .collect();

    let n = rows.len() as f64;
    let log_prior = class_counts
        .iter()
        .map(|&c| ((c as f64 + laplace_alpha) / (n + laplace_alpha * n_classes as f64)).ln())
        .collect();
    let vocab = vocab_sets.iter().map(|s| s.keys().map(|k| k.to_string()).collect()).collect();
    Ok(NaiveBayes { labels, shape, alpha: laplace_alpha, log_prior, class_counts, means, variances, vocab, symbol_counts })
}

impl NaiveBayes {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Unnormalized log posterior per class.
    pub fn log_scores(&self, input: &MixedVector) -> Result<Vec<f64>, ClassifyError> {
        self.shape.check(input)?;
        let symbol_ids: Vec<Option<usize>> = input
            .nominal
            .iter()
            .zip(&self.vocab)
            .map(|(v, vocab)| vocab.binary_search(v).ok())
            .collect();
        Ok((0..self.labels.len())
            .map(|c| {
                let mut score = self.log_prior[c];
                for ((x, m), var) in input.numeric.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                    score += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - m) * (x - m) / (2.0 * var);
                }
                let n_c = self.class_counts[c] as f64;
                for (j, id) in symbol_ids.iter().enumerate() {
                    let count = id.map_or(0, |i| self.symbol_counts[c][j][i]) as f64;
                    let buckets = (self.vocab[j].len() + 1) as f64;
                    score += ((count + self.alpha) / (n_c + self.alpha * buckets)).ln();
                }
                score
            })
            .collect())
    }

    pub fn predict_dist(&self, input: &MixedVector) -> Result<Vec<f64>, ClassifyError> {
        Ok(softmax(&self.log_scores(input)?))
    }
}

/// Normalizes log scores into probabilities.
pub(super) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return vec![1.0 / scores.len() as f64; scores.len()];
    }
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
