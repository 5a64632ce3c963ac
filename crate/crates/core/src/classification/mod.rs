//! Per-node classifiers mapping a mixed input vector to a composite
//! `(destination, cluster)` label.

mod naive_bayes;
mod random_forest;

pub use naive_bayes::{nb_fit, NaiveBayes};
pub use random_forest::{rf_fit, RandomForest, RfParams};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::MixedVector;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("no training rows")]
    NoRows,
    #[error("input arity ({got_numeric} numeric, {got_nominal} nominal) does not match training ({numeric} numeric, {nominal} nominal)")]
    ArityMismatch { numeric: usize, nominal: usize, got_numeric: usize, got_nominal: usize },
    #[error("invalid classifier parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub input: MixedVector,
    pub label: String,
}

impl LabeledRow {
    pub fn new(input: MixedVector, label: impl Into<String>) -> Self {
        LabeledRow { input, label: label.into() }
    }
}

/// Numeric and nominal input widths a classifier was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputShape {
    pub numeric: usize,
    pub nominal: usize,
}

impl InputShape {
    fn of(v: &MixedVector) -> Self {
        InputShape { numeric: v.numeric.len(), nominal: v.nominal.len() }
    }

    fn check(&self, v: &MixedVector) -> Result<(), ClassifyError> {
        if InputShape::of(v) == *self {
            Ok(())
        } else {
            Err(ClassifyError::ArityMismatch {
                numeric: self.numeric,
                nominal: self.nominal,
                got_numeric: v.numeric.len(),
                got_nominal: v.nominal.len(),
            })
        }
    }
}

/// Validates rows and returns their common shape and sorted label set.
fn prepare(rows: &[LabeledRow]) -> Result<(InputShape, Vec<String>), ClassifyError> {
    let first = rows.first().ok_or(ClassifyError::NoRows)?;
    let shape = InputShape::of(&first.input);
    for row in rows {
        shape.check(&row.input)?;
        if row.input.numeric.iter().any(|x| !x.is_finite()) {
            return Err(ClassifyError::InvalidParameter("non-finite numeric input".into()));
        }
    }
    let labels: BTreeSet<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    Ok((shape, labels.into_iter().map(str::to_string).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierConfig {
    NaiveBayes {
        #[serde(default = "default_alpha")]
        laplace_alpha: f64,
    },
    RandomForest {
        #[serde(default = "default_trees")]
        n_trees: usize,
        #[serde(default)]
        max_depth: Option<usize>,
        /// Defaults to `floor(sqrt(d))` over all input slots.
        #[serde(default)]
        features_per_split: Option<usize>,
    },
}

fn default_alpha() -> f64 {
    1.0
}
fn default_trees() -> usize {
    100
}

impl ClassifierConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierConfig::NaiveBayes { .. } => "naive_bayes",
            ClassifierConfig::RandomForest { .. } => "random_forest",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ClassifierConfig::NaiveBayes { laplace_alpha } => format!("naive_bayes(alpha={laplace_alpha})"),
            ClassifierConfig::RandomForest { n_trees, .. } => format!("random_forest(trees={n_trees})"),
        }
    }

    pub fn fit(&self, rows: &[LabeledRow], seed: u64) -> Result<Classifier, ClassifyError> {
        match *self {
            ClassifierConfig::NaiveBayes { laplace_alpha } => nb_fit(rows, laplace_alpha).map(Classifier::NaiveBayes),
            ClassifierConfig::RandomForest { n_trees, max_depth, features_per_split } => {
                let params = RfParams { n_trees, seed, max_depth, features_per_split };
                rf_fit(rows, &params).map(Classifier::RandomForest)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    NaiveBayes(NaiveBayes),
    RandomForest(RandomForest),
}

impl Classifier {
    /// Sorted label set; `predict_dist` entries align with it.
    pub fn labels(&self) -> &[String] {
        match self {
            Classifier::NaiveBayes(m) => &m.labels,
            Classifier::RandomForest(m) => &m.labels,
        }
    }

    pub fn predict_dist(&self, input: &MixedVector) -> Result<Vec<f64>, ClassifyError> {
        match self {
            Classifier::NaiveBayes(m) => m.predict_dist(input),
            Classifier::RandomForest(m) => m.predict_dist(input),
        }
    }

    /// Most probable label; ties go to the lexicographically smallest.
    pub fn predict(&self, input: &MixedVector) -> Result<&str, ClassifyError> {
        let dist = self.predict_dist(input)?;
        Ok(&self.labels()[argmax(&dist)])
    }
}

/// First index of the maximum. With sorted labels this breaks ties towards the
/// lexicographically smallest label.
pub fn argmax(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p > dist[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_take_first() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.3, 0.5]), 2);
        assert_eq!(argmax(&[1.0]), 0);
    }

    #[test]
    fn arity_is_checked() {
        let rows = vec![LabeledRow::new(MixedVector::new(vec![1.0], vec!["a".into()]), "L")];
        for config in [
            ClassifierConfig::NaiveBayes { laplace_alpha: 1.0 },
            ClassifierConfig::RandomForest { n_trees: 3, max_depth: None, features_per_split: None },
        ] {
            let c = config.fit(&rows, 0).unwrap();
            let err = c.predict_dist(&MixedVector::new(vec![], vec!["a".into()])).unwrap_err();
            assert!(matches!(err, ClassifyError::ArityMismatch { .. }));
            assert_eq!(config.fit(&[], 0).unwrap_err(), ClassifyError::NoRows);
        }
    }

    #[test]
    fn single_label_is_degenerate() {
        let rows: Vec<LabeledRow> = (0..5)
            .map(|i| LabeledRow::new(MixedVector::new(vec![i as f64], vec!["x".into()]), "only"))
            .collect();
        for config in [
            ClassifierConfig::NaiveBayes { laplace_alpha: 1.0 },
            ClassifierConfig::RandomForest { n_trees: 10, max_depth: None, features_per_split: None },
        ] {
            let c = config.fit(&rows, 1).unwrap();
            let probe = MixedVector::new(vec![99.0], vec!["unseen".into()]);
            assert_eq!(c.predict_dist(&probe).unwrap(), [1.0]);
            assert_eq!(c.predict(&probe).unwrap(), "only");
        }
    }
}
