//! Event, duration and feature error between real and predicted suffixes.
//!
//! Each measure walks the common prefix of both streams step by step and then
//! charges the unmatched tail of whichever stream is longer. END never takes
//! part: streams are built without it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_log::{Case, FeatureSchema, END};
use crate::features::{extract_transitions, MixedVector, UNCHANGED};
use crate::network::PredictedSuffix;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MeasureError {
    #[error("feature vectors disagree in shape: real {real:?}, predicted {predicted:?}")]
    ArityMismatch { real: (usize, usize), predicted: (usize, usize) },
}

/// Per-step labels, durations (seconds) and features of one suffix.
///
/// `durations` and `features` are either aligned with `labels` or both empty
/// for label-only predictions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SuffixStream {
    pub labels: Vec<String>,
    pub durations: Vec<f64>,
    pub features: Vec<MixedVector>,
}

impl SuffixStream {
    pub fn new(labels: Vec<String>, durations: Vec<f64>, features: Vec<MixedVector>) -> Self {
        SuffixStream { labels, durations, features }
    }

    /// Labels only, END dropped.
    pub fn labels_only(labels: impl IntoIterator<Item = String>) -> Self {
        SuffixStream { labels: labels.into_iter().filter(|l| l != END).collect(), ..Default::default() }
    }

    /// The real continuation of an augmented `case` after its first
    /// `prefix_len` records, taken from the transitions into each event.
    pub fn real(case: &Case, prefix_len: usize, schema: &FeatureSchema) -> Self {
        let mut out = SuffixStream::default();
        for t in extract_transitions(case, schema).into_iter().skip(prefix_len.saturating_sub(1)) {
            if t.dest == END {
                continue;
            }
            out.labels.push(t.dest);
            out.durations.push(t.duration);
            out.features.push(MixedVector::new(t.numeric, t.nominal));
        }
        out
    }

    pub fn predicted(suffix: &PredictedSuffix) -> Self {
        let mut out = SuffixStream::default();
        for ((label, d), f) in suffix.events.iter().zip(&suffix.durations).zip(&suffix.features) {
            if label == END {
                continue;
            }
            out.labels.push(label.clone());
            out.durations.push(*d);
            out.features.push(f.clone());
        }
        out
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SuffixPair {
    pub real: SuffixStream,
    pub predicted: SuffixStream,
}

impl SuffixPair {
    pub fn new(real: SuffixStream, predicted: SuffixStream) -> Self {
        SuffixPair { real, predicted }
    }
}

/// 1 when the predicted sequence is the longer one, else 0. With equal
/// lengths the tails are empty and the value does not matter.
pub fn bpl(real_len: usize, pred_len: usize) -> u8 {
    u8::from(pred_len > real_len)
}

/// Common-prefix length and the tail of the longer of two slices.
fn split<'a, T>(real: &'a [T], pred: &'a [T]) -> (usize, &'a [T]) {
    let common = real.len().min(pred.len());
    let tail = if bpl(real.len(), pred.len()) == 1 { &pred[common..] } else { &real[common..] };
    (common, tail)
}

pub fn pair_event_error(pair: &SuffixPair) -> u64 {
    let (r, p) = (&pair.real.labels, &pair.predicted.labels);
    let (common, tail) = split(r, p);
    let mismatches = r[..common].iter().zip(&p[..common]).filter(|(a, b)| a != b).count();
    (mismatches + tail.len()) as u64
}

pub fn pair_duration_error(pair: &SuffixPair) -> f64 {
    let (r, p) = (&pair.real.durations, &pair.predicted.durations);
    let (common, tail) = split(r, p);
    let overlap: f64 = r[..common].iter().zip(&p[..common]).map(|(a, b)| (a - b).abs()).sum();
    overlap + tail.iter().map(|d| d.abs()).sum::<f64>()
}

fn step_difference(real: &MixedVector, pred: &MixedVector) -> Result<f64, MeasureError> {
    if real.arity() != pred.arity() {
        return Err(MeasureError::ArityMismatch { real: real.arity(), predicted: pred.arity() });
    }
    let numeric: f64 = real.numeric.iter().zip(&pred.numeric).map(|(a, b)| (a - b).abs()).sum();
    let nominal = real.nominal.iter().zip(&pred.nominal).filter(|(a, b)| a != b).count();
    Ok(numeric + nominal as f64)
}

fn step_magnitude(v: &MixedVector) -> f64 {
    v.numeric.iter().map(|x| x.abs()).sum::<f64>() + v.nominal.iter().filter(|s| *s != UNCHANGED).count() as f64
}

pub fn pair_feature_error(pair: &SuffixPair) -> Result<f64, MeasureError> {
    let (r, p) = (&pair.real.features, &pair.predicted.features);
    let (common, tail) = split(r, p);
    let mut total = 0.0;
    for (a, b) in r[..common].iter().zip(&p[..common]) {
        total += step_difference(a, b)?;
    }
    Ok(total + tail.iter().map(step_magnitude).sum::<f64>())
}

/// Mismatched labels over the overlap plus the length difference, summed over
/// cases.
pub fn event_error(pairs: &[SuffixPair]) -> u64 {
    pairs.iter().map(pair_event_error).sum()
}

/// Absolute duration differences over the overlap plus the longer stream's
/// tail, summed over cases. Seconds.
pub fn duration_error(pairs: &[SuffixPair]) -> f64 {
    pairs.iter().map(pair_duration_error).sum()
}

/// Per-step numeric absolute differences plus nominal mismatches over the
/// overlap, plus the longer stream's tail magnitude, summed over cases.
pub fn feature_error(pairs: &[SuffixPair]) -> Result<f64, MeasureError> {
    pairs.iter().map(pair_feature_error).sum()
}
