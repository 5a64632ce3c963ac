//! Per-link clustering of transition points.
//!
//! All algorithms work on min-max scaled copies of the points and share one
//! mixed distance: squared Euclidean over the scaled numeric slots plus one per
//! differing nominal slot. Fitted models keep centroids in original units for
//! accumulation and in scaled units for assignment.

mod canopy;
mod cascade;
mod kmeans;

pub use canopy::canopy_fit;
pub use cascade::{calinski_harabasz, cascade_kmeans_fit};
pub use kmeans::{kmeans_fit, kmeans_fit_traced, KMeansRun};

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::MixedVector;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("no points to cluster")]
    NoPoints,
    #[error("cluster id {id} out of range for {k} clusters")]
    BadClusterId { id: usize, k: usize },
    #[error("points disagree in arity")]
    ArityMismatch,
    #[error("invalid clustering parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClustererKind {
    KMeans,
    CascadeKMeans,
    Canopy,
}

impl ClustererKind {
    pub fn name(self) -> &'static str {
        match self {
            ClustererKind::KMeans => "kmeans",
            ClustererKind::CascadeKMeans => "cascade_kmeans",
            ClustererKind::Canopy => "canopy",
        }
    }
}

/// Clusterer choice plus hyperparameters, as read from a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClustererConfig {
    #[serde(rename = "kmeans")]
    KMeans {
        k: usize,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    #[serde(rename = "cascade_kmeans")]
    CascadeKMeans {
        #[serde(default = "default_k_min")]
        k_min: usize,
        k_max: usize,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        #[serde(default = "default_restarts")]
        restarts: usize,
    },
    Canopy {
        #[serde(default = "default_t1")]
        t1: f64,
        #[serde(default = "default_t2")]
        t2: f64,
    },
}

fn default_max_iter() -> usize {
    100
}
fn default_k_min() -> usize {
    2
}
fn default_restarts() -> usize {
    10
}
fn default_t1() -> f64 {
    0.5
}
fn default_t2() -> f64 {
    0.25
}

impl ClustererConfig {
    pub fn kind(&self) -> ClustererKind {
        match self {
            ClustererConfig::KMeans { .. } => ClustererKind::KMeans,
            ClustererConfig::CascadeKMeans { .. } => ClustererKind::CascadeKMeans,
            ClustererConfig::Canopy { .. } => ClustererKind::Canopy,
        }
    }

    /// Short human-readable description, e.g. `kmeans(k=50)`.
    pub fn describe(&self) -> String {
        match self {
            ClustererConfig::KMeans { k, .. } => format!("kmeans(k={k})"),
            ClustererConfig::CascadeKMeans { k_min, k_max, .. } => format!("cascade_kmeans(k={k_min}..{k_max})"),
            ClustererConfig::Canopy { t1, t2 } => format!("canopy(t1={t1},t2={t2})"),
        }
    }

    pub fn fit(&self, points: &[MixedVector], seed: u64) -> Result<ClusterModel, ClusterError> {
        match *self {
            ClustererConfig::KMeans { k, max_iter } => kmeans_fit(points, k, seed, max_iter),
            ClustererConfig::CascadeKMeans { k_min, k_max, max_iter, restarts } => {
                cascade_kmeans_fit(points, k_min, k_max, seed, max_iter, restarts)
            }
            ClustererConfig::Canopy { t1, t2 } => canopy_fit(points, t1, t2, seed),
        }
    }
}

/// Per-dimension min-max scaling fitted on one set of points. Constant
/// dimensions map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaling {
    pub fn fit(points: &[MixedVector]) -> Scaling {
        let dims = points.first().map_or(0, |p| p.numeric.len());
        let mut min = vec![f64::INFINITY; dims];
        let mut max = vec![f64::NEG_INFINITY; dims];
        for p in points {
            for (j, &x) in p.numeric.iter().enumerate() {
                min[j] = min[j].min(x);
                max[j] = max[j].max(x);
            }
        }
        Scaling { min, max }
    }

    pub fn scale(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    pub fn unscale(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&s, (&lo, &hi))| if hi > lo { lo + s * (hi - lo) } else { lo })
            .collect()
    }

    pub fn scale_point(&self, point: &MixedVector) -> MixedVector {
        MixedVector { numeric: self.scale(&point.numeric), nominal: point.nominal.clone() }
    }

    pub fn unscale_point(&self, point: &MixedVector) -> MixedVector {
        MixedVector { numeric: self.unscale(&point.numeric), nominal: point.nominal.clone() }
    }
}

/// Squared Euclidean distance over numeric slots plus the count of differing
/// nominal slots. Callers pass already-scaled vectors.
pub fn mixed_distance(a: &MixedVector, b: &MixedVector) -> f64 {
    let numeric: f64 = a.numeric.iter().zip(&b.numeric).map(|(x, y)| (x - y) * (x - y)).sum();
    let nominal = a.nominal.iter().zip(&b.nominal).filter(|(x, y)| x != y).count();
    numeric + nominal as f64
}

/// Index of the nearest candidate; ties go to the lowest index.
pub(crate) fn nearest(point: &MixedVector, candidates: &[MixedVector]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in candidates.iter().enumerate() {
        let d = mixed_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Numeric mean and per-slot nominal mode (ties to the lexicographically
/// smallest symbol) of a non-empty set of points.
pub(crate) fn center_of<'a, I>(members: I, arity: (usize, usize)) -> MixedVector
where
    I: IntoIterator<Item = &'a MixedVector>,
{
    let (n_num, n_nom) = arity;
    let mut sums = vec![0.0; n_num];
    let mut counts: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); n_nom];
    let mut n = 0usize;
    for p in members {
        n += 1;
        for (s, x) in sums.iter_mut().zip(&p.numeric) {
            *s += x;
        }
        for (c, v) in counts.iter_mut().zip(&p.nominal) {
            *c.entry(v.as_str()).or_default() += 1;
        }
    }
    debug_assert!(n > 0);
    let numeric = sums.into_iter().map(|s| s / n as f64).collect();
    let nominal = counts
        .into_iter()
        .map(|c| {
            // BTreeMap iterates in lexicographic order; keep the first maximum
            let mut best: Option<(&str, usize)> = None;
            for (v, k) in c {
                if best.is_none_or(|(_, bk)| k > bk) {
                    best = Some((v, k));
                }
            }
            best.map_or_else(String::new, |(v, _)| v.to_string())
        })
        .collect();
    MixedVector { numeric, nominal }
}

/// Distinct points in first-appearance order (bitwise comparison on numerics).
pub(crate) fn distinct_indices(points: &[MixedVector]) -> Vec<usize> {
    let mut seen = HashSet::new();
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            let key: (Vec<u64>, &[String]) = (p.numeric.iter().map(|x| x.to_bits()).collect(), &p.nominal);
            seen.insert(key)
        })
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn check_points(points: &[MixedVector]) -> Result<(usize, usize), ClusterError> {
    let first = points.first().ok_or(ClusterError::NoPoints)?;
    let arity = first.arity();
    if points.iter().any(|p| p.arity() != arity) {
        return Err(ClusterError::ArityMismatch);
    }
    if points.iter().any(|p| p.numeric.iter().any(|x| !x.is_finite())) {
        return Err(ClusterError::InvalidParameter("non-finite coordinate".into()));
    }
    Ok(arity)
}

/// A fitted clustering of one link's transition points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub algorithm: ClustererKind,
    pub scaling: Scaling,
    /// Centroids in original units; index = cluster id.
    centroids: Vec<MixedVector>,
    /// The same centroids in scaled units.
    scaled_centroids: Vec<MixedVector>,
}

impl ClusterModel {
    /// Builds a model from scaled centroids, dropping exact duplicates so that
    /// every centroid is assigned to itself.
    pub(crate) fn from_scaled(algorithm: ClustererKind, scaling: Scaling, scaled: Vec<MixedVector>) -> Self {
        let keep = distinct_indices(&scaled);
        let scaled_centroids: Vec<MixedVector> = keep.into_iter().map(|i| scaled[i].clone()).collect();
        let centroids = scaled_centroids.iter().map(|c| scaling.unscale_point(c)).collect();
        ClusterModel { algorithm, scaling, centroids, scaled_centroids }
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn centroids(&self) -> &[MixedVector] {
        &self.centroids
    }

    pub fn scaled_centroids(&self) -> &[MixedVector] {
        &self.scaled_centroids
    }

    /// Nearest centroid under the model's scaled mixed distance; ties go to the
    /// lowest id.
    pub fn assign(&self, point: &MixedVector) -> usize {
        debug_assert_eq!(point.arity(), self.centroids[0].arity());
        nearest(&self.scaling.scale_point(point), &self.scaled_centroids).0
    }

    /// Stored centroid in original units.
    pub fn centroid(&self, id: usize) -> Result<&MixedVector, ClusterError> {
        self.centroids.get(id).ok_or(ClusterError::BadClusterId { id, k: self.k() })
    }

    /// Mixed distance between two points in original units, measured in this
    /// model's scaled space.
    pub fn distance(&self, a: &MixedVector, b: &MixedVector) -> f64 {
        mixed_distance(&self.scaling.scale_point(a), &self.scaling.scale_point(b))
    }
}
