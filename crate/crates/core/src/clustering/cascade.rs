use super::{
    center_of, check_points, distinct_indices, kmeans_fit_traced, mixed_distance, ClusterError,
    ClusterModel, ClustererKind, KMeansRun,
};
use crate::features::MixedVector;
use crate::seed;

/// Calinski–Harabasz variance ratio of `model`'s partition of `points`,
/// measured in the model's scaled space:
/// `(B / (k - 1)) / (W / (n - k))`, with `B` the size-weighted dispersion of
/// centroids around the global center and `W` the within-cluster dispersion.
///
/// `None` when `k < 2`, or when `n <= k` and `W > 0`; infinity when `W = 0`.
pub fn calinski_harabasz(points: &[MixedVector], model: &ClusterModel) -> Option<f64> {
    let (n, k) = (points.len(), model.k());
    if k < 2 {
        return None;
    }
    let scaled: Vec<MixedVector> = points.iter().map(|p| model.scaling.scale_point(p)).collect();
    let arity = scaled[0].arity();
    let global = center_of(&scaled, arity);
    let mut sizes = vec![0usize; k];
    let mut within = 0.0;
    for p in &scaled {
        let (c, d) = super::nearest(p, model.scaled_centroids());
        sizes[c] += 1;
        within += d;
    }
    let between: f64 = model
        .scaled_centroids()
        .iter()
        .zip(&sizes)
        .map(|(c, &s)| s as f64 * mixed_distance(c, &global))
        .sum();
    if within <= 0.0 {
        return Some(f64::INFINITY);
    }
    if n <= k {
        return None;
    }
    Some((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// Runs k-means for every `k` in `[k_min, min(k_max, distinct points)]`
/// (`restarts` seeded runs each, lowest cost kept) and returns the run with the
/// highest Calinski–Harabasz index; ties go to the smaller `k`. A perfect
/// partition (zero within-cluster dispersion) scores infinity. When no `k >= 2`
/// is available a single cluster is returned.
pub fn cascade_kmeans_fit(
    points: &[MixedVector],
    k_min: usize,
    k_max: usize,
    seed: u64,
    max_iter: usize,
    restarts: usize,
) -> Result<ClusterModel, ClusterError> {
    check_points(points)?;
    if k_min == 0 || k_min > k_max {
        return Err(ClusterError::InvalidParameter(format!("need 1 <= k_min <= k_max, got {k_min}..{k_max}")));
    }
    let upper = k_max.min(distinct_indices(points).len());
    let mut best: Option<(f64, ClusterModel)> = None;
    for k in k_min.max(2)..=upper {
        let run = best_of_restarts(points, k, seed, max_iter, restarts.max(1))?;
        let Some(score) = calinski_harabasz(points, &run.model) else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, run.model));
        }
    }
    let mut model = match best {
        Some((_, model)) => model,
        None => kmeans_fit_traced(points, 1, seed::derive_indexed(seed, "k", 1), max_iter)?.model,
    };
    model.algorithm = ClustererKind::CascadeKMeans;
    Ok(model)
}

fn best_of_restarts(
    points: &[MixedVector],
    k: usize,
    seed: u64,
    max_iter: usize,
    restarts: usize,
) -> Result<KMeansRun, ClusterError> {
    let mut best: Option<KMeansRun> = None;
    for r in 0..restarts {
        let sub = seed::derive(seed, &["k", &k.to_string(), "restart", &r.to_string()]);
        let run = kmeans_fit_traced(points, k, sub, max_iter)?;
        if best.as_ref().is_none_or(|b| run.final_cost() < b.final_cost()) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}
