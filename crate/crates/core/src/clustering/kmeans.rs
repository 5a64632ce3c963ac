use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    center_of, check_points, distinct_indices, mixed_distance, nearest, ClusterError, ClusterModel,
    ClustererKind, Scaling,
};
use crate::features::MixedVector;

/// Result of a traced k-means run.
#[derive(Debug, Clone)]
pub struct KMeansRun {
    pub model: ClusterModel,
    /// Total within-cluster scaled distance after the initial assignment and
    /// after every Lloyd iteration.
    pub cost_trace: Vec<f64>,
    /// Final assignment of each input point.
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

impl KMeansRun {
    pub fn final_cost(&self) -> f64 {
        *self.cost_trace.last().expect("at least one entry")
    }
}

pub fn kmeans_fit(points: &[MixedVector], k: usize, seed: u64, max_iter: usize) -> Result<ClusterModel, ClusterError> {
    kmeans_fit_traced(points, k, seed, max_iter).map(|run| run.model)
}

/// Lloyd's algorithm under the mixed distance. Seeding picks distinct points
/// with probability proportional to their distance from the already chosen
/// seeds, so `k` collapses to the number of distinct points when that is
/// smaller. Clusters that empty out are dropped.
pub fn kmeans_fit_traced(
    points: &[MixedVector],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<KMeansRun, ClusterError> {
    let arity = check_points(points)?;
    if k == 0 {
        return Err(ClusterError::InvalidParameter("k must be at least 1".into()));
    }
    let scaling = Scaling::fit(points);
    let scaled: Vec<MixedVector> = points.iter().map(|p| scaling.scale_point(p)).collect();
    let mut centroids = seed_centroids(&scaled, k, seed);

    let assign_all = |centroids: &[MixedVector]| -> (Vec<usize>, f64) {
        let mut cost = 0.0;
        let assignments = scaled
            .iter()
            .map(|p| {
                let (i, d) = nearest(p, centroids);
                cost += d;
                i
            })
            .collect();
        (assignments, cost)
    };

    let (mut assignments, cost) = assign_all(&centroids);
    let mut cost_trace = vec![cost];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (updated, remapped) = update(&scaled, &assignments, centroids.len(), arity);
        centroids = updated;
        let (next, cost) = assign_all(&centroids);
        cost_trace.push(cost);
        let stable = next == remapped;
        assignments = next;
        if stable {
            break;
        }
    }
    // centroids must be the centers of the reported assignment
    let (centroids, assignments) = update(&scaled, &assignments, centroids.len(), arity);
    let model = ClusterModel::from_scaled(ClustererKind::KMeans, scaling, centroids);
    let assignments = if model.k() == assignments.iter().max().map_or(0, |m| m + 1) {
        assignments
    } else {
        scaled.iter().map(|p| nearest(p, model.scaled_centroids()).0).collect()
    };
    Ok(KMeansRun { model, cost_trace, assignments, iterations })
}

/// k-means++ style seeding over distinct points.
fn seed_centroids(scaled: &[MixedVector], k: usize, seed: u64) -> Vec<MixedVector> {
    let distinct: Vec<&MixedVector> = distinct_indices(scaled).into_iter().map(|i| &scaled[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![distinct[rng.random_range(0..distinct.len())].clone()];
    let mut gaps: Vec<f64> = distinct.iter().map(|p| mixed_distance(p, &chosen[0])).collect();
    while chosen.len() < k {
        let total: f64 = gaps.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random_range(0.0..total);
        let mut pick = gaps.iter().rposition(|&g| g > 0.0).expect("positive total");
        for (i, &g) in gaps.iter().enumerate() {
            if g > 0.0 && target < g {
                pick = i;
                break;
            }
            target -= g;
        }
        let c = distinct[pick].clone();
        for (gap, p) in gaps.iter_mut().zip(&distinct) {
            *gap = gap.min(mixed_distance(p, &c));
        }
        chosen.push(c);
    }
    chosen
}

/// Recomputes centers, dropping empty clusters. Returns the new centers and the
/// assignment re-indexed onto them.
fn update(
    scaled: &[MixedVector],
    assignments: &[usize],
    k: usize,
    arity: (usize, usize),
) -> (Vec<MixedVector>, Vec<usize>) {
    let mut members: Vec<Vec<&MixedVector>> = vec![Vec::new(); k];
    for (p, &a) in scaled.iter().zip(assignments) {
        members[a].push(p);
    }
    let mut remap = vec![usize::MAX; k];
    let mut centers = Vec::with_capacity(k);
    for (old, m) in members.iter().enumerate() {
        if !m.is_empty() {
            remap[old] = centers.len();
            centers.push(center_of(m.iter().copied(), arity));
        }
    }
    (centers, assignments.iter().map(|&a| remap[a]).collect())
}
