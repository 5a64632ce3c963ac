use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_points, mixed_distance, ClusterError, ClusterModel, ClustererKind, Scaling};
use crate::features::MixedVector;

/// Canopy clustering: visit points in seeded random order; every point still
/// eligible becomes a canopy center and removes all points within `t2` of it
/// from eligibility. Centers become the centroids. Distances are scaled mixed
/// distances.
///
/// `t1` (the loose threshold) only affects canopy membership, which nothing
/// downstream consumes, so it is validated but otherwise unused.
pub fn canopy_fit(points: &[MixedVector], t1: f64, t2: f64, seed: u64) -> Result<ClusterModel, ClusterError> {
    check_points(points)?;
    if !(t1 >= t2 && t2 >= 0.0) {
        return Err(ClusterError::InvalidParameter(format!("need t1 >= t2 >= 0, got t1={t1}, t2={t2}")));
    }
    let scaling = Scaling::fit(points);
    let scaled: Vec<MixedVector> = points.iter().map(|p| scaling.scale_point(p)).collect();
    let mut order: Vec<usize> = (0..scaled.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut eligible = vec![true; scaled.len()];
    let mut remaining: Vec<usize> = order.clone();
    let mut centers = Vec::new();
    for &i in &order {
        if !eligible[i] {
            continue;
        }
        eligible[i] = false;
        let center = &scaled[i];
        remaining.retain(|&j| {
            if eligible[j] && mixed_distance(center, &scaled[j]) <= t2 {
                eligible[j] = false;
            }
            eligible[j]
        });
        centers.push(center.clone());
    }
    Ok(ClusterModel::from_scaled(ClustererKind::Canopy, scaling, centers))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_single_canopy() {
        let m = canopy_fit(&[MixedVector::new(vec![3.0], vec!["a".into()])], 0.5, 0.25, 1).unwrap();
        assert_eq!(m.k(), 1);
        assert_eq!(m.centroid(0).unwrap().numeric, [3.0]);
    }

    #[test]
    fn far_points_get_own_canopies() {
        let pts: Vec<MixedVector> = [0.0, 0.01, 1.0].iter().map(|&x| MixedVector::new(vec![x], vec![])).collect();
        let m = canopy_fit(&pts, 0.5, 0.25, 4).unwrap();
        assert_eq!(m.k(), 2);
    }

    #[test]
    fn thresholds_validated() {
        let pts = [MixedVector::new(vec![0.0], vec![])];
        assert!(matches!(canopy_fit(&pts, 0.1, 0.2, 0), Err(ClusterError::InvalidParameter(_))));
        assert_eq!(canopy_fit(&[], 0.5, 0.25, 0).unwrap_err(), ClusterError::NoPoints);
    }
}
