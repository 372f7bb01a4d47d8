//! Weighted Lloyd k-means with k-means++ seeding. Shared by the color
//! quantizer (3-d) and the descriptor codebook (128-d).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub(crate) struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once no center moves farther than this (Euclidean).
    pub tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct KMeansResult {
    /// `k * dim` row-major.
    pub centers: Vec<f64>,
    pub assignment: Vec<usize>,
    /// Weighted within-cluster sum of squares after each assignment step.
    pub objective: Vec<f64>,
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the lowest index.
pub(crate) fn nearest(point: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// `points` is `n * dim` row-major, `weights` has length `n` and must be
/// positive. Requires `n >= 1` and `k >= 1`.
pub(crate) fn kmeans(points: &[f64], weights: &[f64], dim: usize, cfg: &KMeansConfig) -> KMeansResult {
    let n = weights.len();
    debug_assert_eq!(points.len(), n * dim);
    debug_assert!(n >= 1 && cfg.k >= 1);
    let point = |i: usize| &points[i * dim..(i + 1) * dim];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centers = Vec::with_capacity(cfg.k * dim);
    let total_w: f64 = weights.iter().sum();
    let first = sample_index(&mut rng, weights, total_w);
    centers.extend_from_slice(point(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(point(i), point(first))).collect();
    while centers.len() < cfg.k * dim {
        let scores: Vec<f64> = d2.iter().zip(weights).map(|(d, w)| d * w).collect();
        let total: f64 = scores.iter().sum();
        let next = if total > 0.0 {
            sample_index(&mut rng, &scores, total)
        } else {
            // Fewer distinct points than centers.
            0
        };
        let c = point(next).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(point(i), &c));
        }
        centers.extend_from_slice(&c);
    }

    let mut assignment = vec![0usize; n];
    let mut objective = Vec::new();
    for _ in 0..cfg.max_iter.max(1) {
        let mut cost = 0.0;
        for (i, a) in assignment.iter_mut().enumerate() {
            let (idx, d) = nearest(point(i), &centers, dim);
            *a = idx;
            cost += weights[i] * d;
        }
        objective.push(cost);

        let mut sums = vec![0.0; cfg.k * dim];
        let mut mass = vec![0.0; cfg.k];
        for (i, &a) in assignment.iter().enumerate() {
            mass[a] += weights[i];
            for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(point(i)) {
                *s += weights[i] * v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..cfg.k {
            if mass[c] == 0.0 {
                continue;
            }
            let updated: Vec<f64> = sums[c * dim..(c + 1) * dim].iter().map(|s| s / mass[c]).collect();
            let old = &mut centers[c * dim..(c + 1) * dim];
            shift = shift.max(sq_dist(old, &updated).sqrt());
            old.copy_from_slice(&updated);
        }
        if shift < cfg.tol {
            break;
        }
    }
    // Final assignment against the final centers.
    let mut cost = 0.0;
    for (i, a) in assignment.iter_mut().enumerate() {
        let (idx, d) = nearest(point(i), &centers, dim);
        *a = idx;
        cost += weights[i] * d;
    }
    objective.push(cost);

    KMeansResult {
        centers,
        assignment,
        objective,
    }
}

fn sample_index(rng: &mut ChaCha8Rng, scores: &[f64], total: f64) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s <= 0.0 {
            continue;
        }
        acc += s;
        last_positive = i;
        if target < acc {
            return i;
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: usize, seed: u64) -> KMeansConfig {
        KMeansConfig {
            k,
            max_iter: 100,
            tol: 1e-9,
            seed,
        }
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<f64> = (0..400 * 2).map(|_| rng.random::<f64>() * 10.0).collect();
        let w = vec![1.0; 400];
        let r = kmeans(&pts, &w, 2, &cfg(7, 11));
        for pair in r.objective.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "{:?}", r.objective);
        }
    }

    #[test]
    fn single_center_is_weighted_mean() {
        let pts = vec![0.0, 0.0, 4.0, 8.0];
        let w = vec![3.0, 1.0];
        let r = kmeans(&pts, &w, 2, &cfg(1, 0));
        assert!((r.centers[0] - 1.0).abs() < 1e-12);
        assert!((r.centers[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn more_centers_than_points_does_not_panic() {
        let pts = vec![1.0, 1.0];
        let r = kmeans(&pts, &[1.0], 2, &cfg(3, 0));
        assert_eq!(r.centers.len(), 6);
        assert_eq!(r.assignment, vec![0]);
    }
}
