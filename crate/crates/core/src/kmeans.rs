//! Seeded k-means with k-means++ initialization and best-of-N restarts.
//! Used to cluster rows of the spectral embedding; deterministic given the
//! seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seeding::derive_seed;

const MAX_LLOYD_ITERATIONS: usize = 100;
/// Extra seeds tried when a restart collapses to an empty cluster.
const EMPTY_CLUSTER_RETRIES: usize = 10;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first centroid uniform, then proportional to the
/// squared distance to the nearest chosen centroid.
fn plus_plus_init(points: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            // All remaining points coincide with chosen centroids.
            rng.random_range(0..n)
        };
        chosen.push(next);
        for i in 0..n {
            let d = squared_distance(points.row(i), points.row(next));
            if d < dist2[i] {
                dist2[i] = d;
            }
        }
    }
    chosen
}

fn lloyd(points: &Matrix, init: &[usize], k: usize) -> Option<KMeansResult> {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = Matrix::zeros(k, d);
    for (c, &idx) in init.iter().enumerate() {
        for j in 0..d {
            centroids.set(c, j, points.at(idx, j));
        }
    }
    let mut assignments = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = squared_distance(points.row(i), centroids.row(c));
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignments[i];
            counts[c] += 1;
            for j in 0..d {
                let v = sums.at(c, j) + points.at(i, j);
                sums.set(c, j, v);
            }
        }
        if counts.iter().any(|&c| c == 0) {
            return None;
        }
        for c in 0..k {
            for j in 0..d {
                centroids.set(c, j, sums.at(c, j) / counts[c] as f64);
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| squared_distance(points.row(i), centroids.row(assignments[i])))
        .sum();
    Some(KMeansResult {
        assignments,
        centroids,
        inertia,
    })
}

/// Cluster the rows of `points` into `k` groups: k-means++ initialization,
/// `restarts` independent runs with derived seeds, lowest inertia wins.
/// Restarts that collapse to an empty cluster retry with fresh seeds a
/// bounded number of times.
pub fn kmeans(points: &Matrix, k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "k = {k} out of range for {n} points"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidInput("need at least one restart".into()));
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts {
        let mut result = None;
        for attempt in 0..=EMPTY_CLUSTER_RETRIES {
            let stream = (r * (EMPTY_CLUSTER_RETRIES + 1) + attempt) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream));
            let init = plus_plus_init(points, k, &mut rng);
            if let Some(run) = lloyd(points, &init, k) {
                result = Some(run);
                break;
            }
        }
        if let Some(run) = result {
            let better = best.as_ref().map_or(true, |b| run.inertia < b.inertia);
            if better {
                best = Some(run);
            }
        }
    }
    best.ok_or_else(|| {
        Error::Numerical("k-means failed: every restart produced an empty cluster".into())
    })
}

/// Relabel cluster ids by order of first occurrence so partitions compare
/// independently of arbitrary label permutations.
pub fn canonical_labels(assignments: &[usize]) -> Vec<usize> {
    let mut mapping: Vec<Option<usize>> = Vec::new();
    let mut out = Vec::with_capacity(assignments.len());
    for &a in assignments {
        if a >= mapping.len() {
            mapping.resize(a + 1, None);
        }
        let next_id = mapping.iter().filter(|m| m.is_some()).count();
        let id = *mapping[a].get_or_insert(next_id);
        out.push(id);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blob_points() -> Matrix {
        let mut rows = Vec::new();
        for i in 0..6 {
            rows.push(vec![0.0 + 0.01 * i as f64, 0.0]);
        }
        for i in 0..6 {
            rows.push(vec![10.0 + 0.01 * i as f64, 0.0]);
        }
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn recovers_two_separated_blobs() {
        let points = two_blob_points();
        let result = kmeans(&points, 2, 42, 10).unwrap();
        let labels = canonical_labels(&result.assignments);
        assert_eq!(&labels[0..6], &[0; 6]);
        assert_eq!(&labels[6..12], &[1; 6]);
    }

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let points = Matrix::from_rows(&[
            vec![0.0],
            vec![1.0],
            vec![2.0],
            vec![3.5],
            vec![7.0],
        ])
        .unwrap();
        let result = kmeans(&points, 5, 7, 50).unwrap();
        assert_eq!(result.inertia, 0.0);
        let mut sorted = result.assignments.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn deterministic_per_seed() {
        let points = two_blob_points();
        let a = kmeans(&points, 2, 9, 50).unwrap();
        let b = kmeans(&points, 2, 9, 50).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.inertia, b.inertia);
    }

    #[test]
    fn rejects_bad_k() {
        let points = two_blob_points();
        assert!(kmeans(&points, 0, 0, 1).is_err());
        assert!(kmeans(&points, 13, 0, 1).is_err());
    }

    #[test]
    fn canonical_labels_are_permutation_invariant() {
        assert_eq!(canonical_labels(&[2, 2, 0, 1, 0]), vec![0, 0, 1, 2, 1]);
        assert_eq!(canonical_labels(&[0, 0, 1, 2, 1]), vec![0, 0, 1, 2, 1]);
    }
}
