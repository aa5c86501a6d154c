//! k-means over the adjusted data rows and the one-dimensional KEY mapping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{distance, squared_distance};

pub const DEFAULT_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    dim: usize,
    /// `m` centers, row-major.
    centers: Vec<f64>,
    assignment: Vec<usize>,
    /// Centroid of the centers (`ct_0`).
    centroid: Vec<f64>,
}

impl ClusterModel {
    pub fn from_parts(dim: usize, centers: Vec<f64>, assignment: Vec<usize>) -> Result<Self> {
        if dim == 0 || centers.is_empty() || centers.len() % dim != 0 {
            return Err(Error::invalid("centers", "empty or ragged center matrix"));
        }
        let m = centers.len() / dim;
        if let Some(&bad) = assignment.iter().find(|&&a| a >= m) {
            return Err(Error::invalid("assignment", format!("cluster {bad} out of {m}")));
        }
        let mut centroid = vec![0.0; dim];
        for c in centers.chunks_exact(dim) {
            for (s, x) in centroid.iter_mut().zip(c) {
                *s += x;
            }
        }
        centroid.iter_mut().for_each(|s| *s /= m as f64);
        Ok(Self {
            dim,
            centers,
            assignment,
            centroid,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cluster_count(&self) -> usize {
        self.centers.len() / self.dim
    }

    pub fn center(&self, k: usize) -> &[f64] {
        &self.centers[k * self.dim..(k + 1) * self.dim]
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn centroid(&self) -> &[f64] {
        &self.centroid
    }
}

/// Index of the nearest center (ties to the lower index).
#[inline]
pub(crate) fn nearest_center(point: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.chunks_exact(dim).enumerate() {
        let d2 = squared_distance(point, c);
        if d2 < best.1 {
            best = (k, d2);
        }
    }
    best
}

/// Lloyd's k-means with seeded farthest-point initialization.
///
/// The first center is a uniformly drawn row; each following center is the
/// row farthest from all chosen centers. Empty clusters are re-seeded with
/// the row farthest from its current center. Deterministic for a fixed seed.
pub fn kmeans(rows: &[f64], dim: usize, m: usize, seed: u64, max_iterations: usize) -> Result<ClusterModel> {
    if dim == 0 || rows.len() % dim != 0 {
        return Err(Error::invalid("rows", "length is not a multiple of dim"));
    }
    let n = rows.len() / dim;
    if m == 0 {
        return Err(Error::invalid("m", "need at least one cluster"));
    }
    if m > n {
        return Err(Error::invalid("m", format!("{m} clusters for {n} points")));
    }
    let row = |i: usize| &rows[i * dim..(i + 1) * dim];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut centers = row(first).to_vec();
    let mut min_d2: Vec<f64> = (0..n).map(|i| squared_distance(row(i), row(first))).collect();
    while centers.len() < m * dim {
        let (far, _) = min_d2
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        let c = row(far).to_vec();
        for (i, d) in min_d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(row(i), &c));
        }
        centers.extend_from_slice(&c);
    }

    let mut assignment = vec![usize::MAX; n];
    let mut sums = vec![0.0; m * dim];
    let mut counts = vec![0usize; m];
    for _ in 0..max_iterations.max(1) {
        let mut changed = false;
        let mut worst = vec![(usize::MAX, f64::NEG_INFINITY); m];
        for i in 0..n {
            let (k, d2) = nearest_center(row(i), &centers, dim);
            if assignment[i] != k {
                assignment[i] = k;
                changed = true;
            }
            if d2 > worst[k].1 {
                worst[k] = (i, d2);
            }
        }
        if !changed {
            break;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (i, &k) in assignment.iter().enumerate() {
            counts[k] += 1;
            for (s, x) in sums[k * dim..(k + 1) * dim].iter_mut().zip(row(i)) {
                *s += x;
            }
        }
        for k in 0..m {
            if counts[k] > 0 {
                for j in 0..dim {
                    centers[k * dim + j] = sums[k * dim + j] / counts[k] as f64;
                }
            } else {
                // Steal the worst-fitting row of the largest cluster.
                let donor = (0..m).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap();
                let (i, _) = worst[donor];
                if i != usize::MAX {
                    centers[k * dim..(k + 1) * dim].copy_from_slice(row(i));
                }
            }
        }
    }
    // Final assignment against the final centers.
    for (i, a) in assignment.iter_mut().enumerate() {
        *a = nearest_center(row(i), &centers, dim).0;
    }
    ClusterModel::from_parts(dim, centers, assignment)
}

/// `KEY(a_i) = |a_i - ct_k| + |ct_k - ct_0|` for each row's assigned cluster `k`.
pub fn compute_keys(rows: &[f64], model: &ClusterModel) -> Result<Vec<f64>> {
    let dim = model.dim();
    if rows.len() != model.assignment().len() * dim {
        return Err(Error::DimensionMismatch {
            expected: model.assignment().len() * dim,
            got: rows.len(),
        });
    }
    let offsets: Vec<f64> = (0..model.cluster_count())
        .map(|k| distance(model.center(k), model.centroid()))
        .collect();
    Ok(rows
        .chunks_exact(dim)
        .zip(model.assignment())
        .map(|(p, &k)| distance(p, model.center(k)) + offsets[k])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64) -> (Vec<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let c = if i % 2 == 0 { 0.0 } else { 20.0 };
            rows.push(c + noise.sample(&mut rng));
            rows.push(c + noise.sample(&mut rng));
            labels.push(i % 2);
        }
        (rows, labels)
    }

    #[test]
    fn separates_two_blobs() {
        let (rows, labels) = blobs(1);
        let model = kmeans(&rows, 2, 2, 7, DEFAULT_MAX_ITERATIONS).unwrap();
        let a = model.assignment();
        let flip = a[0] != labels[0];
        for (x, &l) in a.iter().zip(&labels) {
            assert_eq!(*x != l, flip);
        }
    }

    #[test]
    fn single_cluster_is_data_centroid() {
        let (rows, _) = blobs(2);
        let model = kmeans(&rows, 2, 1, 0, DEFAULT_MAX_ITERATIONS).unwrap();
        let n = rows.len() / 2;
        for j in 0..2 {
            let mean: f64 = rows.chunks_exact(2).map(|r| r[j]).sum::<f64>() / n as f64;
            assert!((model.center(0)[j] - mean).abs() < 1e-9);
            assert_eq!(model.centroid()[j], model.center(0)[j]);
        }
    }

    #[test]
    fn rejects_too_many_clusters() {
        assert!(kmeans(&[0.0, 1.0, 2.0], 1, 4, 0, 10).is_err());
        assert!(kmeans(&[0.0, 1.0, 2.0], 1, 0, 0, 10).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let (rows, _) = blobs(3);
        let a = kmeans(&rows, 2, 5, 42, DEFAULT_MAX_ITERATIONS).unwrap();
        let b = kmeans(&rows, 2, 5, 42, DEFAULT_MAX_ITERATIONS).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn keys_follow_formula() {
        // Point at its center, center at ct_0.
        let model = ClusterModel::from_parts(2, vec![1.0, 1.0], vec![0]).unwrap();
        assert_eq!(compute_keys(&[1.0, 1.0], &model).unwrap(), vec![0.0]);
        // Two centers 6 apart: each is 3 from ct_0.
        let model = ClusterModel::from_parts(1, vec![0.0, 6.0], vec![0, 1]).unwrap();
        assert_eq!(model.centroid(), &[3.0]);
        assert_eq!(compute_keys(&[0.0, 6.0], &model).unwrap(), vec![3.0, 3.0]);

        let (rows, _) = blobs(4);
        let model = kmeans(&rows, 2, 3, 1, DEFAULT_MAX_ITERATIONS).unwrap();
        let keys = compute_keys(&rows, &model).unwrap();
        for (i, key) in keys.iter().enumerate() {
            let k = model.assignment()[i];
            let c = model.center(k);
            let ct0 = model.centroid();
            let p = &rows[2 * i..2 * i + 2];
            let want = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
                + ((c[0] - ct0[0]).powi(2) + (c[1] - ct0[1]).powi(2)).sqrt();
            assert!((key - want).abs() < 1e-12);
            assert!(*key >= 0.0);
        }
    }
}
