//! Clustering quality: silhouette coefficient, Calinski-Harabasz index and
//! normalized mutual information.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::distance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterQuality {
    pub silhouette: f64,
    pub calinski_harabasz: f64,
    /// Present when reference labels were supplied.
    pub nmi: Option<f64>,
}

/// Relabel arbitrary cluster ids to `0..k`.
fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let out = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

/// Mean silhouette. Members of singleton clusters score 0.
pub fn silhouette(points: &[f64], dim: usize, assignment: &[usize]) -> Result<f64> {
    let (labels, k) = compact(assignment);
    check_shape(points, dim, assignment.len())?;
    if k < 2 {
        return Err(Error::invalid("assignment", "silhouette needs at least two clusters"));
    }
    let n = labels.len();
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut sums = vec![0.0; k];
    let mut total = 0.0;
    for i in 0..n {
        let li = labels[i];
        if sizes[li] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        let pi = row(i);
        for j in 0..n {
            if j != i {
                sums[labels[j]] += distance(pi, row(j));
            }
        }
        let a = sums[li] / (sizes[li] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != li && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Between-cluster over within-cluster dispersion, each per degree of freedom.
/// Returns infinity when every cluster is a single repeated point.
pub fn calinski_harabasz(points: &[f64], dim: usize, assignment: &[usize]) -> Result<f64> {
    let (labels, k) = compact(assignment);
    check_shape(points, dim, assignment.len())?;
    let n = labels.len();
    if k < 2 || k >= n {
        return Err(Error::invalid("assignment", "need 2 <= clusters < points"));
    }
    let mut mean = vec![0.0; dim];
    let mut centers = vec![0.0; k * dim];
    let mut sizes = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        sizes[l] += 1;
        for j in 0..dim {
            let x = points[i * dim + j];
            mean[j] += x;
            centers[l * dim + j] += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    for l in 0..k {
        for j in 0..dim {
            centers[l * dim + j] /= sizes[l] as f64;
        }
    }
    let between: f64 = (0..k)
        .map(|l| {
            let c = &centers[l * dim..(l + 1) * dim];
            sizes[l] as f64 * c.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        })
        .sum();
    let within: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let c = &centers[l * dim..(l + 1) * dim];
            points[i * dim..(i + 1) * dim]
                .iter()
                .zip(c)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        })
        .sum();
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// NMI with arithmetic-mean normalization; two single-cluster labelings give 1.
pub fn normalized_mutual_information(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = a.len() as f64;
    let (la, ka) = compact(a);
    let (lb, kb) = compact(b);
    let mut joint = vec![0usize; ka * kb];
    let mut ca = vec![0usize; ka];
    let mut cb = vec![0usize; kb];
    for (&x, &y) in la.iter().zip(&lb) {
        joint[x * kb + y] += 1;
        ca[x] += 1;
        cb[y] += 1;
    }
    let entropy = |counts: &[usize]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let (ha, hb) = (entropy(&ca), entropy(&cb));
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let c = joint[x * kb + y];
            if c > 0 {
                let pxy = c as f64 / n;
                mi += pxy * (pxy * n * n / (ca[x] as f64 * cb[y] as f64)).ln();
            }
        }
    }
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

pub fn clustering_metrics(
    points: &[f64],
    dim: usize,
    assignment: &[usize],
    labels: Option<&[usize]>,
) -> Result<ClusterQuality> {
    Ok(ClusterQuality {
        silhouette: silhouette(points, dim, assignment)?,
        calinski_harabasz: calinski_harabasz(points, dim, assignment)?,
        nmi: labels
            .map(|l| normalized_mutual_information(assignment, l))
            .transpose()?,
    })
}

fn check_shape(points: &[f64], dim: usize, n: usize) -> Result<()> {
    if dim == 0 || points.len() != n * dim {
        return Err(Error::DimensionMismatch {
            expected: n * dim,
            got: points.len(),
        });
    }
    Ok(())
}
