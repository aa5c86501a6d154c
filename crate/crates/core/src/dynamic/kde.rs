//! Mode finding over a window's query points with a product Gaussian kernel.

use crate::error::{Error, Result};
use crate::model::QueryPoint;

/// Silverman's rule per dimension: `sigma_j * (4 / ((d + 2) n))^(1 / (d + 4))`.
pub fn silverman_bandwidth(points: &[QueryPoint]) -> Result<Vec<f64>> {
    let first = points.first().ok_or(Error::EmptyDataset)?;
    let d = first.coords.len();
    let n = points.len() as f64;
    let factor = (4.0 / ((d as f64 + 2.0) * n)).powf(1.0 / (d as f64 + 4.0));
    (0..d)
        .map(|j| {
            let mut mean = 0.0;
            for p in points {
                if p.coords.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: p.coords.len(),
                    });
                }
                mean += p.coords[j];
            }
            mean /= n;
            let var = if points.len() > 1 {
                points.iter().map(|p| (p.coords[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            Ok(var.sqrt() * factor)
        })
        .collect()
}

/// Unnormalized density at every point. Dimensions with zero bandwidth are ignored.
pub fn kde_densities(points: &[QueryPoint], bandwidth: &[f64]) -> Vec<f64> {
    let inv: Vec<Option<f64>> = bandwidth
        .iter()
        .map(|&h| (h > 0.0 && h.is_finite()).then(|| 1.0 / h))
        .collect();
    points
        .iter()
        .map(|p| {
            points
                .iter()
                .map(|o| {
                    let z2: f64 = p
                        .coords
                        .iter()
                        .zip(&o.coords)
                        .zip(&inv)
                        .filter_map(|((a, b), s)| s.map(|s| ((a - b) * s).powi(2)))
                        .sum();
                    (-0.5 * z2).exp()
                })
                .sum()
        })
        .collect()
}

/// Index of the densest query point; ties go to the earliest.
pub fn representative_index(points: &[QueryPoint], bandwidth: Option<&[f64]>) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let owned;
    let h = match bandwidth {
        Some(h) => {
            if h.len() != points[0].coords.len() {
                return Err(Error::DimensionMismatch {
                    expected: points[0].coords.len(),
                    got: h.len(),
                });
            }
            h
        }
        None => {
            owned = silverman_bandwidth(points)?;
            &owned
        }
    };
    let dens = kde_densities(points, h);
    let mut best = 0;
    for (i, &v) in dens.iter().enumerate() {
        if v > dens[best] {
            best = i;
        }
    }
    Ok(best)
}

pub fn select_representative(points: &[QueryPoint], bandwidth: Option<&[f64]>) -> Result<QueryPoint> {
    representative_index(points, bandwidth).map(|i| points[i].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QueryOrigin;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn qp(coords: Vec<f64>) -> QueryPoint {
        QueryPoint {
            coords,
            origin: QueryOrigin::Anns,
        }
    }

    #[test]
    fn singleton() {
        let p = vec![qp(vec![3.0, -1.0])];
        assert_eq!(select_representative(&p, None).unwrap(), p[0]);
        assert!(select_representative(&[], None).is_err());
    }

    #[test]
    fn cluster_beats_outlier() {
        let mut pts: Vec<QueryPoint> = (0..9).map(|i| qp(vec![0.01 * i as f64, -0.01 * i as f64])).collect();
        pts.insert(0, qp(vec![50.0, 50.0]));
        let i = representative_index(&pts, None).unwrap();
        assert!(i >= 1);
    }

    #[test]
    fn ties_go_to_earliest() {
        let pts = vec![qp(vec![0.0]), qp(vec![1.0]), qp(vec![0.0]), qp(vec![1.0])];
        assert_eq!(representative_index(&pts, Some(&[0.5])).unwrap(), 0);
        let same = vec![qp(vec![2.0]); 4];
        assert_eq!(representative_index(&same, None).unwrap(), 0);
    }

    #[test]
    fn majority_component_matches_naive_kde() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let pts: Vec<QueryPoint> = (0..200)
            .map(|_| {
                let c = if rng.random::<f64>() < 0.8 { 0.0 } else { 10.0 };
                qp(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)])
            })
            .collect();

        // Naive oracle with explicit normalization constants.
        let n = pts.len() as f64;
        let h: Vec<f64> = (0..2)
            .map(|j| {
                let m = pts.iter().map(|p| p.coords[j]).sum::<f64>() / n;
                let s = (pts.iter().map(|p| (p.coords[j] - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                s * (4.0 / (4.0 * n)).powf(1.0 / 6.0)
            })
            .collect();
        let norm = 1.0 / (2.0 * std::f64::consts::PI * h[0] * h[1]);
        let mut best = (0, f64::MIN);
        for (i, p) in pts.iter().enumerate() {
            let mut f = 0.0;
            for o in &pts {
                let u = (p.coords[0] - o.coords[0]) / h[0];
                let v = (p.coords[1] - o.coords[1]) / h[1];
                f += norm * (-0.5 * (u * u + v * v)).exp();
            }
            if f / n > best.1 {
                best = (i, f / n);
            }
        }
        let got = representative_index(&pts, None).unwrap();
        assert_eq!(got, best.0);
        assert!(pts[got].coords[0] < 5.0 && pts[got].coords[1] < 5.0);
    }
}
