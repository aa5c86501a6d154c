//! Feature-based transformation: per-dimension histograms grouped into a
//! `d x d` frequency matrix, a diagonal importance matrix, and the product
//! `T * A_c * A_r`.

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::workload::{ConcatMatrix, Workload};
use crate::model::{Query, QueryOrigin};

/// Smoothing added to every dimension's usage frequency before normalization.
pub const IMPORTANCE_SMOOTHING: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinWidth {
    Width(f64),
    /// Every value in the column is identical.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinCount {
    /// `ceil(range / width)`.
    pub raw: usize,
    /// Padding that makes `total` divisible by the dimensionality.
    pub padding: usize,
    pub total: usize,
}

/// Linear-interpolation quantile of an ascending slice.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_copy(column: &[f64]) -> Vec<f64> {
    let mut v = column.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Freedman-Diaconis width `2 * IQR * N^(-1/3)`.
///
/// A zero IQR on a non-constant column falls back to `(max - min) / dim`.
pub fn compute_bin_width(column: &[f64], dim: usize) -> Result<BinWidth> {
    if column.len() < 2 {
        return Err(Error::invalid("column", "need at least two values"));
    }
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    let sorted = sorted_copy(column);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    if min == max {
        return Ok(BinWidth::Constant);
    }
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    if iqr <= 0.0 {
        return Ok(BinWidth::Width((max - min) / dim as f64));
    }
    let n = column.len() as f64;
    Ok(BinWidth::Width(2.0 * iqr * n.powf(-1.0 / 3.0)))
}

/// `ceil((max - min) / width)` padded up to a multiple of `dim`.
pub fn compute_bin_count(column: &[f64], width: f64, dim: usize) -> Result<BinCount> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::invalid("width", format!("must be positive, got {width}")));
    }
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    let (min, max) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if column.is_empty() || min == max {
        return Ok(BinCount {
            raw: 1,
            padding: dim - 1,
            total: dim,
        });
    }
    let raw = (((max - min) / width).ceil() as usize).max(1);
    let padding = (dim - raw % dim) % dim;
    Ok(BinCount {
        raw,
        padding,
        total: raw + padding,
    })
}

/// `A_r`: entry `(i, j)` is the relative frequency of the `i`-th group of
/// `b_j / d` consecutive bins in dimension `j`'s histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl FrequencyMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            entries.extend_from_slice(r);
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, group: usize, column: usize) -> f64 {
        self.entries[group * self.dim + column]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }
}

pub fn build_frequency_matrix(t: &ConcatMatrix) -> Result<FrequencyMatrix> {
    let dim = t.dim();
    let n = t.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut entries = vec![0.0; dim * dim];
    for j in 0..dim {
        let column = t.column(j);
        let width = if n >= 2 {
            compute_bin_width(&column, dim)?
        } else {
            BinWidth::Constant
        };
        let width = match width {
            BinWidth::Constant => {
                entries[j] = 1.0;
                continue;
            }
            BinWidth::Width(w) => w,
        };
        let bins = compute_bin_count(&column, width, dim)?;
        let (min, max) = column
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        // b_j equal-width bins over [min, max]; groups of b_j / d bins.
        let bin_width = (max - min) / bins.total as f64;
        let per_group = bins.total / dim;
        let mut counts = vec![0usize; dim];
        for &x in &column {
            let bin = (((x - min) / bin_width) as usize).min(bins.total - 1);
            counts[bin / per_group] += 1;
        }
        for (i, c) in counts.into_iter().enumerate() {
            entries[i * dim + j] = c as f64 / n as f64;
        }
    }
    Ok(FrequencyMatrix { dim, entries })
}

/// Diagonal `A_c` of per-dimension importance weights with mean 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceMatrix {
    diagonal: Vec<f64>,
}

impl ImportanceMatrix {
    pub fn identity(dim: usize) -> Self {
        Self {
            diagonal: vec![1.0; dim],
        }
    }

    pub fn from_diagonal(diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("diagonal", "weights must be positive"));
        }
        Ok(Self { diagonal })
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }
}

/// Dimension usage weights from the historical workload.
///
/// With range queries present, the usage of dimension `j` is the fraction of
/// range queries constraining it. A k-NN-only workload uses each dimension's
/// share of the total variance of the query points. Usages are smoothed by
/// [`IMPORTANCE_SMOOTHING`] and scaled to mean 1; no queries gives identity.
pub fn build_importance_matrix(data: &Dataset, workload: &Workload) -> ImportanceMatrix {
    let dim = data.dim();
    if workload.is_empty() {
        return ImportanceMatrix::identity(dim);
    }
    let pbf: Vec<_> = workload
        .queries()
        .iter()
        .filter_map(|q| match q {
            Query::Pbf(p) => Some(p),
            Query::Anns(_) => None,
        })
        .collect();

    let usage: Vec<f64> = if !pbf.is_empty() {
        let mut counts = vec![0usize; dim];
        for q in &pbf {
            for (c, p) in counts.iter_mut().zip(q.predicates()) {
                if p.is_constrained() {
                    *c += 1;
                }
            }
        }
        counts
            .into_iter()
            .map(|c| c as f64 / pbf.len() as f64)
            .collect()
    } else {
        let points: Vec<&[f64]> = workload
            .points()
            .iter()
            .filter(|p| p.origin == QueryOrigin::Anns)
            .map(|p| p.coords.as_slice())
            .collect();
        let variances = column_variances(&points, dim);
        let total: f64 = variances.iter().sum();
        if total > 0.0 {
            variances.into_iter().map(|v| v / total).collect()
        } else {
            vec![1.0 / dim as f64; dim]
        }
    };

    let smoothed: Vec<f64> = usage.into_iter().map(|f| f + IMPORTANCE_SMOOTHING).collect();
    let mean = smoothed.iter().sum::<f64>() / dim as f64;
    ImportanceMatrix {
        diagonal: smoothed.into_iter().map(|w| w / mean).collect(),
    }
}

fn column_variances(points: &[&[f64]], dim: usize) -> Vec<f64> {
    let n = points.len() as f64;
    if points.is_empty() {
        return vec![0.0; dim];
    }
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for p in points {
        for j in 0..dim {
            var[j] += (p[j] - mean[j]).powi(2);
        }
    }
    var.into_iter().map(|v| v / n).collect()
}

/// `T_trans = T * A_c * A_r`, row by row.
pub fn transform(
    t: &ConcatMatrix,
    importance: &ImportanceMatrix,
    frequency: &FrequencyMatrix,
) -> Result<ConcatMatrix> {
    let dim = t.dim();
    for got in [importance.diagonal.len(), frequency.dim()] {
        if got != dim {
            return Err(Error::DimensionMismatch { expected: dim, got });
        }
    }
    let mut out = Vec::with_capacity(t.flat().len());
    let mut scaled = vec![0.0; dim];
    for i in 0..t.len() {
        for ((s, x), c) in scaled.iter_mut().zip(t.row(i)).zip(&importance.diagonal) {
            *s = x * c;
        }
        for j in 0..dim {
            let mut acc = 0.0;
            for (g, s) in scaled.iter().enumerate() {
                acc += s * frequency.get(g, j);
            }
            out.push(acc);
        }
    }
    Ok(ConcatMatrix::from_parts(dim, out, t.n_data(), t.n_query()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnnsQuery, PbfQuery, Predicate};
    use crate::workload::concat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: &[Vec<f64>]) -> ConcatMatrix {
        let d = Dataset::from_rows(rows).unwrap();
        concat(&d, &Workload::new()).unwrap()
    }

    #[test]
    fn bin_width_from_iqr() {
        // Values with IQR exactly 2 and N = 1000: 2 * 2 * 0.1.
        let column: Vec<f64> = (0..1000).map(|i| if i < 500 { 0.0 } else { 2.0 }).collect();
        let sorted = sorted_copy(&column);
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        assert_eq!(iqr, 2.0);
        match compute_bin_width(&column, 4).unwrap() {
            BinWidth::Width(w) => assert!((w - 0.4).abs() < 1e-12, "{w}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bin_width_constant_and_zero_iqr() {
        assert_eq!(compute_bin_width(&[5.0; 4], 3).unwrap(), BinWidth::Constant);
        // Zero IQR, non-zero range: (max - min) / d.
        let mut column = vec![1.0; 100];
        column[0] = -3.0;
        column[99] = 5.0;
        assert_eq!(compute_bin_width(&column, 4).unwrap(), BinWidth::Width(2.0));
        assert!(compute_bin_width(&[1.0], 2).is_err());
    }

    #[test]
    fn bin_width_uniform_against_independent_quantiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let column: Vec<f64> = (0..8000).map(|_| rng.random::<f64>()).collect();
        // Independent quantile: nearest-rank interpolation written from scratch.
        let mut s = column.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| {
            let pos = p * 7999.0;
            let i = pos as usize;
            s[i] * (1.0 - (pos - i as f64)) + s[i + 1] * (pos - i as f64)
        };
        let expected = 2.0 * (q(0.75) - q(0.25)) * 0.05;
        match compute_bin_width(&column, 6).unwrap() {
            BinWidth::Width(w) => assert!((w - expected).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bin_count_padding() {
        let c = compute_bin_count(&[0.0, 10.0], 1.0, 4).unwrap();
        assert_eq!((c.raw, c.padding, c.total), (10, 2, 12));
        let c = compute_bin_count(&[0.0, 8.0], 1.0, 4).unwrap();
        assert_eq!((c.raw, c.padding, c.total), (8, 0, 8));
        let c = compute_bin_count(&[1.0, 8.3], 0.4, 6).unwrap();
        assert_eq!((c.raw, c.total), (19, 24));
        assert_eq!(compute_bin_count(&[2.0, 2.0], 1.0, 5).unwrap().total, 5);
        assert!(compute_bin_count(&[0.0, 1.0], 0.0, 2).is_err());
    }

    #[test]
    fn frequency_uniform_column_splits_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..10_000)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let a = build_frequency_matrix(&matrix(&rows)).unwrap();
        // Brute force: fraction below the midpoint of each column's range.
        for j in 0..2 {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let (lo, hi) = col.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
            let below = col.iter().filter(|&&x| x < (lo + hi) / 2.0).count() as f64 / 10_000.0;
            assert!((a.get(0, j) - below).abs() < 0.01);
            assert!((a.get(0, j) - 0.5).abs() < 0.05);
            assert!((a.get(1, j) - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn frequency_point_mass_and_normalization() {
        let mut rows = vec![vec![0.0, 1.0]; 99];
        rows.push(vec![10.0, 1.0]);
        let a = build_frequency_matrix(&matrix(&rows)).unwrap();
        // Dimension 1 is constant: everything in the first group.
        assert_eq!(a.column(1), vec![1.0, 0.0]);
        assert!((a.get(0, 0) - 0.99).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| (0..5).map(|_| rng.random_range(-3.0..7.0f64).powi(3)).collect())
            .collect();
        let a = build_frequency_matrix(&matrix(&rows)).unwrap();
        for j in 0..5 {
            let s: f64 = a.column(j).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(a.column(j).iter().all(|&x| x >= 0.0));
        }
    }

    fn pbf(preds: Vec<Predicate>) -> Query {
        Query::Pbf(PbfQuery::new(preds).unwrap())
    }

    #[test]
    fn importance_from_constraint_frequency() {
        let d = Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let r = Predicate::Range { lo: 0.0, hi: 1.0 };
        let u = Predicate::Unconstrained;
        let w = Workload::from_queries(
            vec![pbf(vec![r, u]), pbf(vec![r, u]), pbf(vec![r, u]), pbf(vec![u, r])],
            &d,
        )
        .unwrap();
        let a = build_importance_matrix(&d, &w);
        let diag = a.diagonal();
        assert!((diag[0] - 0.76 / 0.51).abs() < 1e-12);
        assert!((diag[1] - 0.26 / 0.51).abs() < 1e-12);
        assert!((diag[0] - 1.490196).abs() < 1e-6);

        let w = Workload::from_queries(vec![pbf(vec![r, r]); 3], &d).unwrap();
        assert_eq!(build_importance_matrix(&d, &w).diagonal(), &[1.0, 1.0]);
        assert_eq!(
            build_importance_matrix(&d, &Workload::new()).diagonal(),
            &[1.0, 1.0]
        );
    }

    #[test]
    fn importance_from_anns_variance_share() {
        let d = Dataset::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let qs = [[0.0, 0.0], [2.0, 1.0], [4.0, 2.0]]
            .iter()
            .map(|c| Query::Anns(AnnsQuery::new(c.to_vec(), 3).unwrap()))
            .collect();
        let w = Workload::from_queries(qs, &d).unwrap();
        let diag = build_importance_matrix(&d, &w).diagonal().to_vec();
        // Variance ratio 4:1 -> shares 0.8, 0.2.
        let mean = (0.81 + 0.21) / 2.0;
        assert!((diag[0] - 0.81 / mean).abs() < 1e-12);
        assert!((diag[1] - 0.21 / mean).abs() < 1e-12);
    }

    #[test]
    fn transform_identity_and_scaling() {
        let t = matrix(&[vec![1.0, 0.0], vec![-2.0, 3.5]]);
        let out = transform(&t, &ImportanceMatrix::identity(2), &FrequencyMatrix::identity(2)).unwrap();
        assert_eq!(out, t);
        let t = matrix(&[vec![1.0, 0.0]]);
        let a_c = ImportanceMatrix::from_diagonal(vec![2.0, 1.0]).unwrap();
        let out = transform(&t, &a_c, &FrequencyMatrix::identity(2)).unwrap();
        assert_eq!(out.row(0), &[2.0, 0.0]);
    }

    #[test]
    fn transform_matches_naive_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let t = matrix(&rows);
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..2.0)).collect();
        let r: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let out = transform(
            &t,
            &ImportanceMatrix::from_diagonal(c.clone()).unwrap(),
            &FrequencyMatrix::from_rows(&r).unwrap(),
        )
        .unwrap();
        // Full matrices, then (T * Ac) * Ar.
        let mut ac = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            ac[i][i] = c[i];
        }
        for (i, row) in rows.iter().enumerate() {
            let mut tc = vec![0.0; 3];
            for j in 0..3 {
                for l in 0..3 {
                    tc[j] += row[l] * ac[l][j];
                }
            }
            for j in 0..3 {
                let mut v = 0.0;
                for l in 0..3 {
                    v += tc[l] * r[l][j];
                }
                assert!((out.row(i)[j] - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transform_shape_mismatch() {
        let t = matrix(&[vec![1.0, 0.0]]);
        assert!(transform(&t, &ImportanceMatrix::identity(3), &FrequencyMatrix::identity(2)).is_err());
    }
}
