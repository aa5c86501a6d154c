//! Partial layouts: the nearest `beta` fraction of the data to a window's
//! representative query point, sorted by that distance (DIS).

use serde::{Deserialize, Serialize};

use super::kde::select_representative;
use super::spline::DistanceCdf;
use crate::error::{Error, Result};
use crate::model::{distance, Dataset, QueryPoint};

/// Contiguous slice of a partial layout with its DIS range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisPartition {
    pub start: usize,
    pub end: usize,
    pub dis_min: f64,
    pub dis_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialLayout {
    representative: Vec<f64>,
    beta: f64,
    partition_size: usize,
    source_window: usize,
    /// Row ids in ascending (DIS, id) order.
    ids: Vec<usize>,
    dis: Vec<f64>,
    partitions: Vec<DisPartition>,
    cdf: DistanceCdf,
}

/// `ceil(beta * n)`, clamped to `[1, n]`.
pub fn partial_cardinality(n: usize, beta: f64) -> usize {
    let raw = (beta * n as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid("beta", format!("{beta} is outside (0, 1]")));
    }
    Ok(())
}

impl PartialLayout {
    /// Rank all rows by distance to `representative` and keep the nearest prefix.
    pub fn around(
        data: &Dataset,
        representative: &[f64],
        beta: f64,
        partition_size: usize,
        source_window: usize,
    ) -> Result<Self> {
        check_beta(beta)?;
        if partition_size == 0 {
            return Err(Error::invalid("partition_size", "must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if representative.len() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                got: representative.len(),
            });
        }
        let n_l = partial_cardinality(data.len(), beta);
        let mut ranked: Vec<(f64, usize)> = data
            .points()
            .map(|p| (distance(p.coords, representative), p.id))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if n_l < ranked.len() {
            ranked.select_nth_unstable_by(n_l - 1, order);
            ranked.truncate(n_l);
        }
        ranked.sort_unstable_by(order);
        let (dis, ids): (Vec<f64>, Vec<usize>) = ranked.into_iter().unzip();

        let partitions: Vec<DisPartition> = (0..n_l)
            .step_by(partition_size)
            .map(|start| {
                let end = (start + partition_size).min(n_l);
                DisPartition {
                    start,
                    end,
                    dis_min: dis[start],
                    dis_max: dis[end - 1],
                }
            })
            .collect();
        let mut knots = Vec::with_capacity(partitions.len() + 1);
        knots.push((partitions[0].dis_min, 0.0));
        knots.extend(partitions.iter().map(|p| (p.dis_max, p.end as f64 / n_l as f64)));
        let cdf = DistanceCdf::fit(&knots)?;

        Ok(Self {
            representative: representative.to_vec(),
            beta,
            partition_size,
            source_window,
            ids,
            dis,
            partitions,
            cdf,
        })
    }

    pub fn representative(&self) -> &[f64] {
        &self.representative
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn partition_size(&self) -> usize {
        self.partition_size
    }

    pub fn source_window(&self) -> usize {
        self.source_window
    }

    /// Row ids in DIS order.
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn dis(&self) -> &[f64] {
        &self.dis
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn partitions(&self) -> &[DisPartition] {
        &self.partitions
    }

    pub fn total_partitions(&self) -> usize {
        self.partitions.len()
    }

    pub fn cdf(&self) -> &DistanceCdf {
        &self.cdf
    }

    pub fn dis_of(&self, q: &[f64]) -> f64 {
        distance(q, &self.representative)
    }
}

/// Build a partial layout anchored at the densest query point of a window.
pub fn generate_partial_layout(
    data: &Dataset,
    partition_size: usize,
    window: &[QueryPoint],
    beta: f64,
    source_window: usize,
) -> Result<PartialLayout> {
    check_beta(beta)?;
    let q_r = select_representative(window, None)?;
    PartialLayout::around(data, &q_r.coords, beta, partition_size, source_window)
}

/// Search radius from the layout's DIS CDF: `F^-1((k + c_r) / N_l)`.
pub fn estimate_radius(layout: &PartialLayout, k: usize, c_r: f64) -> f64 {
    let n_l = layout.len() as f64;
    let target = k as f64 + c_r;
    if target >= n_l {
        return layout.partitions.last().map_or(0.0, |p| p.dis_max);
    }
    layout.cdf.inverse(target / n_l)
}

/// Fraction of the layout's partitions whose DIS range meets `[P - r, P + r]`,
/// or 1 when none do.
pub fn estimate_query_cost(layout: &PartialLayout, q: &[f64], k: usize, c_r: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if q.len() != layout.representative.len() {
        return Err(Error::DimensionMismatch {
            expected: layout.representative.len(),
            got: q.len(),
        });
    }
    let r = estimate_radius(layout, k, c_r);
    let p = layout.dis_of(q);
    let (lo, hi) = (p - r, p + r);
    let hit = layout
        .partitions
        .iter()
        .filter(|b| b.dis_min <= hi && b.dis_max >= lo)
        .count();
    if hit == 0 {
        return Ok(1.0);
    }
    Ok(hit as f64 / layout.partitions.len() as f64)
}

/// Elementwise [`estimate_query_cost`] over a sample.
pub fn cost_vector(layout: &PartialLayout, sample: &[QueryPoint], k: usize, c_r: f64) -> Result<Vec<f64>> {
    sample
        .iter()
        .map(|q| estimate_query_cost(layout, &q.coords, k, c_r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QueryOrigin;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::from_flat(d, (0..n * d).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    fn line(n: usize) -> Dataset {
        Dataset::from_flat(1, (0..n).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn anchor_on_a_point_ranks_it_first() {
        let d = random_data(50, 3, 1);
        let l = PartialLayout::around(&d, d.row(17), 1.0, 8, 0).unwrap();
        assert_eq!(l.ids()[0], 17);
        assert_eq!(l.dis()[0], 0.0);
        assert_eq!(l.len(), 50);
    }

    #[test]
    fn ceiling_arithmetic() {
        let d = random_data(100, 2, 2);
        let l = PartialLayout::around(&d, &[0.5, 0.5], 0.2, 10, 0).unwrap();
        assert_eq!(l.len(), 20);
        assert_eq!(l.total_partitions(), 2);
        assert_eq!(partial_cardinality(1_000, 1.0 / 50.0), 20);
        assert_eq!(partial_cardinality(101, 0.5), 51);
        assert_eq!(partial_cardinality(10, 1e-6), 1);
        assert!(PartialLayout::around(&d, &[0.5, 0.5], 0.0, 10, 0).is_err());
        assert!(PartialLayout::around(&d, &[0.5, 0.5], 1.5, 10, 0).is_err());
    }

    #[test]
    fn prefix_matches_full_sort() {
        let d = random_data(1000, 4, 3);
        let q = [0.3, 0.7, 0.1, 0.9];
        let l = PartialLayout::around(&d, &q, 0.13, 16, 0).unwrap();
        let mut all: Vec<(f64, usize)> = (0..d.len())
            .map(|i| {
                let s: f64 = d.row(i).iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                (s.sqrt(), i)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let want: Vec<usize> = all[..130].iter().map(|x| x.1).collect();
        assert_eq!(l.ids(), &want[..]);
        assert!(l.dis().windows(2).all(|w| w[0] <= w[1]));
        for p in l.partitions() {
            let s = &l.dis()[p.start..p.end];
            assert_eq!(p.dis_min, s.iter().copied().fold(f64::INFINITY, f64::min));
            assert_eq!(p.dis_max, s.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        assert_eq!(l.total_partitions(), 130usize.div_ceil(16));
    }

    #[test]
    fn cdf_spans_zero_to_one() {
        let d = random_data(500, 3, 4);
        let l = PartialLayout::around(&d, &[0.2, 0.2, 0.2], 0.4, 25, 0).unwrap();
        assert_eq!(l.cdf().eval(l.partitions()[0].dis_min), 0.0);
        assert_eq!(l.cdf().eval(l.partitions().last().unwrap().dis_max), 1.0);
    }

    #[test]
    fn full_coverage_costs_one() {
        let d = line(100);
        let l = PartialLayout::around(&d, &[0.0], 1.0, 10, 0).unwrap();
        // k + c_r >= N_l: radius covers everything.
        assert_eq!(estimate_query_cost(&l, &[50.0], 100, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn far_query_falls_back_to_full_scan() {
        let d = line(100);
        let l = PartialLayout::around(&d, &[0.0], 0.5, 10, 0).unwrap();
        assert_eq!(estimate_query_cost(&l, &[1e6], 1, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn self_query_hits_one_partition() {
        let d = random_data(400, 2, 5);
        let l = PartialLayout::around(&d, d.row(9), 0.5, 20, 0).unwrap();
        let v = cost_vector(
            &l,
            &[QueryPoint {
                coords: d.row(9).to_vec(),
                origin: QueryOrigin::Anns,
            }],
            1,
            0.0,
        )
        .unwrap();
        assert_eq!(v, vec![1.0 / l.total_partitions() as f64]);
    }

    #[test]
    fn uniform_interval_covers_three_of_ten() {
        // DIS values 0..99 in ten partitions [10i, 10i + 9]; the CDF knot at 9 is 0.1.
        let d = line(100);
        let l = PartialLayout::around(&d, &[0.0], 1.0, 10, 0).unwrap();
        let r = estimate_radius(&l, 10, 0.0);
        assert!((r - 9.0).abs() < 1e-6, "{r}");
        let q = 54.5;
        let got = estimate_query_cost(&l, &[q], 10, 0.0).unwrap();
        let oracle = l
            .partitions()
            .iter()
            .filter(|b| !(b.dis_max < q - r || b.dis_min > q + r))
            .count();
        assert_eq!(oracle, 3);
        assert!((got - 0.3).abs() < 1e-12);
    }

    #[test]
    fn cost_is_monotone_in_k() {
        let d = random_data(2000, 3, 6);
        let l = PartialLayout::around(&d, &[0.5, 0.5, 0.5], 0.25, 25, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let q: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let mut prev = 0.0;
            let mut prev_hit = true;
            for k in [1, 2, 5, 10, 50, 100, 400, 500] {
                let c = estimate_query_cost(&l, &q, k, 0.0).unwrap();
                let hit = {
                    let r = estimate_radius(&l, k, 0.0);
                    let p = l.dis_of(&q);
                    l.partitions().iter().any(|b| b.dis_min <= p + r && b.dis_max >= p - r)
                };
                if hit && prev_hit {
                    assert!(c >= prev - 1e-12);
                }
                assert!((0.0..=1.0).contains(&c));
                prev = c;
                prev_hit = hit;
            }
        }
    }

    #[test]
    fn cost_vector_is_elementwise() {
        let d = random_data(600, 2, 8);
        let l = PartialLayout::around(&d, &[0.1, 0.9], 0.3, 12, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sample: Vec<QueryPoint> = (0..40)
            .map(|_| QueryPoint {
                coords: vec![rng.random(), rng.random()],
                origin: QueryOrigin::Anns,
            })
            .collect();
        let v = cost_vector(&l, &sample, 7, 0.0).unwrap();
        for (c, q) in v.iter().zip(&sample) {
            assert_eq!(*c, estimate_query_cost(&l, &q.coords, 7, 0.0).unwrap());
        }
    }
}
