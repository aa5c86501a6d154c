//! Domain types shared by every stage: datasets, queries, results and the
//! Euclidean distance primitive.
//!
//! Coordinates are `f64` throughout. Row ids are dense (`0..n`) and assigned
//! at load time, so every layout is a permutation of ids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euclidean distance with a length check.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(distance(a, b))
}

/// Unchecked Euclidean distance for hot loops; callers guarantee equal lengths.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let diff = x - y;
            diff * diff
        })
        .sum()
}

/// Borrowed view of one row of a [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint<'a> {
    pub id: usize,
    pub coords: &'a [f64],
}

/// A non-empty set of points in `R^dim`, stored row-major.
///
/// Optional `labels` carry the generating component of each row for
/// synthetic data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coords.len() % dim,
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coords", "non-finite coordinate"));
        }
        Ok(Self {
            dim,
            coords,
            labels: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyDataset)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::from_flat(dim, coords)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::invalid(
                "labels",
                format!("{} labels for {} points", labels.len(), self.len()),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn row(&self, id: usize) -> &[f64] {
        &self.coords[id * self.dim..(id + 1) * self.dim]
    }

    pub fn point(&self, id: usize) -> DataPoint<'_> {
        DataPoint {
            id,
            coords: self.row(id),
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = DataPoint<'_>> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(id, coords)| DataPoint { id, coords })
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Copy of the data with rows in `order`; row `i` of the result is row
    /// `order[i]` of `self`. Ids of the result are positions, not source ids.
    pub fn gather(&self, order: &[usize]) -> Result<Dataset> {
        let mut coords = Vec::with_capacity(order.len() * self.dim);
        for &id in order {
            coords.extend_from_slice(self.row(id));
        }
        let mut out = Dataset::from_flat(self.dim, coords)?;
        if let Some(labels) = &self.labels {
            out.labels = Some(order.iter().map(|&id| labels[id]).collect());
        }
        Ok(out)
    }

    /// Per-dimension `(min, max)` over all rows.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for row in self.coords.chunks_exact(self.dim) {
            for (b, &x) in bounds.iter_mut().zip(row) {
                b.0 = b.0.min(x);
                b.1 = b.1.max(x);
            }
        }
        bounds
    }
}

/// One conjunct of a range query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    Range { lo: f64, hi: f64 },
    Equals(f64),
    Unconstrained,
}

impl Predicate {
    #[inline]
    pub fn matches(&self, x: f64) -> bool {
        match *self {
            Predicate::Range { lo, hi } => lo <= x && x <= hi,
            Predicate::Equals(v) => x == v,
            Predicate::Unconstrained => true,
        }
    }

    pub fn is_constrained(&self) -> bool {
        !matches!(self, Predicate::Unconstrained)
    }

    /// Closed interval covered by the predicate.
    pub fn interval(&self) -> (f64, f64) {
        match *self {
            Predicate::Range { lo, hi } => (lo, hi),
            Predicate::Equals(v) => (v, v),
            Predicate::Unconstrained => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// Conjunctive per-dimension predicate (predicate-based filtering).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbfQuery {
    predicates: Vec<Predicate>,
}

impl PbfQuery {
    pub fn new(predicates: Vec<Predicate>) -> Result<Self> {
        if predicates.is_empty() {
            return Err(Error::invalid("predicates", "at least one dimension required"));
        }
        for p in &predicates {
            match *p {
                Predicate::Range { lo, hi } if !(lo <= hi) => {
                    return Err(Error::invalid("predicates", format!("range [{lo}, {hi}] has lo > hi")));
                }
                Predicate::Equals(v) if !v.is_finite() => {
                    return Err(Error::invalid("predicates", "non-finite equality value"));
                }
                _ => {}
            }
        }
        Ok(Self { predicates })
    }

    /// Box query from `(lo, hi)` pairs.
    pub fn from_box(bounds: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            bounds
                .iter()
                .map(|&(lo, hi)| Predicate::Range { lo, hi })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.predicates.len()
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    #[inline]
    pub fn matches(&self, coords: &[f64]) -> bool {
        self.predicates
            .iter()
            .zip(coords)
            .all(|(p, &x)| p.matches(x))
    }

    /// True when the query box and the box `[mins, maxs]` intersect.
    pub fn intersects_box(&self, mins: &[f64], maxs: &[f64]) -> bool {
        self.predicates
            .iter()
            .zip(mins.iter().zip(maxs))
            .all(|(p, (&lo, &hi))| {
                let (qlo, qhi) = p.interval();
                qlo <= hi && lo <= qhi
            })
    }
}

/// k-nearest-neighbor query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnsQuery {
    center: Vec<f64>,
    k: usize,
}

impl AnnsQuery {
    pub fn new(center: Vec<f64>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k", "must be at least 1"));
        }
        if center.is_empty() {
            return Err(Error::invalid("center", "empty vector"));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("center", "non-finite coordinate"));
        }
        Ok(Self { center, k })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Query {
    Pbf(PbfQuery),
    Anns(AnnsQuery),
}

impl Query {
    pub fn dim(&self) -> usize {
        match self {
            Query::Pbf(q) => q.dim(),
            Query::Anns(q) => q.dim(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryOrigin {
    Pbf,
    Anns,
}

/// A query reduced to a single point in data space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPoint {
    pub coords: Vec<f64>,
    pub origin: QueryOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Hits {
    /// Ascending by distance, ties by id.
    Knn(Vec<Neighbor>),
    /// Sorted ascending.
    Range(Vec<usize>),
}

/// Result of a query plus the work counters the harness reports.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub hits: Hits,
    pub accessed_partitions: usize,
    /// Data points whose coordinates were compared against the query.
    pub examined_points: usize,
    pub used_fallback: bool,
}

impl QueryResult {
    pub fn knn(neighbors: Vec<Neighbor>, accessed_partitions: usize, examined_points: usize) -> Self {
        Self {
            hits: Hits::Knn(neighbors),
            accessed_partitions,
            examined_points,
            used_fallback: false,
        }
    }

    pub fn range(mut ids: Vec<usize>, accessed_partitions: usize, examined_points: usize) -> Self {
        ids.sort_unstable();
        Self {
            hits: Hits::Range(ids),
            accessed_partitions,
            examined_points,
            used_fallback: false,
        }
    }

    pub fn neighbors(&self) -> Option<&[Neighbor]> {
        match &self.hits {
            Hits::Knn(n) => Some(n),
            Hits::Range(_) => None,
        }
    }

    /// Result ids; for k-NN results in rank order.
    pub fn ids(&self) -> Vec<usize> {
        match &self.hits {
            Hits::Knn(n) => n.iter().map(|n| n.id).collect(),
            Hits::Range(ids) => ids.clone(),
        }
    }

    /// True when k-NN distances are non-decreasing (always true for range results).
    pub fn is_sorted(&self) -> bool {
        match &self.hits {
            Hits::Knn(n) => n.windows(2).all(|w| w[0].distance <= w[1].distance),
            Hits::Range(ids) => ids.windows(2).all(|w| w[0] < w[1]),
        }
    }
}

/// Total order on neighbors: distance, then id.
#[inline]
pub(crate) fn neighbor_order(a: &Neighbor, b: &Neighbor) -> std::cmp::Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.id.cmp(&b.id))
}
