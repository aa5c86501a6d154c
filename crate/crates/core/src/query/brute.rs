//! Exact full-scan reference queries.

use super::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::model::{distance, Dataset, PbfQuery, QueryResult};

fn check_knn(data: &Dataset, q: &[f64], k: usize, n: usize) -> Result<()> {
    if q.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: q.len(),
        });
    }
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("{k} is outside 1..={n}")));
    }
    Ok(())
}

/// Exact k nearest rows, ties broken by id.
pub fn brute_force_knn(data: &Dataset, q: &[f64], k: usize) -> Result<QueryResult> {
    check_knn(data, q, k, data.len())?;
    let mut can = CandidateSet::new(k);
    for p in data.points() {
        can.offer(p.id, distance(p.coords, q));
    }
    Ok(QueryResult::knn(can.into_sorted(), 0, data.len()))
}

/// Exact k nearest among `ids` only.
pub fn brute_force_knn_among(data: &Dataset, ids: &[usize], q: &[f64], k: usize) -> Result<QueryResult> {
    check_knn(data, q, k, ids.len())?;
    let mut can = CandidateSet::new(k);
    for &id in ids {
        can.offer(id, distance(data.row(id), q));
    }
    Ok(QueryResult::knn(can.into_sorted(), 0, ids.len()))
}

/// Ids of all rows satisfying every predicate, ascending.
pub fn brute_force_pbf(data: &Dataset, q: &PbfQuery) -> Result<Vec<usize>> {
    if q.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: q.dim(),
        });
    }
    Ok(data.points().filter(|p| q.matches(p.coords)).map(|p| p.id).collect())
}
