//! Bidirectional search over the active partial layout with index fallback.

use super::candidates::CandidateSet;
use crate::dynamic::PartialLayout;
use crate::error::{Error, Result};
use crate::index::IndexAdapter;
use crate::model::{distance, AnnsQuery, Dataset, QueryResult};

pub const DEFAULT_EXPANSION: usize = 2;

/// k-NN through a partial layout.
///
/// Starting at the entry whose DIS is closest to `DIS(q)`, both cursors walk
/// outward. A direction stops once `|DIS(x) - DIS(q)|` reaches the largest
/// true distance held, which bounds `||x - q||` from below. If a cursor runs
/// off either end of the layout, or fewer than `k` candidates were found, the
/// query is answered by `index` instead.
pub fn online_query(
    layout: &PartialLayout,
    data: &Dataset,
    index: &dyn IndexAdapter,
    q: &AnnsQuery,
    expansion: usize,
) -> Result<QueryResult> {
    let k = q.k();
    if k > data.len() {
        return Err(Error::invalid("k", format!("{k} exceeds {} rows", data.len())));
    }
    if q.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: q.dim(),
        });
    }
    if expansion == 0 {
        return Err(Error::invalid("expansion", "must be at least 1"));
    }
    if layout.is_empty() {
        return fallback(index, q, 0, 0);
    }

    let ids = layout.ids();
    let dis = layout.dis();
    let n = ids.len();
    let p = layout.dis_of(q.center());
    let after = dis.partition_point(|&d| d < p);
    let start = if after == n || (after > 0 && p - dis[after - 1] <= dis[after] - p) {
        after - 1
    } else {
        after
    };

    let mut can = CandidateSet::new(expansion * k);
    let visit = |can: &mut CandidateSet, i: usize| {
        can.offer(ids[i], distance(data.row(ids[i]), q.center()));
        (dis[i] - p).abs() >= can.max()
    };
    visit(&mut can, start);
    let mut touched = false;
    let mut lo = start;
    loop {
        if lo == 0 {
            touched = true;
            break;
        }
        lo -= 1;
        if visit(&mut can, lo) {
            break;
        }
    }
    let mut hi = start;
    loop {
        if hi + 1 == n {
            touched = true;
            break;
        }
        hi += 1;
        if visit(&mut can, hi) {
            break;
        }
    }
    let visited = hi - lo + 1;
    let size = layout.partition_size();
    let parts = hi / size - lo / size + 1;

    if touched || can.len() < k {
        return fallback(index, q, parts, visited);
    }
    let mut top = can.into_sorted();
    top.truncate(k);
    Ok(QueryResult::knn(top, parts, visited))
}

fn fallback(index: &dyn IndexAdapter, q: &AnnsQuery, parts: usize, visited: usize) -> Result<QueryResult> {
    let mut r = index.query_knn(q)?;
    r.accessed_partitions += parts;
    r.examined_points += visited;
    r.used_fallback = true;
    Ok(r)
}
