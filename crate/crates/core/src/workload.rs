//! Unified point representation of range and k-NN queries, and the stacked
//! data-plus-query matrix the optimizer works on.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnnsQuery, Dataset, PbfQuery, Predicate, Query, QueryOrigin, QueryPoint};

/// Reduce a range query to its center.
///
/// Constrained dimensions take the range midpoint (or the equality value).
/// Unconstrained dimensions take the mean over the points of `data` that
/// satisfy all constrained predicates jointly, or the global mean when none do.
pub fn represent_pbf(query: &PbfQuery, data: &Dataset) -> Result<QueryPoint> {
    if query.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: query.dim(),
        });
    }
    let preds = query.predicates();
    if !preds.iter().any(Predicate::is_constrained) {
        return Err(Error::DegenerateQuery);
    }

    let mut coords: Vec<f64> = preds
        .iter()
        .map(|p| match *p {
            Predicate::Range { lo, hi } => 0.5 * (lo + hi),
            Predicate::Equals(v) => v,
            Predicate::Unconstrained => f64::NAN,
        })
        .collect();

    let free: Vec<usize> = (0..preds.len())
        .filter(|&j| !preds[j].is_constrained())
        .collect();
    if !free.is_empty() {
        let means = conditional_means(data, query, &free)
            .unwrap_or_else(|| column_means(data, &free));
        for (&j, m) in free.iter().zip(means) {
            coords[j] = m;
        }
    }

    Ok(QueryPoint {
        coords,
        origin: QueryOrigin::Pbf,
    })
}

fn conditional_means(data: &Dataset, query: &PbfQuery, dims: &[usize]) -> Option<Vec<f64>> {
    let mut sums = vec![0.0; dims.len()];
    let mut count = 0usize;
    for p in data.points().filter(|p| query.matches(p.coords)) {
        count += 1;
        for (s, &j) in sums.iter_mut().zip(dims) {
            *s += p.coords[j];
        }
    }
    (count > 0).then(|| sums.into_iter().map(|s| s / count as f64).collect())
}

fn column_means(data: &Dataset, dims: &[usize]) -> Vec<f64> {
    let mut sums = vec![0.0; dims.len()];
    for p in data.points() {
        for (s, &j) in sums.iter_mut().zip(dims) {
            *s += p.coords[j];
        }
    }
    sums.into_iter().map(|s| s / data.len() as f64).collect()
}

/// A k-NN query is represented by its center; `k` is not encoded.
pub fn represent_anns(query: &AnnsQuery) -> QueryPoint {
    QueryPoint {
        coords: query.center().to_vec(),
        origin: QueryOrigin::Anns,
    }
}

/// Historical queries together with their point representations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Workload {
    points: Vec<QueryPoint>,
    raw: Vec<Query>,
}

impl Workload {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_queries(queries: Vec<Query>, data: &Dataset) -> Result<Self> {
        let mut w = Self::new();
        for q in queries {
            w.push(q, data)?;
        }
        Ok(w)
    }

    pub fn push(&mut self, query: Query, data: &Dataset) -> Result<()> {
        let point = match &query {
            Query::Pbf(q) => represent_pbf(q, data)?,
            Query::Anns(q) => {
                if q.dim() != data.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: data.dim(),
                        got: q.dim(),
                    });
                }
                represent_anns(q)
            }
        };
        self.points.push(point);
        self.raw.push(query);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[QueryPoint] {
        &self.points
    }

    pub fn queries(&self) -> &[Query] {
        &self.raw
    }
}

/// Data rows followed by query rows, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatMatrix {
    dim: usize,
    rows: Vec<f64>,
    n_data: usize,
    n_query: usize,
}

impl ConcatMatrix {
    pub(crate) fn from_parts(dim: usize, rows: Vec<f64>, n_data: usize, n_query: usize) -> Self {
        debug_assert_eq!(rows.len(), dim * (n_data + n_query));
        Self {
            dim,
            rows,
            n_data,
            n_query,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.n_data + self.n_query
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn n_query(&self) -> usize {
        self.n_query
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_query(&self, i: usize) -> bool {
        i >= self.n_data
    }

    pub fn query_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.is_query(i)).collect()
    }

    pub fn flat(&self) -> &[f64] {
        &self.rows
    }

    /// Data rows only.
    pub fn data_rows(&self) -> &[f64] {
        &self.rows[..self.n_data * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.chunks_exact(self.dim).map(|r| r[j]).collect()
    }
}

/// Stack `data` on top of the workload's query points.
pub fn concat(data: &Dataset, workload: &Workload) -> Result<ConcatMatrix> {
    let dim = data.dim();
    let mut rows = Vec::with_capacity((data.len() + workload.len()) * dim);
    rows.extend_from_slice(data.flat());
    for q in workload.points() {
        if q.coords.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: q.coords.len(),
            });
        }
        rows.extend_from_slice(&q.coords);
    }
    Ok(ConcatMatrix::from_parts(dim, rows, data.len(), workload.len()))
}

// Workload log: one JSON object per line,
// {"pbf": [[lo,hi] | null, ...]} or {"anns": {"center": [...], "k": n}}.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnsRecord {
    center: Vec<f64>,
    k: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LogRecord {
    Pbf(Vec<Option<[f64; 2]>>),
    Anns(AnnsRecord),
}

fn to_record(query: &Query) -> LogRecord {
    match query {
        Query::Pbf(q) => LogRecord::Pbf(
            q.predicates()
                .iter()
                .map(|p| match *p {
                    Predicate::Range { lo, hi } => Some([lo, hi]),
                    Predicate::Equals(v) => Some([v, v]),
                    Predicate::Unconstrained => None,
                })
                .collect(),
        ),
        Query::Anns(q) => LogRecord::Anns(AnnsRecord {
            center: q.center().to_vec(),
            k: q.k(),
        }),
    }
}

fn from_record(record: LogRecord) -> Result<Query> {
    match record {
        LogRecord::Pbf(preds) => Ok(Query::Pbf(PbfQuery::new(
            preds
                .into_iter()
                .map(|p| match p {
                    Some([lo, hi]) => Predicate::Range { lo, hi },
                    None => Predicate::Unconstrained,
                })
                .collect(),
        )?)),
        LogRecord::Anns(a) => Ok(Query::Anns(AnnsQuery::new(a.center, a.k)?)),
    }
}

pub fn write_workload_log<W: Write>(mut out: W, queries: &[Query]) -> Result<()> {
    for q in queries {
        serde_json::to_writer(&mut out, &to_record(q))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse a workload log; blank lines are skipped, errors carry the 1-based line.
pub fn read_workload_log<R: BufRead>(input: R) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord = serde_json::from_str(&line).map_err(|e| Error::Workload {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(from_record(record).map_err(|e| Error::Workload {
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}
