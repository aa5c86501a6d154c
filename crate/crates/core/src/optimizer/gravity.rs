//! Gravity-based movement of the transformed rows.
//!
//! Every row `a_i` (data and query rows alike) is displaced by the pull of
//! the data rows and the query rows within radius `r`:
//!
//! ```text
//! a_i' = a_i + g_iD + g_iQ
//! g_iD = G * ( sum_{near}  (|d_i1 - a_i|^2 / |d_ij - a_i|^2) (d_ij - a_i)
//!            + sum_{other} (d_ij - a_i) / C )
//! g_iQ = tau * G * (same over query neighbors)
//! ```
//!
//! `d_i1` is the closest neighbor of the group, and a neighbor is "near" when
//! `|d_ij - a_i|^2 <= G * |d_i1 - a_i|`. The near test is applied verbatim even
//! though it mixes a squared distance with a distance. All displacements are
//! computed from the pre-move positions in a single pass.
//!
//! Neighbors at distance exactly zero contribute a zero vector in either sum
//! and are skipped, which keeps the near weights finite.

use crate::error::{Error, Result};
use crate::spatial::KdTree;
use crate::workload::ConcatMatrix;

/// Default `C`, "slightly larger than 1".
pub const DEFAULT_GRAVITY_CONSTANT: f64 = 1.1;
/// Default radius as a multiple of the average nearest-neighbor distance.
pub const DEFAULT_RADIUS_MULTIPLIER: f64 = 7.5;

/// Mean distance from each row to its nearest other row.
pub fn average_nn_distance(points: &[f64], dim: usize) -> Result<f64> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::invalid("points", "length is not a multiple of dim"));
    }
    let n = points.len() / dim;
    if n < 2 {
        return Err(Error::invalid("points", "need at least two points"));
    }
    let tree = KdTree::new(points, dim);
    let mut total = 0.0;
    for i in 0..n {
        let (_, d2) = tree
            .nearest_excluding(&points[i * dim..(i + 1) * dim], Some(i))
            .expect("at least two points");
        total += d2.sqrt();
    }
    let g = total / n as f64;
    if g == 0.0 {
        return Err(Error::DegenerateScale);
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityParams {
    /// Interaction radius `r`.
    pub radius: f64,
    /// Weight `tau` of query rows relative to data rows.
    pub tau: f64,
    /// Constant `C` dividing the far-neighbor pull.
    pub constant: f64,
    /// Average nearest-neighbor distance `G` of the transformed rows.
    pub scale: f64,
}

impl GravityParams {
    /// Defaults: `r = 7.5 G`, `C = 1.1`, `tau = gamma / n_query` (0 without queries).
    pub fn with_defaults(scale: f64, gamma: f64, n_query: usize) -> Self {
        Self {
            radius: DEFAULT_RADIUS_MULTIPLIER * scale,
            tau: if n_query == 0 { 0.0 } else { gamma / n_query as f64 },
            constant: DEFAULT_GRAVITY_CONSTANT,
            scale,
        }
    }
}

/// Accumulates one neighbor group's pull on a row.
struct GroupPull {
    nearest: f64,
    near: Vec<f64>,
    far: Vec<f64>,
}

impl GroupPull {
    fn new(dim: usize) -> Self {
        Self {
            nearest: f64::INFINITY,
            near: vec![0.0; dim],
            far: vec![0.0; dim],
        }
    }

    fn reset(&mut self) {
        self.nearest = f64::INFINITY;
        self.near.iter_mut().for_each(|x| *x = 0.0);
        self.far.iter_mut().for_each(|x| *x = 0.0);
    }

    fn add(&mut self, anchor: &[f64], other: &[f64], d2: f64, g: f64, c: f64) {
        // Near iff d^2 <= G * d_1; the test is monotone in d, so classifying
        // each neighbor independently reproduces the "furthest k_i" cutoff.
        let d1 = self.nearest;
        if d2 <= g * d1 {
            let w = d1 * d1 / d2;
            for ((acc, o), a) in self.near.iter_mut().zip(other).zip(anchor) {
                *acc += w * (o - a);
            }
        } else {
            for ((acc, o), a) in self.far.iter_mut().zip(other).zip(anchor) {
                *acc += (o - a) / c;
            }
        }
    }
}

/// Move every row of `t` once. Rows without in-radius neighbors stay put.
pub fn gravity_move(t: &ConcatMatrix, params: &GravityParams) -> Result<ConcatMatrix> {
    let GravityParams {
        radius,
        tau,
        constant,
        scale,
    } = *params;
    if !(radius > 0.0) {
        return Err(Error::invalid("radius", "must be positive"));
    }
    if !(constant > 0.0) {
        return Err(Error::invalid("constant", "must be positive"));
    }
    let dim = t.dim();
    let n_data = t.n_data();
    let tree = KdTree::new(t.flat(), dim);

    let mut out = t.flat().to_vec();
    let mut neighbors: Vec<(usize, f64)> = Vec::new();
    let mut data_pull = GroupPull::new(dim);
    let mut query_pull = GroupPull::new(dim);

    for i in 0..t.len() {
        let anchor = t.row(i);
        neighbors.clear();
        tree.for_each_within(anchor, radius, |j, d2| {
            if j != i && d2 > 0.0 {
                neighbors.push((j, d2));
            }
        });
        if neighbors.is_empty() {
            continue;
        }
        data_pull.reset();
        query_pull.reset();
        for &(j, d2) in &neighbors {
            let group = if j < n_data { &mut data_pull } else { &mut query_pull };
            group.nearest = group.nearest.min(d2.sqrt());
        }
        for &(j, d2) in &neighbors {
            if j < n_data {
                data_pull.add(anchor, t.row(j), d2, scale, constant);
            } else if tau != 0.0 {
                query_pull.add(anchor, t.row(j), d2, scale, constant);
            }
        }
        let row = &mut out[i * dim..(i + 1) * dim];
        for k in 0..dim {
            let g_d = scale * (data_pull.near[k] + data_pull.far[k]);
            let g_q = tau * scale * (query_pull.near[k] + query_pull.far[k]);
            row[k] += g_d + g_q;
        }
    }
    Ok(ConcatMatrix::from_parts(dim, out, n_data, t.n_query()))
}
