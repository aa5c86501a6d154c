//! Partial layout sizing: trade expected fallback cost against storage.
//!
//! `TotalCost(N_l) = A [ (1 - (1-p)^k) ln N_l + (1-p)^k C ] + lambda B N_l` with `p = N_l / N_d`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizingParams {
    pub n_d: f64,
    pub k: usize,
    /// Storage cost per point.
    pub b: f64,
    /// Storage weight.
    pub lambda: f64,
    /// Query-cost weight.
    pub a: f64,
    /// Full-index cost per query.
    pub c_idx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizingSolution {
    pub n_l: f64,
    pub objective: f64,
    /// Stationarity left-hand side plus `lambda B / A`; zero at an interior optimum.
    pub residual: f64,
    /// Set when the minimum sits on the domain boundary.
    pub boundary: bool,
}

impl SizingSolution {
    pub fn beta(&self, n_d: f64) -> f64 {
        self.n_l / n_d
    }
}

impl SizingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_d > 1.0) {
            return Err(Error::invalid("n_d", "must exceed 1"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k", "must be at least 1"));
        }
        for (name, v) in [("b", self.b), ("a", self.a), ("c_idx", self.c_idx)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda", "must be non-negative"));
        }
        Ok(())
    }

    pub fn objective(&self, n_l: f64) -> f64 {
        let miss = (1.0 - n_l / self.n_d).powi(self.k as i32);
        self.a * ((1.0 - miss) * n_l.ln() + miss * self.c_idx) + self.lambda * self.b * n_l
    }

    /// Left-hand side of the stationarity condition.
    pub fn stationarity(&self, n_l: f64) -> f64 {
        let q = 1.0 - n_l / self.n_d;
        let k = self.k as f64;
        k * q.powi(self.k as i32 - 1) / self.n_d * (n_l.ln() - self.c_idx) + (1.0 - q.powi(self.k as i32)) / n_l
    }

    pub fn residual(&self, n_l: f64) -> f64 {
        self.stationarity(n_l) + self.lambda * self.b / self.a
    }
}

const GRID: usize = 4096;

/// Global minimizer of the total cost over `[1, N_d]`.
pub fn optimal_partial_size(params: &SizingParams) -> Result<SizingSolution> {
    params.validate()?;
    let hi = params.n_d;
    let at = |i: usize| hi.powf(i as f64 / GRID as f64);
    let mut candidates = vec![(1.0, true), (hi, true)];
    let mut prev = params.residual(at(0));
    for i in 1..=GRID {
        let cur = params.residual(at(i));
        if prev < 0.0 && cur >= 0.0 {
            candidates.push((bisect(params, at(i - 1), at(i)), false));
        }
        prev = cur;
    }
    let (n_l, boundary) = candidates
        .into_iter()
        .min_by(|a, b| params.objective(a.0).total_cmp(&params.objective(b.0)))
        .unwrap();
    Ok(SizingSolution {
        n_l,
        objective: params.objective(n_l),
        residual: params.residual(n_l),
        boundary,
    })
}

/// Root of the residual in `[lo, hi]`, where it goes from negative to non-negative.
fn bisect(params: &SizingParams, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if params.residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if params.residual(lo).abs() < params.residual(hi).abs() {
        lo
    } else {
        hi
    }
}
