//! Monotone piecewise-cubic CDF through cumulative knots (Fritsch-Carlson slopes).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth non-decreasing CDF over distance values.
///
/// `eval` is 0 at or below the first knot and 1 at or above the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceCdf {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl DistanceCdf {
    /// Knots must have non-decreasing x and y. Knots sharing an x keep the larger y.
    /// The first y is forced to 0 and the last to 1.
    pub fn fit(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("knots", "need at least one knot"));
        }
        let mut xs: Vec<f64> = Vec::with_capacity(knots.len());
        let mut ys: Vec<f64> = Vec::with_capacity(knots.len());
        for &(x, y) in knots {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::invalid("knots", "non-finite knot"));
            }
            match xs.last() {
                Some(&px) if x < px => return Err(Error::invalid("knots", "x must be non-decreasing")),
                Some(&px) if x == px => {
                    let last = ys.last_mut().unwrap();
                    *last = last.max(y);
                }
                _ => {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
        for i in 1..ys.len() {
            if ys[i] < ys[i - 1] {
                return Err(Error::invalid("knots", "y must be non-decreasing"));
            }
        }
        ys[0] = 0.0;
        if ys.len() > 1 {
            *ys.last_mut().unwrap() = 1.0;
        }
        let slopes = pchip_slopes(&xs, &ys);
        Ok(Self { xs, ys, slopes })
    }

    pub fn min_x(&self) -> f64 {
        self.xs[0]
    }

    pub fn max_x(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if n == 1 {
            return if x < self.xs[0] { 0.0 } else { 1.0 };
        }
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return 1.0;
        }
        let i = self.xs.partition_point(|&k| k <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.ys[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1];
        v.clamp(self.ys[i], self.ys[i + 1])
    }

    /// Smallest x with `eval(x) >= p`, to within bisection precision.
    pub fn inverse(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = (self.min_x(), self.max_x());
        if p <= 0.0 || lo == hi {
            return lo;
        }
        if p >= 1.0 {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// One-sided three-point slope, limited to keep the end interval monotone.
fn edge_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}
