//! Time-biased sampling without replacement.
//!
//! Each item gets weight `exp(-decay * age)` and an exponential race key
//! `ln(-ln u) + decay * age`; the `s` smallest keys win. This is the
//! Efraimidis-Spirakis scheme written in log space.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::QueryPoint;

pub const DEFAULT_DECAY: f64 = 0.1;
pub const DEFAULT_SAMPLE_SIZE: usize = 100;

/// Indices of the sampled items in ascending order. Age is measured from the
/// latest arrival time.
pub fn time_biased_sample<R: Rng + ?Sized>(arrivals: &[f64], s: usize, decay: f64, rng: &mut R) -> Result<Vec<usize>> {
    if s == 0 {
        return Err(Error::invalid("sample_size", "must be at least 1"));
    }
    if !(decay >= 0.0 && decay.is_finite()) {
        return Err(Error::invalid("decay", "must be finite and non-negative"));
    }
    if arrivals.len() <= s {
        return Ok((0..arrivals.len()).collect());
    }
    let latest = arrivals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut keyed: Vec<(f64, usize)> = arrivals
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            ((-u.ln()).ln() + decay * (latest - t), i)
        })
        .collect();
    keyed.select_nth_unstable_by(s - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<usize> = keyed[..s].iter().map(|k| k.1).collect();
    out.sort_unstable();
    Ok(out)
}

/// Sample window queries, treating arrival position as time.
pub fn sample_window_queries<R: Rng + ?Sized>(
    window: &[QueryPoint],
    s: usize,
    decay: f64,
    rng: &mut R,
) -> Result<Vec<QueryPoint>> {
    let arrivals: Vec<f64> = (0..window.len()).map(|i| i as f64).collect();
    Ok(time_biased_sample(&arrivals, s, decay, rng)?
        .into_iter()
        .map(|i| window[i].clone())
        .collect())
}
