//! Static and windowed query generators.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relayout::dynamic::SlidingWindow;
use relayout::model::{AnnsQuery, Dataset, PbfQuery, Query};
use relayout::optimizer::{kmeans, DEFAULT_MAX_ITERATIONS};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const DEFAULT_SELECTIVITY: f64 = 0.1;
pub const DEFAULT_STATIC_K: usize = 100;
pub const DEFAULT_DYNAMIC_K: usize = 50;
pub const DEFAULT_WINDOWS: usize = 15;
pub const DEFAULT_PER_WINDOW: usize = 2000;
/// Share of windowed queries anchored in a random component.
pub const CONTAMINATION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum QueryKind {
    Pbf { selectivity: f64 },
    Anns { k: usize },
}

/// Builds boxes around anchors whose selectivity on a 10% sample meets a target.
///
/// Each dimension's half-width is a common multiple of its 1%-99% quantile
/// spread; the multiple is the smallest that captures the target share of
/// the sample.
pub struct PbfCalibrator {
    sample: Vec<f64>,
    dim: usize,
    unit: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

impl PbfCalibrator {
    pub fn new(data: &Dataset, seed: u64) -> Self {
        let n = data.len();
        let m = (n.div_ceil(10)).max(n.min(1000));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids = rand::seq::index::sample(&mut rng, n, m);
        let dim = data.dim();
        let mut sample = Vec::with_capacity(m * dim);
        for id in ids.iter() {
            sample.extend_from_slice(data.row(id));
        }
        let unit = (0..dim)
            .map(|j| {
                let mut col: Vec<f64> = sample.iter().skip(j).step_by(dim).copied().collect();
                col.sort_by(f64::total_cmp);
                let q = |p: f64| col[((col.len() - 1) as f64 * p).round() as usize];
                let spread = q(0.99) - q(0.01);
                if spread > 0.0 {
                    spread
                } else {
                    (col[col.len() - 1] - col[0]).max(1.0)
                }
            })
            .collect();
        Self {
            sample,
            dim,
            unit,
            bounds: data.bounds(),
        }
    }

    pub fn sample_len(&self) -> usize {
        self.sample.len() / self.dim
    }

    pub fn query(&self, anchor: &[f64], selectivity: f64) -> Result<PbfQuery> {
        if selectivity >= 1.0 {
            return Ok(PbfQuery::from_box(&self.bounds)?);
        }
        // Scale at which each sample point enters the box.
        let mut entry: Vec<f64> = self
            .sample
            .chunks_exact(self.dim)
            .map(|p| {
                p.iter()
                    .zip(anchor)
                    .zip(&self.unit)
                    .map(|((x, a), u)| (x - a).abs() / u)
                    .fold(0.0, f64::max)
            })
            .collect();
        let need = ((selectivity * entry.len() as f64).ceil() as usize).clamp(1, entry.len());
        let (_, s, _) = entry.select_nth_unstable_by(need - 1, f64::total_cmp);
        let s = *s;
        let b: Vec<(f64, f64)> = anchor
            .iter()
            .zip(&self.unit)
            .map(|(a, u)| (a - s * u, a + s * u))
            .collect();
        Ok(PbfQuery::from_box(&b)?)
    }
}

fn validate_kind(kind: QueryKind) -> Result<()> {
    match kind {
        QueryKind::Pbf { selectivity } if !(selectivity > 0.0 && selectivity <= 1.0) => {
            Err(relayout::Error::InvalidParameter {
                name: "selectivity",
                reason: format!("{selectivity} is outside (0, 1]"),
            }
            .into())
        }
        QueryKind::Anns { k: 0 } => Err(relayout::Error::InvalidParameter {
            name: "k",
            reason: "must be at least 1".into(),
        }
        .into()),
        _ => Ok(()),
    }
}

fn make_query(kind: QueryKind, anchor: &[f64], calib: Option<&PbfCalibrator>) -> Result<Query> {
    Ok(match kind {
        QueryKind::Pbf { selectivity } => Query::Pbf(calib.expect("calibrator").query(anchor, selectivity)?),
        QueryKind::Anns { k } => Query::Anns(AnnsQuery::new(anchor.to_vec(), k)?),
    })
}

/// Queries anchored at uniformly drawn data points.
pub fn generate_static_workload(data: &Dataset, kind: QueryKind, count: usize, seed: u64) -> Result<Vec<Query>> {
    validate_kind(kind)?;
    let calib = matches!(kind, QueryKind::Pbf { .. }).then(|| PbfCalibrator::new(data, seed ^ 0x5eed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| make_query(kind, data.row(rng.random_range(0..data.len())), calib.as_ref()))
        .collect()
}

/// Component id per row: the dataset's labels, or k-means with `components` clusters.
pub fn component_labels(data: &Dataset, components: usize, seed: u64) -> Result<Vec<usize>> {
    if let Some(l) = data.labels() {
        return Ok(l.to_vec());
    }
    let m = components.clamp(1, data.len());
    Ok(kmeans(data.flat(), data.dim(), m, seed, DEFAULT_MAX_ITERATIONS)?
        .assignment()
        .to_vec())
}

/// Window `w` anchors 90% of its queries in component `w mod C` and the rest
/// in uniformly chosen components.
pub fn generate_dynamic_workload(
    data: &Dataset,
    kind: QueryKind,
    windows: usize,
    per_window: usize,
    labels: &[usize],
    seed: u64,
) -> Result<Vec<SlidingWindow>> {
    validate_kind(kind)?;
    if windows == 0 || per_window == 0 {
        return Err(relayout::Error::InvalidParameter {
            name: "windows",
            reason: "windows and per_window must be positive".into(),
        }
        .into());
    }
    let c = labels.iter().max().map_or(0, |&m| m + 1);
    let mut members = vec![Vec::new(); c];
    for (id, &l) in labels.iter().enumerate() {
        members[l].push(id);
    }
    let populated: Vec<usize> = (0..c).filter(|&i| !members[i].is_empty()).collect();
    let calib = matches!(kind, QueryKind::Pbf { .. }).then(|| PbfCalibrator::new(data, seed ^ 0x5eed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..windows)
        .map(|w| {
            let home = populated[w % populated.len()];
            let mut win = SlidingWindow::new(w, per_window)?;
            for _ in 0..per_window {
                let comp = if rng.random::<f64>() < CONTAMINATION {
                    *populated.choose(&mut rng).unwrap()
                } else {
                    home
                };
                let id = *members[comp].choose(&mut rng).unwrap();
                win.push(make_query(kind, data.row(id), calib.as_ref())?, data)?;
            }
            Ok(win)
        })
        .collect()
}
