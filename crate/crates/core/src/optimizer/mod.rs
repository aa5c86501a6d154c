//! Static layout optimization.
//!
//! Pipeline: stack data and query points, reshape by dimension importance and
//! value distribution, pull rows together by gravity, cluster, map each data
//! row to a one-dimensional KEY, and store the original rows sorted by KEY in
//! equal-size partitions.

mod cluster;
mod gravity;
mod layout;
mod metrics;
mod transform;

pub use cluster::{compute_keys, kmeans, ClusterModel, DEFAULT_MAX_ITERATIONS};
pub use gravity::{
    average_nn_distance, gravity_move, GravityParams, DEFAULT_GRAVITY_CONSTANT, DEFAULT_RADIUS_MULTIPLIER,
};
pub use layout::{partition_layout, read_layout, write_layout, LayoutHeader, OptimizedLayout, PartitionMeta};
pub use metrics::{calinski_harabasz, clustering_metrics, normalized_mutual_information, silhouette, ClusterQuality};
pub use transform::{
    build_frequency_matrix, build_importance_matrix, compute_bin_count, compute_bin_width, transform, BinCount,
    BinWidth, FrequencyMatrix, ImportanceMatrix, IMPORTANCE_SMOOTHING,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::workload::{concat, ConcatMatrix, Workload};

pub const DEFAULT_PARTITION_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub partition_size: usize,
    /// Cluster count; `None` uses [`default_cluster_count`].
    pub clusters: Option<usize>,
    /// Query influence numerator (`tau = gamma / N_q`); `None` uses `N_d`.
    pub gamma: Option<f64>,
    pub radius_multiplier: f64,
    pub gravity_constant: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub apply_transform: bool,
    pub apply_gravity: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            partition_size: DEFAULT_PARTITION_SIZE,
            clusters: None,
            gamma: None,
            radius_multiplier: DEFAULT_RADIUS_MULTIPLIER,
            gravity_constant: DEFAULT_GRAVITY_CONSTANT,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed: 0,
            apply_transform: true,
            apply_gravity: true,
        }
    }
}

/// `max(8, round(sqrt(n / partition_size)))`, capped at `n`.
pub fn default_cluster_count(n: usize, partition_size: usize) -> usize {
    let m = ((n as f64 / partition_size.max(1) as f64).sqrt().round() as usize).max(8);
    m.min(n)
}

/// Intermediate matrices; rows keep the order of the stacked input.
#[derive(Debug, Clone)]
pub struct AdjustedData {
    pub transformed: ConcatMatrix,
    pub adjusted: ConcatMatrix,
}

#[derive(Debug, Clone)]
pub struct StaticOutput {
    pub layout: OptimizedLayout,
    pub model: ClusterModel,
    /// KEY per row id.
    pub keys: Vec<f64>,
    pub adjusted: AdjustedData,
    pub importance: ImportanceMatrix,
    pub frequency: FrequencyMatrix,
    /// Average nearest-neighbor distance `G`, when gravity ran.
    pub nn_scale: Option<f64>,
}

pub fn optimize(data: &Dataset, workload: &Workload, config: &OptimizerConfig) -> Result<StaticOutput> {
    if config.partition_size == 0 {
        return Err(Error::invalid("partition_size", "must be at least 1"));
    }
    let dim = data.dim();
    let stacked = concat(data, workload)?;

    let (importance, frequency) = if config.apply_transform {
        (build_importance_matrix(data, workload), build_frequency_matrix(&stacked)?)
    } else {
        (ImportanceMatrix::identity(dim), FrequencyMatrix::identity(dim))
    };
    let transformed = if config.apply_transform {
        transform(&stacked, &importance, &frequency)?
    } else {
        stacked
    };

    let mut nn_scale = None;
    let adjusted = if config.apply_gravity && transformed.len() >= 2 {
        match average_nn_distance(transformed.flat(), dim) {
            Ok(g) => {
                nn_scale = Some(g);
                let gamma = config.gamma.unwrap_or(data.len() as f64);
                let mut params = GravityParams::with_defaults(g, gamma, workload.len());
                params.radius = config.radius_multiplier * g;
                params.constant = config.gravity_constant;
                gravity_move(&transformed, &params)?
            }
            Err(Error::DegenerateScale) => transformed.clone(),
            Err(e) => return Err(e),
        }
    } else {
        transformed.clone()
    };

    let m = config
        .clusters
        .unwrap_or_else(|| default_cluster_count(data.len(), config.partition_size));
    let model = kmeans(adjusted.data_rows(), dim, m, config.seed, config.max_iterations)?;
    let keys = compute_keys(adjusted.data_rows(), &model)?;
    let mut layout = partition_layout(data, &keys, config.partition_size)?;
    layout.set_header(LayoutHeader {
        clusters: m as u64,
        seed: config.seed,
    });

    Ok(StaticOutput {
        layout,
        model,
        keys,
        adjusted: AdjustedData { transformed, adjusted },
        importance,
        frequency,
        nn_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnnsQuery, Query};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn mixture(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.02).unwrap();
        let centers: Vec<[f64; 3]> = (0..4).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let c = rng.random_range(0..4);
            rows.push(centers[c].iter().map(|x| x + noise.sample(&mut rng)).collect::<Vec<f64>>());
            labels.push(c);
        }
        Dataset::from_rows(&rows).unwrap().with_labels(labels).unwrap()
    }

    fn workload(d: &Dataset, n: usize, seed: u64) -> Workload {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qs = (0..n)
            .map(|_| Query::Anns(AnnsQuery::new(d.row(rng.random_range(0..d.len())).to_vec(), 5).unwrap()))
            .collect();
        Workload::from_queries(qs, d).unwrap()
    }

    #[test]
    fn pipeline_is_deterministic() {
        let d = mixture(600, 1);
        let w = workload(&d, 20, 2);
        let cfg = OptimizerConfig {
            partition_size: 50,
            seed: 3,
            ..Default::default()
        };
        let a = optimize(&d, &w, &cfg).unwrap();
        let b = optimize(&d, &w, &cfg).unwrap();
        assert_eq!(a.layout, b.layout);
        assert_eq!(a.layout.header().clusters, 8);
    }

    #[test]
    fn layout_invariants_hold() {
        let d = mixture(500, 4);
        let w = workload(&d, 10, 5);
        let out = optimize(&d, &w, &OptimizerConfig {
            partition_size: 64,
            ..Default::default()
        })
        .unwrap();
        let l = &out.layout;
        let mut ids = l.permutation().to_vec();
        ids.sort_unstable();
        assert_eq!(ids, (0..500).collect::<Vec<_>>());
        assert!(l.keys().windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(l.partitions().len(), 8);
        for p in l.partitions() {
            for &id in &l.permutation()[p.start..p.end] {
                for (j, &x) in d.row(id).iter().enumerate() {
                    assert!(p.mins[j] <= x && x <= p.maxs[j]);
                }
            }
        }
        assert_eq!(out.adjusted.adjusted.len(), 510);
        assert!(out.nn_scale.unwrap() > 0.0);
        let c = out.model.centroid();
        for j in 0..3 {
            let mean = (0..out.model.cluster_count()).map(|k| out.model.center(k)[j]).sum::<f64>()
                / out.model.cluster_count() as f64;
            assert!((c[j] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn ablation_switches() {
        let d = mixture(300, 7);
        let cfg = OptimizerConfig {
            apply_transform: false,
            apply_gravity: false,
            partition_size: 30,
            ..Default::default()
        };
        let out = optimize(&d, &Workload::new(), &cfg).unwrap();
        assert_eq!(out.adjusted.adjusted.flat(), d.flat());
        assert!(out.nn_scale.is_none());
    }

    #[test]
    fn cluster_count_default() {
        assert_eq!(default_cluster_count(10_000, 100), 10);
        assert_eq!(default_cluster_count(1_000, 100), 8);
        assert_eq!(default_cluster_count(5, 100), 5);
    }
}
