//! Upper-level indexes built over a physical layout.
//!
//! Every adapter reports results in original row ids and counts the
//! partitions it touched.

mod cluster_probe;
mod flat;
mod zonemap;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cluster_probe::{ClusterProbe, DEFAULT_N_PROBE};
pub use flat::FlatScan;
pub use zonemap::Zonemap;

use crate::error::{Error, Result};
use crate::model::{AnnsQuery, Dataset, PbfQuery, Query, QueryResult};
use crate::optimizer::{OptimizedLayout, PartitionMeta};

pub trait IndexAdapter {
    fn name(&self) -> &'static str;

    fn partition_count(&self) -> usize;

    fn query_knn(&self, q: &AnnsQuery) -> Result<QueryResult>;

    fn query_range(&self, q: &PbfQuery) -> Result<QueryResult>;
}

/// Route a query to the matching adapter method.
pub fn static_query(index: &dyn IndexAdapter, q: &Query) -> Result<QueryResult> {
    match q {
        Query::Pbf(p) => index.query_range(p),
        Query::Anns(a) => index.query_knn(a),
    }
}

/// Rows copied into layout order, with zone metadata per partition.
#[derive(Debug, Clone)]
pub struct PhysicalLayout {
    rows: Dataset,
    ids: Vec<usize>,
    partition_size: usize,
    partitions: Vec<PartitionMeta>,
}

impl PhysicalLayout {
    pub fn new(original: &Dataset, layout: &OptimizedLayout) -> Result<Self> {
        if original.len() != layout.len() || original.dim() != layout.dim() {
            return Err(Error::invalid("layout", "layout does not describe this dataset"));
        }
        Ok(Self {
            rows: original.gather(layout.permutation())?,
            ids: layout.permutation().to_vec(),
            partition_size: layout.partition_size(),
            partitions: layout.partitions().to_vec(),
        })
    }

    /// Uniformly shuffled baseline with the same partition size.
    pub fn shuffled(original: &Dataset, partition_size: usize, seed: u64) -> Result<Self> {
        let mut order: Vec<usize> = (0..original.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let layout = OptimizedLayout::from_order(original, order, None, partition_size)?;
        Self::new(original, &layout)
    }

    pub fn dim(&self) -> usize {
        self.rows.dim()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Coordinates at a layout position.
    pub fn row(&self, pos: usize) -> &[f64] {
        self.rows.row(pos)
    }

    /// Original row id at a layout position.
    pub fn id(&self, pos: usize) -> usize {
        self.ids[pos]
    }

    pub fn partitions(&self) -> &[PartitionMeta] {
        &self.partitions
    }

    pub fn partition_of(&self, pos: usize) -> usize {
        pos / self.partition_size
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.len() {
            return Err(Error::invalid("k", format!("{k} exceeds {} rows", self.len())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    Flat,
    Zonemap,
    ClusterProbe,
}

impl AdapterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AdapterKind::Flat => "flat",
            AdapterKind::Zonemap => "zonemap",
            AdapterKind::ClusterProbe => "cluster_probe",
        }
    }

    pub fn is_exact(self) -> bool {
        !matches!(self, AdapterKind::ClusterProbe)
    }
}

impl fmt::Display for AdapterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdapterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(AdapterKind::Flat),
            "zonemap" => Ok(AdapterKind::Zonemap),
            "cluster_probe" => Ok(AdapterKind::ClusterProbe),
            other => Err(Error::invalid(
                "adapter",
                format!("unknown adapter `{other}` (flat | zonemap | cluster_probe)"),
            )),
        }
    }
}

/// Build options for [`build_adapter`].
#[derive(Debug, Clone, Default)]
pub struct AdapterOptions<'a> {
    pub n_probe: Option<usize>,
    /// Cluster id per original row; without it the probe index runs its own k-means.
    pub assignment: Option<&'a [usize]>,
    pub clusters: Option<usize>,
    pub seed: u64,
}

pub fn build_adapter<'a>(
    kind: AdapterKind,
    layout: &'a PhysicalLayout,
    options: &AdapterOptions<'_>,
) -> Result<Box<dyn IndexAdapter + 'a>> {
    Ok(match kind {
        AdapterKind::Flat => Box::new(FlatScan::new(layout)),
        AdapterKind::Zonemap => Box::new(Zonemap::new(layout)),
        AdapterKind::ClusterProbe => {
            let n_probe = options.n_probe.unwrap_or(DEFAULT_N_PROBE);
            match options.assignment {
                Some(a) => Box::new(ClusterProbe::from_assignment(layout, a, n_probe)?),
                None => {
                    let m = options
                        .clusters
                        .unwrap_or_else(|| crate::optimizer::default_cluster_count(layout.len(), 100));
                    Box::new(ClusterProbe::with_kmeans(layout, m, n_probe, options.seed)?)
                }
            }
        }
    })
}
