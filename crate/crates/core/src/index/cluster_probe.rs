use super::{IndexAdapter, PhysicalLayout};
use crate::error::{Error, Result};
use crate::model::{distance, AnnsQuery, PbfQuery, QueryResult};
use crate::optimizer::{kmeans, DEFAULT_MAX_ITERATIONS};
use crate::query::CandidateSet;

pub const DEFAULT_N_PROBE: usize = 8;

/// Inverted lists keyed by centroid; a query scans the `n_probe` nearest lists.
#[derive(Debug, Clone)]
pub struct ClusterProbe<'a> {
    layout: &'a PhysicalLayout,
    centroids: Vec<f64>,
    /// Layout positions per centroid, ascending.
    lists: Vec<Vec<usize>>,
    n_probe: usize,
}

impl<'a> ClusterProbe<'a> {
    /// Centroids are member means in the original coordinates. Empty clusters are dropped.
    pub fn from_assignment(layout: &'a PhysicalLayout, assignment: &[usize], n_probe: usize) -> Result<Self> {
        if assignment.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                got: assignment.len(),
            });
        }
        if n_probe == 0 {
            return Err(Error::invalid("n_probe", "must be at least 1"));
        }
        let dim = layout.dim();
        let m = assignment.iter().max().map_or(0, |&a| a + 1);
        let mut lists = vec![Vec::new(); m];
        for pos in 0..layout.len() {
            lists[assignment[layout.id(pos)]].push(pos);
        }
        lists.retain(|l| !l.is_empty());
        let mut centroids = Vec::with_capacity(lists.len() * dim);
        for list in &lists {
            let mut c = vec![0.0; dim];
            for &pos in list {
                for (s, x) in c.iter_mut().zip(layout.row(pos)) {
                    *s += x;
                }
            }
            centroids.extend(c.into_iter().map(|s| s / list.len() as f64));
        }
        Ok(Self {
            layout,
            centroids,
            lists,
            n_probe,
        })
    }

    pub fn with_kmeans(layout: &'a PhysicalLayout, clusters: usize, n_probe: usize, seed: u64) -> Result<Self> {
        let flat: Vec<f64> = (0..layout.len()).flat_map(|p| layout.row(p).iter().copied()).collect();
        let model = kmeans(&flat, layout.dim(), clusters.min(layout.len()), seed, DEFAULT_MAX_ITERATIONS)?;
        let mut by_id = vec![0; layout.len()];
        for (pos, &c) in model.assignment().iter().enumerate() {
            by_id[layout.id(pos)] = c;
        }
        Self::from_assignment(layout, &by_id, n_probe)
    }

    pub fn centroid_count(&self) -> usize {
        self.lists.len()
    }

    pub fn n_probe(&self) -> usize {
        self.n_probe
    }

    pub fn set_n_probe(&mut self, n_probe: usize) {
        self.n_probe = n_probe.max(1);
    }
}

impl IndexAdapter for ClusterProbe<'_> {
    fn name(&self) -> &'static str {
        "cluster_probe"
    }

    fn partition_count(&self) -> usize {
        self.layout.partitions().len()
    }

    fn query_knn(&self, q: &AnnsQuery) -> Result<QueryResult> {
        let l = self.layout;
        l.check_dim(q.dim())?;
        l.check_k(q.k())?;
        let dim = l.dim();
        let mut order: Vec<(f64, usize)> = self
            .centroids
            .chunks_exact(dim)
            .enumerate()
            .map(|(i, c)| (distance(c, q.center()), i))
            .collect();
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut can = CandidateSet::new(q.k());
        let mut parts = vec![false; l.partitions().len()];
        let mut examined = 0;
        for &(_, c) in order.iter().take(self.n_probe) {
            for &pos in &self.lists[c] {
                parts[l.partition_of(pos)] = true;
                can.offer(l.id(pos), distance(l.row(pos), q.center()));
            }
            examined += self.lists[c].len();
        }
        let touched = parts.iter().filter(|&&b| b).count();
        Ok(QueryResult::knn(can.into_sorted(), touched, examined))
    }

    fn query_range(&self, _q: &PbfQuery) -> Result<QueryResult> {
        Err(Error::Unsupported {
            adapter: "cluster_probe",
            operation: "range",
        })
    }
}
