use super::{IndexAdapter, PhysicalLayout};
use crate::error::Result;
use crate::model::{distance, AnnsQuery, PbfQuery, QueryResult};
use crate::query::CandidateSet;

/// Skips partitions whose bounding box cannot contain a result. Exact.
#[derive(Debug, Clone, Copy)]
pub struct Zonemap<'a> {
    layout: &'a PhysicalLayout,
}

impl<'a> Zonemap<'a> {
    pub fn new(layout: &'a PhysicalLayout) -> Self {
        Self { layout }
    }

    /// Indices of partitions whose box meets the predicate box.
    pub fn candidate_partitions(&self, q: &PbfQuery) -> Vec<usize> {
        self.layout
            .partitions()
            .iter()
            .enumerate()
            .filter(|(_, p)| q.intersects_box(&p.mins, &p.maxs))
            .map(|(i, _)| i)
            .collect()
    }
}

impl IndexAdapter for Zonemap<'_> {
    fn name(&self) -> &'static str {
        "zonemap"
    }

    fn partition_count(&self) -> usize {
        self.layout.partitions().len()
    }

    /// Best-first over partitions by box distance; stops once no box can beat the k-th hit.
    fn query_knn(&self, q: &AnnsQuery) -> Result<QueryResult> {
        let l = self.layout;
        l.check_dim(q.dim())?;
        l.check_k(q.k())?;
        let mut order: Vec<(f64, usize)> = l
            .partitions()
            .iter()
            .enumerate()
            .map(|(i, p)| (p.box_distance_sq(q.center()).sqrt(), i))
            .collect();
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut can = CandidateSet::new(q.k());
        let (mut touched, mut examined) = (0, 0);
        for (bound, i) in order {
            if can.is_full() && bound > can.max() {
                break;
            }
            let p = &l.partitions()[i];
            touched += 1;
            examined += p.len();
            for pos in p.start..p.end {
                can.offer(l.id(pos), distance(l.row(pos), q.center()));
            }
        }
        Ok(QueryResult::knn(can.into_sorted(), touched, examined))
    }

    fn query_range(&self, q: &PbfQuery) -> Result<QueryResult> {
        let l = self.layout;
        l.check_dim(q.dim())?;
        let mut ids = Vec::new();
        let (mut touched, mut examined) = (0, 0);
        for i in self.candidate_partitions(q) {
            let p = &l.partitions()[i];
            touched += 1;
            examined += p.len();
            ids.extend((p.start..p.end).filter(|&pos| q.matches(l.row(pos))).map(|pos| l.id(pos)));
        }
        Ok(QueryResult::range(ids, touched, examined))
    }
}
