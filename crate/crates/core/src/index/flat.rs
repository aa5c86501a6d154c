use super::{IndexAdapter, PhysicalLayout};
use crate::error::Result;
use crate::model::{distance, AnnsQuery, PbfQuery, QueryResult};
use crate::query::CandidateSet;

/// Exact linear scan over every partition.
#[derive(Debug, Clone, Copy)]
pub struct FlatScan<'a> {
    layout: &'a PhysicalLayout,
}

impl<'a> FlatScan<'a> {
    pub fn new(layout: &'a PhysicalLayout) -> Self {
        Self { layout }
    }
}

impl IndexAdapter for FlatScan<'_> {
    fn name(&self) -> &'static str {
        "flat"
    }

    fn partition_count(&self) -> usize {
        self.layout.partitions().len()
    }

    fn query_knn(&self, q: &AnnsQuery) -> Result<QueryResult> {
        let l = self.layout;
        l.check_dim(q.dim())?;
        l.check_k(q.k())?;
        let mut can = CandidateSet::new(q.k());
        for pos in 0..l.len() {
            can.offer(l.id(pos), distance(l.row(pos), q.center()));
        }
        Ok(QueryResult::knn(can.into_sorted(), self.partition_count(), l.len()))
    }

    fn query_range(&self, q: &PbfQuery) -> Result<QueryResult> {
        let l = self.layout;
        l.check_dim(q.dim())?;
        let ids = (0..l.len()).filter(|&p| q.matches(l.row(p))).map(|p| l.id(p)).collect();
        Ok(QueryResult::range(ids, self.partition_count(), l.len()))
    }
}
