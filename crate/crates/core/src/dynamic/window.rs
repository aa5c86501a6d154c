use crate::error::{Error, Result};
use crate::model::{Dataset, Query, QueryPoint};
use crate::workload::Workload;

pub const DEFAULT_WINDOW_CAPACITY: usize = 2000;

/// A bounded batch of consecutive queries. Arrival order is preserved.
#[derive(Debug, Clone, Default)]
pub struct SlidingWindow {
    index: usize,
    capacity: usize,
    workload: Workload,
}

impl SlidingWindow {
    pub fn new(index: usize, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("window_capacity", "must be at least 1"));
        }
        Ok(Self {
            index,
            capacity,
            workload: Workload::new(),
        })
    }

    pub fn from_queries(index: usize, capacity: usize, queries: Vec<Query>, data: &Dataset) -> Result<Self> {
        let mut w = Self::new(index, capacity)?;
        for q in queries {
            w.push(q, data)?;
        }
        Ok(w)
    }

    pub fn push(&mut self, query: Query, data: &Dataset) -> Result<()> {
        if self.is_full() {
            return Err(Error::invalid("window", format!("window {} is full ({})", self.index, self.capacity)));
        }
        self.workload.push(query, data)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.workload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.workload.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() >= self.capacity
    }

    pub fn queries(&self) -> &[Query] {
        self.workload.queries()
    }

    pub fn points(&self) -> &[QueryPoint] {
        self.workload.points()
    }

    pub fn workload(&self) -> &Workload {
        &self.workload
    }
}
