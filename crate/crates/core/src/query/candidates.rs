use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::{neighbor_order, Neighbor};

#[derive(Debug, Clone, Copy)]
struct Worst(Neighbor);

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Worst {}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        neighbor_order(&self.0, &other.0)
    }
}

/// Bounded collection keeping the `capacity` best neighbors, worst on top.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    capacity: usize,
    heap: BinaryHeap<Worst>,
}

impl CandidateSet {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            heap: BinaryHeap::with_capacity(capacity.max(1) + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() >= self.capacity
    }

    /// Largest distance held, or infinity when empty.
    pub fn max(&self) -> f64 {
        self.heap.peek().map_or(f64::INFINITY, |w| w.0.distance)
    }

    /// Insert if there is room or `(distance, id)` beats the current worst.
    pub fn offer(&mut self, id: usize, distance: f64) -> bool {
        let n = Neighbor { id, distance };
        if !self.is_full() {
            self.heap.push(Worst(n));
            return true;
        }
        let worst = self.heap.peek().unwrap().0;
        if neighbor_order(&n, &worst) == Ordering::Less {
            self.heap.pop();
            self.heap.push(Worst(n));
            true
        } else {
            false
        }
    }

    /// Ascending by distance, ties by id.
    pub fn into_sorted(self) -> Vec<Neighbor> {
        self.heap.into_sorted_vec().into_iter().map(|w| w.0).collect()
    }
}
