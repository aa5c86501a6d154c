//! Candidate layout pool: admission by cost-vector distance, cumulative cost
//! bookkeeping, weighted switching and pruning.

use std::io::{Read, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::partial::{estimate_query_cost, DisPartition, PartialLayout};
use super::sampling::{DEFAULT_DECAY, DEFAULT_SAMPLE_SIZE};
use super::window::DEFAULT_WINDOW_CAPACITY;
use crate::error::{Error, Result};
use crate::model::{distance, Dataset};

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 60.0;
pub const DEFAULT_BETA: f64 = 1.0 / 50.0;
/// Normalized per-query cost charged to the full optimized layout.
pub const DEFAULT_OPTIMIZED_COST: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub window_capacity: usize,
    pub sample_size: usize,
    pub decay: f64,
    /// Additive constant in the radius rule `N_l * F(r) = k + c_r`.
    pub c_r: f64,
    pub optimized_cost: f64,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            window_capacity: DEFAULT_WINDOW_CAPACITY,
            sample_size: DEFAULT_SAMPLE_SIZE,
            decay: DEFAULT_DECAY,
            c_r: 0.0,
            optimized_cost: DEFAULT_OPTIMIZED_COST,
        }
    }
}

impl PoolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon", "must be non-negative"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid("beta", "must lie in (0, 1]"));
        }
        if self.window_capacity == 0 || self.sample_size == 0 {
            return Err(Error::invalid("sample_size", "window capacity and sample size must be positive"));
        }
        if !(self.decay >= 0.0) {
            return Err(Error::invalid("decay", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.optimized_cost) {
            return Err(Error::invalid("optimized_cost", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PoolLayout {
    /// The full optimized layout behind the upper-level index.
    Optimized,
    Partial(PartialLayout),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub layout: PoolLayout,
    pub cost_vector: Vec<f64>,
    pub ctotal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwitchOutcome {
    pub switched: bool,
    pub active: usize,
}

/// `Diff(C_i, C_j)`: Euclidean distance between cost vectors.
pub fn cost_distance(a: &[f64], b: &[f64]) -> f64 {
    distance(a, b)
}

/// Entry 0 is always the optimized layout. Exactly one entry is active.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutPool {
    config: PoolConfig,
    entries: Vec<PoolEntry>,
    active: usize,
    switches: usize,
}

impl LayoutPool {
    pub fn new(config: PoolConfig) -> Result<Self> {
        config.validate()?;
        let entry = PoolEntry {
            layout: PoolLayout::Optimized,
            cost_vector: vec![config.optimized_cost; config.sample_size],
            ctotal: 0.0,
        };
        Ok(Self {
            config,
            entries: vec![entry],
            active: 0,
            switches: 0,
        })
    }

    pub fn config(&self) -> &PoolConfig {
        &self.config
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn active_partial(&self) -> Option<&PartialLayout> {
        match &self.entries[self.active].layout {
            PoolLayout::Partial(l) => Some(l),
            PoolLayout::Optimized => None,
        }
    }

    pub fn switch_count(&self) -> usize {
        self.switches
    }

    /// Smallest distance from `cost` to any pooled cost vector.
    pub fn min_distance(&self, cost: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|e| cost_distance(cost, &e.cost_vector))
            .fold(f64::INFINITY, f64::min)
    }

    /// Admit iff every pooled cost vector is farther than epsilon. New entries start at zero cost.
    pub fn admit(&mut self, layout: PartialLayout, cost: Vec<f64>) -> Result<bool> {
        if cost.len() != self.config.sample_size {
            return Err(Error::DimensionMismatch {
                expected: self.config.sample_size,
                got: cost.len(),
            });
        }
        if self.min_distance(&cost) <= self.config.epsilon {
            return Ok(false);
        }
        self.entries.push(PoolEntry {
            layout: PoolLayout::Partial(layout),
            cost_vector: cost,
            ctotal: 0.0,
        });
        Ok(true)
    }

    pub fn entry_cost(&self, index: usize, q: &[f64], k: usize) -> Result<f64> {
        match &self.entries[index].layout {
            PoolLayout::Optimized => Ok(self.config.optimized_cost),
            PoolLayout::Partial(l) => estimate_query_cost(l, q, k, self.config.c_r),
        }
    }

    /// `w_j = max(0, alpha - ctotal_j) / alpha`.
    pub fn switch_weights(&self) -> Vec<f64> {
        let a = self.config.alpha;
        self.entries.iter().map(|e| (a - e.ctotal).max(0.0) / a).collect()
    }

    /// Charge every entry its estimated cost for `q` and switch if the active entry exceeded alpha.
    pub fn accumulate_and_maybe_switch<R: Rng + ?Sized>(
        &mut self,
        q: &[f64],
        k: usize,
        rng: &mut R,
    ) -> Result<SwitchOutcome> {
        let costs = (0..self.entries.len())
            .map(|i| self.entry_cost(i, q, k))
            .collect::<Result<Vec<_>>>()?;
        self.accumulate_costs(&costs, rng)
    }

    /// As [`Self::accumulate_and_maybe_switch`] with precomputed per-entry costs.
    pub fn accumulate_costs<R: Rng + ?Sized>(&mut self, costs: &[f64], rng: &mut R) -> Result<SwitchOutcome> {
        if costs.len() != self.entries.len() {
            return Err(Error::DimensionMismatch {
                expected: self.entries.len(),
                got: costs.len(),
            });
        }
        for (e, c) in self.entries.iter_mut().zip(costs) {
            e.ctotal += c;
        }
        if self.entries[self.active].ctotal <= self.config.alpha {
            return Ok(SwitchOutcome {
                switched: false,
                active: self.active,
            });
        }
        self.active = self.draw(rng);
        for e in &mut self.entries {
            e.ctotal = 0.0;
        }
        self.switches += 1;
        Ok(SwitchOutcome {
            switched: true,
            active: self.active,
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match WeightedIndex::new(self.switch_weights()) {
            Ok(dist) => dist.sample(rng),
            Err(_) => 0,
        }
    }

    /// True when every pair of entries is farther apart than epsilon.
    pub fn is_separated(&self) -> bool {
        let eps = self.config.epsilon;
        self.entries.iter().enumerate().all(|(i, a)| {
            self.entries[i + 1..]
                .iter()
                .all(|b| cost_distance(&a.cost_vector, &b.cost_vector) > eps)
        })
    }

    /// Greedily drop entries within epsilon of a retained one. The optimized
    /// layout and the active entry are always retained. Returns the number removed.
    pub fn prune(&mut self) -> usize {
        let eps = self.config.epsilon;
        let mut keep = vec![false; self.entries.len()];
        keep[0] = true;
        keep[self.active] = true;
        let mut retained: Vec<usize> = if self.active == 0 { vec![0] } else { vec![0, self.active] };
        for i in 1..self.entries.len() {
            if keep[i] {
                continue;
            }
            let v = &self.entries[i].cost_vector;
            if retained
                .iter()
                .all(|&r| cost_distance(v, &self.entries[r].cost_vector) > eps)
            {
                keep[i] = true;
                retained.push(i);
            }
        }
        let before = self.entries.len();
        let active_id = self.active;
        let mut new_active = 0;
        let mut idx = 0;
        self.entries.retain(|_| {
            let k = keep[idx];
            if k && idx == active_id {
                new_active = keep[..idx].iter().filter(|&&x| x).count();
            }
            idx += 1;
            k
        });
        self.active = new_active;
        before - self.entries.len()
    }

    pub fn snapshot(&self) -> PoolSnapshot {
        PoolSnapshot {
            config: self.config.clone(),
            active: self.active,
            switches: self.switches,
            entries: self
                .entries
                .iter()
                .map(|e| EntrySnapshot {
                    layout: match &e.layout {
                        PoolLayout::Optimized => LayoutSnapshot::Optimized,
                        PoolLayout::Partial(l) => LayoutSnapshot::Partial {
                            source_window: l.source_window(),
                            representative: l.representative().to_vec(),
                            beta: l.beta(),
                            partition_size: l.partition_size(),
                            partitions: l.partitions().to_vec(),
                        },
                    },
                    cost_vector: e.cost_vector.clone(),
                    ctotal: e.ctotal,
                })
                .collect(),
        }
    }

    /// Rebuild partial layouts from their anchors and check them against the snapshot.
    pub fn restore(snapshot: PoolSnapshot, data: &Dataset) -> Result<Self> {
        snapshot.config.validate()?;
        if snapshot.entries.is_empty() || snapshot.active >= snapshot.entries.len() {
            return Err(Error::Format("pool snapshot has no valid active entry".into()));
        }
        if !matches!(snapshot.entries[0].layout, LayoutSnapshot::Optimized) {
            return Err(Error::Format("pool snapshot must start with the optimized layout".into()));
        }
        let mut entries = Vec::with_capacity(snapshot.entries.len());
        for (i, e) in snapshot.entries.into_iter().enumerate() {
            if e.cost_vector.len() != snapshot.config.sample_size {
                return Err(Error::Format(format!("entry {i}: cost vector length {}", e.cost_vector.len())));
            }
            let layout = match e.layout {
                LayoutSnapshot::Optimized if i == 0 => PoolLayout::Optimized,
                LayoutSnapshot::Optimized => {
                    return Err(Error::Format(format!("entry {i}: duplicate optimized layout")));
                }
                LayoutSnapshot::Partial {
                    source_window,
                    representative,
                    beta,
                    partition_size,
                    partitions,
                } => {
                    let l = PartialLayout::around(data, &representative, beta, partition_size, source_window)?;
                    if l.partitions() != partitions.as_slice() {
                        return Err(Error::Format(format!("entry {i}: partitions do not match the dataset")));
                    }
                    PoolLayout::Partial(l)
                }
            };
            entries.push(PoolEntry {
                layout,
                cost_vector: e.cost_vector,
                ctotal: e.ctotal,
            });
        }
        Ok(Self {
            config: snapshot.config,
            entries,
            active: snapshot.active,
            switches: snapshot.switches,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayoutSnapshot {
    Optimized,
    Partial {
        source_window: usize,
        representative: Vec<f64>,
        beta: f64,
        partition_size: usize,
        partitions: Vec<DisPartition>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntrySnapshot {
    #[serde(flatten)]
    pub layout: LayoutSnapshot,
    pub cost_vector: Vec<f64>,
    pub ctotal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSnapshot {
    pub config: PoolConfig,
    pub active: usize,
    pub switches: usize,
    pub entries: Vec<EntrySnapshot>,
}

pub fn write_snapshot<W: Write>(out: W, snapshot: &PoolSnapshot) -> Result<()> {
    serde_json::to_writer_pretty(out, snapshot)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(input: R) -> Result<PoolSnapshot> {
    Ok(serde_json::from_reader(input)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config(s: usize) -> PoolConfig {
        PoolConfig {
            sample_size: s,
            ..Default::default()
        }
    }

    fn dummy_layout(w: usize) -> PartialLayout {
        let d = Dataset::from_flat(1, (0..20).map(f64::from).collect()).unwrap();
        PartialLayout::around(&d, &[w as f64], 0.5, 4, w).unwrap()
    }

    fn pool_with(vectors: &[Vec<f64>]) -> LayoutPool {
        let mut p = LayoutPool::new(small_config(vectors[0].len())).unwrap();
        for (i, v) in vectors.iter().enumerate() {
            p.entries.push(PoolEntry {
                layout: PoolLayout::Partial(dummy_layout(i)),
                cost_vector: v.clone(),
                ctotal: 0.0,
            });
        }
        p
    }

    #[test]
    fn admission_is_strict() {
        let mut p = LayoutPool::new(small_config(1)).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p.admit(dummy_layout(0), vec![0.9]).unwrap());
        assert!(!p.admit(dummy_layout(1), vec![0.9]).unwrap());
        // 0.5 + 0.1 sits exactly epsilon away from the optimized layout's vector.
        let mut q = LayoutPool::new(small_config(1)).unwrap();
        let at = 0.5 + DEFAULT_EPSILON;
        assert_eq!(cost_distance(&[at], &[0.5]), (at - 0.5).abs());
        let admitted = q.admit(dummy_layout(2), vec![at]).unwrap();
        assert_eq!(admitted, (at - 0.5) > DEFAULT_EPSILON);
        assert!(q.admit(dummy_layout(3), vec![0.5 + 0.101]).unwrap());
        assert!(q.admit(dummy_layout(3), vec![0.9, 0.1]).is_err());
    }

    #[test]
    fn boundary_uses_exact_distance() {
        // Diff exactly 0.10 from the all-zero optimized vector.
        let mut p = LayoutPool::new(PoolConfig {
            sample_size: 2,
            optimized_cost: 0.0,
            ..Default::default()
        })
        .unwrap();
        assert!(!p.admit(dummy_layout(0), vec![0.1, 0.0]).unwrap());
        assert!(p.admit(dummy_layout(0), vec![0.0, 0.101]).unwrap());
    }

    #[test]
    fn below_threshold_does_not_switch() {
        let mut p = pool_with(&[vec![0.9]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        p.entries[0].ctotal = DEFAULT_ALPHA - 0.5;
        let out = p.accumulate_costs(&[0.4, 0.1], &mut rng).unwrap();
        assert!(!out.switched);
        assert!((p.entries[0].ctotal - (DEFAULT_ALPHA - 0.1)).abs() < 1e-12);
        assert!((p.entries[1].ctotal - 0.1).abs() < 1e-12);
    }

    #[test]
    fn switch_resets_and_picks_only_viable_entry() {
        let mut p = pool_with(&[vec![0.9], vec![0.1]]);
        p.entries[0].ctotal = 70.0;
        p.entries[1].ctotal = 80.0;
        p.entries[2].ctotal = 10.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = p.accumulate_costs(&[0.0; 3], &mut rng).unwrap();
        assert!(out.switched);
        assert_eq!(out.active, 2);
        assert!(p.entries.iter().all(|e| e.ctotal == 0.0));
        assert_eq!(p.switch_count(), 1);
    }

    #[test]
    fn all_exhausted_falls_back_to_optimized() {
        let mut p = pool_with(&[vec![0.9]]);
        p.active = 1;
        p.entries[0].ctotal = 100.0;
        p.entries[1].ctotal = 100.0;
        let out = p.accumulate_costs(&[0.0, 0.0], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.active, 0);
    }

    #[test]
    fn selection_frequencies_follow_weights() {
        let mut p = pool_with(&[vec![0.9], vec![0.1], vec![0.3]]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            p.active = 0;
            for (e, c) in p.entries.iter_mut().zip([100.0, 10.0, 30.0, 50.0]) {
                e.ctotal = c;
            }
            let out = p.accumulate_costs(&[0.0; 4], &mut rng).unwrap();
            counts[out.active] += 1;
        }
        let want = [0.0, 5.0 / 9.0, 3.0 / 9.0, 1.0 / 9.0];
        for (c, w) in counts.iter().zip(want) {
            assert!((*c as f64 / 10_000.0 - w).abs() < 0.02);
        }
    }

    #[test]
    fn prune_keeps_separated_maximal_set() {
        let mut p = pool_with(&[vec![0.9, 0.9], vec![0.9, 0.95], vec![0.1, 0.1]]);
        assert_eq!(p.prune(), 1);
        assert_eq!(p.len(), 3);
        assert!(p.is_separated());

        let mut q = pool_with(&[vec![0.2, 0.2], vec![0.8, 0.8]]);
        assert_eq!(q.prune(), 0);
    }

    #[test]
    fn prune_never_drops_active() {
        let mut p = pool_with(&[vec![0.9], vec![0.9]]);
        p.active = 2;
        p.prune();
        assert_eq!(p.len(), 2);
        match &p.entries[p.active()].layout {
            PoolLayout::Partial(l) => assert_eq!(l.source_window(), 1),
            PoolLayout::Optimized => panic!("active entry lost"),
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let d = Dataset::from_flat(1, (0..20).map(f64::from).collect()).unwrap();
        let mut p = LayoutPool::new(small_config(2)).unwrap();
        p.admit(dummy_layout(3), vec![0.25, 1.0]).unwrap();
        p.entries[1].ctotal = 4.5;
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &p.snapshot()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"kind\": \"partial\""));
        let back = LayoutPool::restore(read_snapshot(buf.as_slice()).unwrap(), &d).unwrap();
        assert_eq!(back, p);
        let shifted = Dataset::from_flat(1, (0..20).map(|i| f64::from(i) * 2.0).collect()).unwrap();
        assert!(LayoutPool::restore(p.snapshot(), &shifted).is_err());
    }
}
