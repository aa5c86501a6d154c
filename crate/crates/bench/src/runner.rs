//! Static and dynamic experiment orchestration.
//!
//! Every random draw derives from the config seed through fixed offsets, so a
//! run is a pure function of `(config, seed)` apart from the wall-clock fields.

use std::collections::HashSet;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relayout::dynamic::{
    estimate_query_cost, generate_partial_layout, sample_window_queries, cost_vector, LayoutPool, PoolSnapshot,
    SlidingWindow,
};
use relayout::index::{build_adapter, static_query, AdapterKind, AdapterOptions, IndexAdapter, PhysicalLayout};
use relayout::model::{Dataset, Query, QueryResult};
use relayout::optimizer::{optimize, OptimizedLayout, StaticOutput};
use relayout::query::{brute_force_knn, brute_force_knn_among, brute_force_pbf, online_query};
use relayout::workload::Workload;
use serde::Serialize;

use crate::config::{DatasetSpec, ExperimentConfig, QueryType};
use crate::data::{generate_gaussmix, load_csv, load_fvecs};
use crate::error::{BenchError, Result};
use crate::workloads::{component_labels, generate_dynamic_workload, generate_static_workload, QueryKind};

const HISTORY_SEED: u64 = 1;
const EVAL_SEED: u64 = 2;
const LABEL_SEED: u64 = 3;
const WINDOW_SEED: u64 = 4;
const POOL_SEED: u64 = 5;
const SHUFFLE_SEED: u64 = 6;

pub fn load_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    match spec {
        DatasetSpec::Gaussmix(g) => generate_gaussmix(g, seed),
        DatasetSpec::Fvecs { path } => load_fvecs(path),
        DatasetSpec::Csv { path, dims } => load_csv(path, *dims),
    }
}

/// A named hard invariant and how often it was violated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
}

impl InvariantCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Default)]
struct Invariants(Vec<InvariantCheck>);

impl Invariants {
    fn record(&mut self, name: &str, ok: bool) {
        let pos = match self.0.iter().position(|c| c.name == name) {
            Some(p) => p,
            None => {
                self.0.push(InvariantCheck {
                    name: name.to_string(),
                    checked: 0,
                    violations: 0,
                });
                self.0.len() - 1
            }
        };
        self.0[pos].checked += 1;
        self.0[pos].violations += usize::from(!ok);
    }
}

fn recall(result: &QueryResult, truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let got: HashSet<usize> = result.ids().into_iter().collect();
    truth.iter().filter(|id| got.contains(id)).count() as f64 / truth.len() as f64
}

fn truth_for(data: &Dataset, q: &Query) -> Result<Vec<usize>> {
    Ok(match q {
        Query::Anns(a) => brute_force_knn(data, a.center(), a.k())?.ids(),
        Query::Pbf(p) => brute_force_pbf(data, p)?,
    })
}

/// Run `f` `reps` times; the first result and the mean seconds per run.
fn timed<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let first = f()?;
    for _ in 1..reps {
        f()?;
    }
    Ok((first, start.elapsed().as_secs_f64() / reps.max(1) as f64))
}

fn adapter_options<'a>(cfg: &ExperimentConfig, assignment: &'a [usize]) -> AdapterOptions<'a> {
    AdapterOptions {
        n_probe: Some(cfg.index.n_probe),
        assignment: Some(assignment),
        clusters: None,
        seed: cfg.seed,
    }
}

/// `D_opt` built from a historical workload drawn from the data.
pub fn build_optimized(cfg: &ExperimentConfig, data: &Dataset, kind: QueryKind) -> Result<(StaticOutput, Workload)> {
    let history = generate_static_workload(data, kind, cfg.workload.history, cfg.seed.wrapping_add(HISTORY_SEED))?;
    let workload = Workload::from_queries(history, data)?;
    let mut opt = cfg.optimizer.clone();
    opt.seed = cfg.seed;
    Ok((optimize(data, &workload, &opt)?, workload))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticRecord {
    pub query: usize,
    pub kind: &'static str,
    pub results: usize,
    pub recall: f64,
    pub exact: bool,
    pub partitions_accessed: usize,
    pub points_examined: usize,
    pub baseline_partitions_accessed: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StaticSummary {
    pub adapter: AdapterKind,
    pub query_type: QueryType,
    pub queries: usize,
    pub rows: usize,
    pub dim: usize,
    pub partitions: usize,
    pub clusters: u64,
    pub mean_recall: f64,
    pub mean_partitions_accessed: f64,
    pub mean_points_examined: f64,
    pub baseline_mean_partitions_accessed: Option<f64>,
    /// Optimized over shuffled partitions accessed.
    pub partition_ratio: Option<f64>,
    pub optimize_seconds: f64,
    pub mean_query_seconds: f64,
    pub baseline_mean_query_seconds: Option<f64>,
    pub invariants: Vec<InvariantCheck>,
}

#[derive(Debug, Clone)]
pub struct StaticReport {
    pub records: Vec<StaticRecord>,
    pub summary: StaticSummary,
    pub layout: OptimizedLayout,
}

impl StaticReport {
    pub fn passed(&self) -> bool {
        self.summary.invariants.iter().all(InvariantCheck::passed)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub fn run_static(cfg: &ExperimentConfig) -> Result<StaticReport> {
    cfg.validate()?;
    let kind = cfg.workload.kind(false);
    if cfg.workload.query == QueryType::Pbf && cfg.index.adapter == AdapterKind::ClusterProbe {
        return Err(BenchError::Config(vec![
            "index.adapter: cluster_probe does not answer range queries".into(),
        ]));
    }
    let data = load_dataset(&cfg.dataset, cfg.seed)?;

    let t0 = Instant::now();
    let (out, _) = build_optimized(cfg, &data, kind)?;
    let optimize_seconds = t0.elapsed().as_secs_f64();

    let physical = PhysicalLayout::new(&data, &out.layout)?;
    let assignment = out.model.assignment();
    let index = build_adapter(cfg.index.adapter, &physical, &adapter_options(cfg, assignment))?;
    let shuffled = if cfg.random_baseline {
        Some(PhysicalLayout::shuffled(
            &data,
            cfg.optimizer.partition_size,
            cfg.seed.wrapping_add(SHUFFLE_SEED),
        )?)
    } else {
        None
    };
    let baseline = shuffled
        .as_ref()
        .map(|l| build_adapter(cfg.index.adapter, l, &adapter_options(cfg, assignment)))
        .transpose()?;

    let queries = generate_static_workload(&data, kind, cfg.workload.count, cfg.seed.wrapping_add(EVAL_SEED))?;
    let reps = cfg.timing_repetitions;
    let exact_adapter = cfg.index.adapter.is_exact();
    let mut inv = Invariants::default();
    let mut records = Vec::with_capacity(queries.len());
    let (mut secs, mut base_secs) = (0.0, 0.0);
    for (i, q) in queries.iter().enumerate() {
        let (res, t) = timed(reps, || Ok(static_query(index.as_ref(), q)?))?;
        secs += t;
        let truth = truth_for(&data, q)?;
        let exact = res.ids() == truth;
        inv.record("results_sorted", res.is_sorted());
        if let Query::Anns(a) = q {
            inv.record("knn_result_size", res.ids().len() == a.k());
        }
        if exact_adapter {
            inv.record("exact_adapter_matches_brute_force", exact);
        }
        let base = match &baseline {
            Some(b) => {
                let (r, t) = timed(reps, || Ok(static_query(b.as_ref(), q)?))?;
                base_secs += t;
                if exact_adapter {
                    inv.record("baseline_matches_brute_force", r.ids() == truth);
                }
                Some(r.accessed_partitions)
            }
            None => None,
        };
        let rc = recall(&res, &truth);
        inv.record("recall_in_unit_interval", (0.0..=1.0).contains(&rc));
        records.push(StaticRecord {
            query: i,
            kind: match q {
                Query::Pbf(_) => "pbf",
                Query::Anns(_) => "anns",
            },
            results: res.ids().len(),
            recall: rc,
            exact,
            partitions_accessed: res.accessed_partitions,
            points_examined: res.examined_points,
            baseline_partitions_accessed: base,
        });
    }
    if exact_adapter {
        inv.record("exact_recall_is_one", records.iter().all(|r| r.recall == 1.0));
    }

    let n = records.len().max(1) as f64;
    let mean_acc = mean(records.iter().map(|r| r.partitions_accessed as f64));
    let base_acc = baseline
        .as_ref()
        .map(|_| mean(records.iter().filter_map(|r| r.baseline_partitions_accessed).map(|x| x as f64)));
    let summary = StaticSummary {
        adapter: cfg.index.adapter,
        query_type: cfg.workload.query,
        queries: records.len(),
        rows: data.len(),
        dim: data.dim(),
        partitions: out.layout.partitions().len(),
        clusters: out.layout.header().clusters,
        mean_recall: mean(records.iter().map(|r| r.recall)),
        mean_partitions_accessed: mean_acc,
        mean_points_examined: mean(records.iter().map(|r| r.points_examined as f64)),
        baseline_mean_partitions_accessed: base_acc,
        partition_ratio: base_acc.filter(|&b| b > 0.0).map(|b| mean_acc / b),
        optimize_seconds,
        mean_query_seconds: secs / n,
        baseline_mean_query_seconds: baseline.as_ref().map(|_| base_secs / n),
        invariants: inv.0,
    };
    Ok(StaticReport {
        records,
        summary,
        layout: out.layout,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicRecord {
    pub window: usize,
    pub query: usize,
    /// Pool entry that served the query; 0 is the optimized layout.
    pub entry: usize,
    pub fallback: bool,
    pub results: usize,
    pub recall: f64,
    pub partitions_accessed: usize,
    pub points_examined: usize,
    pub switched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub window: usize,
    pub pool_size: usize,
    pub pool_growth: usize,
    pub admitted: bool,
    /// Switch triggers, including draws that re-selected the active entry.
    pub switches: usize,
    pub layout_changes: usize,
    pub fallback_rate: f64,
    pub partial_share: f64,
    pub mean_recall: f64,
    pub mean_points_examined: f64,
    pub mean_partitions_accessed: f64,
    /// Mean estimated cost of this window's queries through the layout built from it.
    pub own_layout_cost: f64,
    pub optimized_cost: f64,
    pub min_admission_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowTiming {
    pub window: usize,
    pub mean_query_seconds: f64,
    pub reorganization_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DynamicSummary {
    pub adapter: AdapterKind,
    pub k: usize,
    pub rows: usize,
    pub dim: usize,
    pub windows: usize,
    pub queries: usize,
    pub final_pool_size: usize,
    pub total_switches: usize,
    pub total_layout_changes: usize,
    pub mean_recall: f64,
    pub fallback_rate: f64,
    pub mean_points_examined: f64,
    /// Points a flat scan examines per query.
    pub flat_points_examined: usize,
    pub examined_ratio: f64,
    pub optimize_seconds: f64,
    pub timings: Vec<WindowTiming>,
    pub invariants: Vec<InvariantCheck>,
}

#[derive(Debug, Clone)]
pub struct DynamicReport {
    pub records: Vec<DynamicRecord>,
    pub windows: Vec<WindowRecord>,
    pub summary: DynamicSummary,
    pub pool: PoolSnapshot,
}

impl DynamicReport {
    pub fn passed(&self) -> bool {
        self.summary.invariants.iter().all(InvariantCheck::passed)
    }
}

/// Windows for a dynamic run, anchored in dataset labels or pseudo-labels.
pub fn dynamic_windows(cfg: &ExperimentConfig, data: &Dataset, k: usize) -> Result<Vec<SlidingWindow>> {
    let labels = component_labels(data, cfg.workload.components, cfg.seed.wrapping_add(LABEL_SEED))?;
    generate_dynamic_workload(
        data,
        QueryKind::Anns { k },
        cfg.workload.windows,
        cfg.workload.per_window,
        &labels,
        cfg.seed.wrapping_add(WINDOW_SEED),
    )
}

pub fn run_dynamic(cfg: &ExperimentConfig) -> Result<DynamicReport> {
    cfg.validate()?;
    let QueryKind::Anns { k } = cfg.workload.kind(true) else {
        return Err(BenchError::Config(vec!["workload.query: dynamic runs serve anns queries".into()]));
    };
    let data = load_dataset(&cfg.dataset, cfg.seed)?;
    let t0 = Instant::now();
    let (out, _) = build_optimized(cfg, &data, QueryKind::Anns { k })?;
    let optimize_seconds = t0.elapsed().as_secs_f64();
    let physical = PhysicalLayout::new(&data, &out.layout)?;
    let index = build_adapter(cfg.index.adapter, &physical, &adapter_options(cfg, out.model.assignment()))?;
    let windows = dynamic_windows(cfg, &data, k)?;
    run_windows(cfg, &data, index.as_ref(), &windows, k, optimize_seconds)
}

/// Serve `windows` in order starting from the optimized layout alone.
pub fn run_windows(
    cfg: &ExperimentConfig,
    data: &Dataset,
    index: &dyn IndexAdapter,
    windows: &[SlidingWindow],
    k: usize,
    optimize_seconds: f64,
) -> Result<DynamicReport> {
    let pc = &cfg.dynamic;
    let mut pool = LayoutPool::new(pc.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(POOL_SEED));
    let exact_adapter = cfg.index.adapter.is_exact();
    let reps = cfg.timing_repetitions;
    let mut inv = Invariants::default();
    let mut records = Vec::new();
    let mut window_records = Vec::new();
    let mut timings = Vec::new();

    for win in windows {
        let w = win.index();
        let size_before = pool.len();
        let switches_before = pool.switch_count();
        let first = records.len();
        let mut secs = 0.0;
        let mut changes = 0;
        for (i, q) in win.queries().iter().enumerate() {
            let Query::Anns(a) = q else {
                return Err(BenchError::Config(vec!["workload.query: dynamic runs serve anns queries".into()]));
            };
            let entry = pool.active();
            let partial = pool.active_partial();
            let (res, t) = timed(reps, || {
                Ok(match partial {
                    Some(l) => online_query(l, data, index, a, cfg.index.expansion)?,
                    None => static_query(index, q)?,
                })
            })?;
            secs += t;
            let truth = brute_force_knn(data, a.center(), a.k())?.ids();
            let ids = res.ids();
            inv.record("results_sorted", res.is_sorted());
            inv.record("knn_result_size", ids.len() <= a.k() && ids.len() == a.k().min(data.len()));
            match partial {
                Some(l) if !res.used_fallback => {
                    let local = brute_force_knn_among(data, l.ids(), a.center(), a.k())?.ids();
                    inv.record("partial_result_exact_over_members", ids == local);
                }
                _ if exact_adapter => inv.record("index_result_exact", ids == truth),
                _ => {}
            }

            let before = pool.switch_count();
            let outcome = pool.accumulate_and_maybe_switch(a.center(), a.k(), &mut rng)?;
            inv.record("one_switch_per_trigger", pool.switch_count() - before == usize::from(outcome.switched));
            changes += usize::from(outcome.active != entry);
            if outcome.switched {
                inv.record("ctotal_reset_on_switch", pool.entries().iter().all(|e| e.ctotal == 0.0));
            }
            let rc = recall(&res, &truth);
            inv.record("recall_in_unit_interval", (0.0..=1.0).contains(&rc));
            records.push(DynamicRecord {
                window: w,
                query: i,
                entry,
                fallback: res.used_fallback,
                results: ids.len(),
                recall: rc,
                partitions_accessed: res.accessed_partitions,
                points_examined: res.examined_points,
                switched: outcome.switched,
            });
        }

        // The window is complete: reorganize for what comes next.
        let t = Instant::now();
        let layout = generate_partial_layout(data, cfg.optimizer.partition_size, win.points(), pc.beta, w)?;
        let sample = sample_window_queries(win.points(), pc.sample_size, pc.decay, &mut rng)?;
        let costs = cost_vector(&layout, &sample, k, pc.c_r)?;
        let own = mean(
            win.points()
                .iter()
                .map(|p| estimate_query_cost(&layout, &p.coords, k, pc.c_r))
                .collect::<relayout::Result<Vec<_>>>()?
                .into_iter(),
        );
        let min_dist = pool.min_distance(&costs);
        let admitted = pool.admit(layout, costs)?;
        let reorganization_seconds = t.elapsed().as_secs_f64();
        inv.record("pool_separated", pool.is_separated());
        inv.record("pool_size_non_decreasing", pool.len() >= size_before);
        inv.record("admission_matches_epsilon", admitted == (min_dist > pc.epsilon));

        let rows = &records[first..];
        let n = rows.len().max(1) as f64;
        window_records.push(WindowRecord {
            window: w,
            pool_size: pool.len(),
            pool_growth: pool.len() - size_before,
            admitted,
            switches: pool.switch_count() - switches_before,
            layout_changes: changes,
            fallback_rate: rows.iter().filter(|r| r.fallback).count() as f64 / n,
            partial_share: rows.iter().filter(|r| r.entry != 0).count() as f64 / n,
            mean_recall: mean(rows.iter().map(|r| r.recall)),
            mean_points_examined: mean(rows.iter().map(|r| r.points_examined as f64)),
            mean_partitions_accessed: mean(rows.iter().map(|r| r.partitions_accessed as f64)),
            own_layout_cost: own,
            optimized_cost: pc.optimized_cost,
            min_admission_distance: min_dist,
        });
        timings.push(WindowTiming {
            window: w,
            mean_query_seconds: secs / n,
            reorganization_seconds,
        });
    }
    if exact_adapter && pc.beta >= 1.0 {
        inv.record("full_layout_recall_is_one", records.iter().all(|r| r.recall == 1.0));
    }

    let mean_examined = mean(records.iter().map(|r| r.points_examined as f64));
    let summary = DynamicSummary {
        adapter: cfg.index.adapter,
        k,
        rows: data.len(),
        dim: data.dim(),
        windows: windows.len(),
        queries: records.len(),
        final_pool_size: pool.len(),
        total_switches: pool.switch_count(),
        total_layout_changes: window_records.iter().map(|w| w.layout_changes).sum(),
        mean_recall: mean(records.iter().map(|r| r.recall)),
        fallback_rate: records.iter().filter(|r| r.fallback).count() as f64 / records.len().max(1) as f64,
        mean_points_examined: mean_examined,
        flat_points_examined: data.len(),
        examined_ratio: mean_examined / data.len() as f64,
        optimize_seconds,
        timings,
        invariants: inv.0,
    };
    Ok(DynamicReport {
        records,
        windows: window_records,
        summary,
        pool: pool.snapshot(),
    })
}
