//! Experiment configuration: TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use relayout::dynamic::PoolConfig;
use relayout::index::{AdapterKind, DEFAULT_N_PROBE};
use relayout::optimizer::OptimizerConfig;
use relayout::query::DEFAULT_EXPANSION;
use serde::{Deserialize, Serialize};

use crate::data::GaussMixSpec;
use crate::error::{BenchError, Result};
use crate::workloads::{
    QueryKind, DEFAULT_DYNAMIC_K, DEFAULT_PER_WINDOW, DEFAULT_SELECTIVITY, DEFAULT_STATIC_K, DEFAULT_WINDOWS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DatasetSpec {
    Gaussmix(GaussMixSpec),
    Fvecs { path: PathBuf },
    Csv { path: PathBuf, dims: Option<usize> },
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Gaussmix(GaussMixSpec::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryType {
    Pbf,
    Anns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    pub query: QueryType,
    pub selectivity: f64,
    /// Neighbor count; unset means 100 for static runs and 50 for dynamic runs.
    pub k: Option<usize>,
    /// Evaluated queries in a static run.
    pub count: usize,
    /// Historical queries fed to the optimizer.
    pub history: usize,
    pub windows: usize,
    pub per_window: usize,
    /// Components used to bias windows when the dataset has no labels.
    pub components: usize,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            query: QueryType::Anns,
            selectivity: DEFAULT_SELECTIVITY,
            k: None,
            count: 500,
            history: 100,
            windows: DEFAULT_WINDOWS,
            per_window: DEFAULT_PER_WINDOW,
            components: 10,
        }
    }
}

impl WorkloadSpec {
    pub fn kind(&self, dynamic: bool) -> QueryKind {
        match self.query {
            QueryType::Pbf => QueryKind::Pbf {
                selectivity: self.selectivity,
            },
            QueryType::Anns => QueryKind::Anns {
                k: self
                    .k
                    .unwrap_or(if dynamic { DEFAULT_DYNAMIC_K } else { DEFAULT_STATIC_K }),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexSpec {
    pub adapter: AdapterKind,
    pub n_probe: usize,
    /// Candidate budget multiplier for partial-layout search.
    pub expansion: usize,
}

impl Default for IndexSpec {
    fn default() -> Self {
        Self {
            adapter: AdapterKind::Zonemap,
            n_probe: DEFAULT_N_PROBE,
            expansion: DEFAULT_EXPANSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_repetitions")]
    pub timing_repetitions: usize,
    /// Compare static runs against a shuffled layout with the same adapter.
    #[serde(default = "default_true")]
    pub random_baseline: bool,
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub workload: WorkloadSpec,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub dynamic: PoolConfig,
    #[serde(default)]
    pub index: IndexSpec,
}

fn default_repetitions() -> usize {
    5
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            output: None,
            timing_repetitions: default_repetitions(),
            random_baseline: true,
            dataset: DatasetSpec::default(),
            workload: WorkloadSpec::default(),
            optimizer: OptimizerConfig::default(),
            dynamic: PoolConfig::default(),
            index: IndexSpec::default(),
        }
    }

    /// Merge an optional TOML file with `key.path=value` overrides, which win.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => std::fs::read_to_string(p)?.parse::<toml::Table>()?,
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        if let Some(toml::Value::Table(d)) = table.get_mut("dataset") {
            d.entry("source").or_insert_with(|| "gaussmix".into());
        }
        let cfg: Self = toml::Value::Table(table).try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// All problems at once, each prefixed with its field path.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };
        check(self.timing_repetitions >= 1, "timing_repetitions: must be at least 1");
        if let DatasetSpec::Gaussmix(g) = &self.dataset {
            check(g.n >= 1, "dataset.n: must be at least 1");
            check(g.dim >= 1, "dataset.dim: must be at least 1");
            check(g.components >= 1, "dataset.components: must be at least 1");
            check(g.spread >= 0.0 && g.spread.is_finite(), "dataset.spread: must be finite and non-negative");
            check(g.center_range > 0.0, "dataset.center_range: must be positive");
            if let Some(k) = self.workload.k {
                check(k <= g.n, "workload.k: exceeds dataset.n");
            }
        }
        let w = &self.workload;
        check(w.selectivity > 0.0 && w.selectivity <= 1.0, "workload.selectivity: must lie in (0, 1]");
        check(w.k != Some(0), "workload.k: must be at least 1");
        check(w.count >= 1, "workload.count: must be at least 1");
        check(w.windows >= 1, "workload.windows: must be at least 1");
        check(w.per_window >= 1, "workload.per_window: must be at least 1");
        check(w.components >= 1, "workload.components: must be at least 1");
        check(
            w.per_window <= self.dynamic.window_capacity,
            "workload.per_window: exceeds dynamic.window_capacity",
        );
        let o = &self.optimizer;
        check(o.partition_size >= 1, "optimizer.partition_size: must be at least 1");
        check(o.clusters != Some(0), "optimizer.clusters: must be at least 1");
        check(o.radius_multiplier > 0.0, "optimizer.radius_multiplier: must be positive");
        check(o.gravity_constant > 0.0, "optimizer.gravity_constant: must be positive");
        check(o.gamma.is_none_or(|g| g >= 0.0), "optimizer.gamma: must be non-negative");
        check(self.index.n_probe >= 1, "index.n_probe: must be at least 1");
        check(self.index.expansion >= 1, "index.expansion: must be at least 1");
        if let Err(relayout::Error::InvalidParameter { name, reason }) = self.dynamic.validate() {
            errs.push(format!("dynamic.{name}: {reason}"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(BenchError::Config(errs))
        }
    }
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| BenchError::Config(vec![format!("{assignment}: expected key=value")]))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut node = table;
    for p in &parts[..parts.len() - 1] {
        let next = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = match next {
            toml::Value::Table(t) => t,
            _ => return Err(BenchError::Config(vec![format!("{key}: `{p}` is not a table")])),
        };
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_then_overrides() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "seed = 3\n[dataset]\nn = 500\ndim = 6\n[workload]\nquery = \"pbf\"\n[index]\nadapter = \"flat\""
        )
        .unwrap();
        let cfg = ExperimentConfig::load(
            Some(f.path()),
            &["dataset.n=800".into(), "index.adapter=zonemap".into(), "dynamic.alpha=12.5".into()],
        )
        .unwrap();
        assert_eq!(cfg.seed, 3);
        let DatasetSpec::Gaussmix(g) = &cfg.dataset else { panic!() };
        assert_eq!((g.n, g.dim), (800, 6));
        assert_eq!(cfg.workload.query, QueryType::Pbf);
        assert_eq!(cfg.index.adapter, AdapterKind::Zonemap);
        assert_eq!(cfg.dynamic.alpha, 12.5);
        assert_eq!(cfg.dynamic.epsilon, 0.1);
    }

    #[test]
    fn seed_is_required() {
        assert!(ExperimentConfig::load(None, &[]).is_err());
        assert!(ExperimentConfig::load(None, &["seed=1".into()]).is_ok());
    }

    #[test]
    fn errors_carry_field_paths() {
        let err = ExperimentConfig::load(
            None,
            &["seed=1".into(), "workload.selectivity=2.0".into(), "dynamic.beta=0".into()],
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("workload.selectivity"), "{err}");
        assert!(err.contains("dynamic.beta"), "{err}");
        assert!(ExperimentConfig::load(None, &["seed=1".into(), "bogus=1".into()]).is_err());
    }

    #[test]
    fn file_datasets() {
        let cfg = ExperimentConfig::load(
            None,
            &["seed=0".into(), "dataset.source=fvecs".into(), "dataset.path=/tmp/x.fvecs".into()],
        )
        .unwrap();
        assert_eq!(cfg.dataset, DatasetSpec::Fvecs { path: "/tmp/x.fvecs".into() });
    }
}
