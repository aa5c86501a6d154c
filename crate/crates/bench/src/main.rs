use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use relayout::dynamic::{optimal_partial_size, SizingParams};
use relayout::optimizer::{optimize, write_layout};
use relayout::workload::{read_workload_log, write_workload_log, Workload};
use relayout_bench::config::ExperimentConfig;
use relayout_bench::data::{save_csv, save_fvecs};
use relayout_bench::report::{write_dynamic, write_static};
use relayout_bench::runner::{build_optimized, load_dataset, run_dynamic, run_static, InvariantCheck};
use relayout_bench::workloads::generate_static_workload;

#[derive(Parser)]
#[command(name = "relayout", version, about = "Workload-aware data layouts for filter and k-NN queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the optimized layout and write it as a binary file.
    Optimize {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// JSON-lines query log used as the historical workload.
        #[arg(long)]
        workload: Option<PathBuf>,
        #[arg(long, default_value = "layout.bin")]
        out: PathBuf,
    },
    /// Static benchmark: optimized layout, one index, one workload.
    BenchStatic(ExperimentArgs),
    /// Dynamic benchmark over drifting query windows.
    BenchDynamic(ExperimentArgs),
    /// Solve for the partial layout size that minimizes total cost.
    SolveSize(SizeArgs),
    /// Write the configured dataset, and optionally a query log.
    GenData {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, value_enum, default_value_t = Format::Fvecs)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
        /// Also write `workload.count` static queries as JSON lines.
        #[arg(long)]
        workload_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Fvecs,
    Csv,
}

/// Config file, generic overrides, then named flags; later sources win.
#[derive(Args)]
struct ExperimentArgs {
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set dynamic.alpha=30`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    adapter: Option<String>,
    #[arg(long)]
    n_probe: Option<usize>,
    #[arg(long)]
    query: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    selectivity: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    windows: Option<usize>,
    #[arg(long)]
    per_window: Option<usize>,
    #[arg(long)]
    partition_size: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut o = self.set.clone();
        let mut put = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push(format!("{key}={v}"));
            }
        };
        let quoted = |s: &Option<String>| s.as_ref().map(|s| format!("{s:?}"));
        let output = self.output.as_ref().map(|p| format!("{:?}", p.display().to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("output", output);
        put("index.adapter", quoted(&self.adapter));
        put("index.n_probe", self.n_probe.map(|v| v.to_string()));
        put("workload.query", quoted(&self.query));
        put("workload.k", self.k.map(|v| v.to_string()));
        put("workload.selectivity", self.selectivity.map(|v| format!("{v:?}")));
        put("workload.count", self.count.map(|v| v.to_string()));
        put("workload.windows", self.windows.map(|v| v.to_string()));
        put("workload.per_window", self.per_window.map(|v| v.to_string()));
        put("optimizer.partition_size", self.partition_size.map(|v| v.to_string()));
        put("optimizer.clusters", self.clusters.map(|v| v.to_string()));
        put("dynamic.epsilon", self.epsilon.map(|v| format!("{v:?}")));
        put("dynamic.alpha", self.alpha.map(|v| format!("{v:?}")));
        put("dynamic.beta", self.beta.map(|v| format!("{v:?}")));
        put("timing_repetitions", self.repetitions.map(|v| v.to_string()));
        Ok(ExperimentConfig::load(self.config.as_deref(), &o)?)
    }
}

#[derive(Args)]
struct SizeArgs {
    #[arg(long)]
    n_d: f64,
    #[arg(long)]
    k: usize,
    /// Storage cost per stored point.
    #[arg(long)]
    b: f64,
    #[arg(long)]
    lambda: f64,
    /// Query cost scale.
    #[arg(long)]
    a: f64,
    /// Index cost; defaults to `ln(n_d)`.
    #[arg(long)]
    c_idx: Option<f64>,
}

fn report_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("reports"))
}

fn print_invariants(checks: &[InvariantCheck]) -> bool {
    let mut ok = true;
    for c in checks.iter().filter(|c| !c.passed()) {
        eprintln!("invariant {} violated {} of {} times", c.name, c.violations, c.checked);
        ok = false;
    }
    ok
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Optimize { exp, workload, out } => {
            let cfg = exp.load()?;
            let data = load_dataset(&cfg.dataset, cfg.seed)?;
            let output = match workload {
                Some(path) => {
                    let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                    let queries = read_workload_log(BufReader::new(file))?;
                    let mut opt = cfg.optimizer.clone();
                    opt.seed = cfg.seed;
                    optimize(&data, &Workload::from_queries(queries, &data)?, &opt)?
                }
                None => build_optimized(&cfg, &data, cfg.workload.kind(false))?.0,
            };
            let mut w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            write_layout(&mut w, &output.layout)?;
            w.flush()?;
            println!(
                "wrote {} ({} rows, {} partitions, {} clusters)",
                out.display(),
                output.layout.len(),
                output.layout.partitions().len(),
                output.layout.header().clusters
            );
            Ok(true)
        }
        Command::BenchStatic(exp) => {
            let cfg = exp.load()?;
            let report = run_static(&cfg)?;
            print_files(&write_static(&report_dir(&cfg), &report)?);
            let s = &report.summary;
            println!(
                "{} queries: recall {:.4}, partitions {:.2}, examined {:.1}",
                s.queries, s.mean_recall, s.mean_partitions_accessed, s.mean_points_examined
            );
            if let Some(r) = s.partition_ratio {
                println!("partitions accessed vs shuffled layout: {r:.3}");
            }
            Ok(print_invariants(&s.invariants))
        }
        Command::BenchDynamic(exp) => {
            let cfg = exp.load()?;
            let report = run_dynamic(&cfg)?;
            print_files(&write_dynamic(&report_dir(&cfg), &report)?);
            let s = &report.summary;
            println!(
                "{} queries over {} windows: recall {:.4}, fallback {:.3}, examined/flat {:.3}, pool {}, switches {}",
                s.queries, s.windows, s.mean_recall, s.fallback_rate, s.examined_ratio, s.final_pool_size, s.total_switches
            );
            Ok(print_invariants(&s.invariants))
        }
        Command::SolveSize(a) => {
            let params = SizingParams {
                n_d: a.n_d,
                k: a.k,
                b: a.b,
                lambda: a.lambda,
                a: a.a,
                c_idx: a.c_idx.unwrap_or(a.n_d.ln()),
            };
            let sol = optimal_partial_size(&params)?;
            println!(
                "{}",
                serde_json::json!({
                    "n_l": sol.n_l,
                    "beta": sol.beta(a.n_d),
                    "objective": sol.objective,
                    "residual": sol.residual,
                    "boundary": sol.boundary,
                })
            );
            Ok(sol.boundary || sol.residual.abs() < 1e-6)
        }
        Command::GenData {
            exp,
            format,
            out,
            workload_out,
        } => {
            let cfg = exp.load()?;
            let data = load_dataset(&cfg.dataset, cfg.seed)?;
            match format {
                Format::Fvecs => save_fvecs(&out, &data)?,
                Format::Csv => save_csv(&out, &data)?,
            }
            println!("wrote {} ({} x {})", out.display(), data.len(), data.dim());
            if let Some(path) = workload_out {
                write_queries(&path, &cfg, &data)?;
            }
            Ok(true)
        }
    }
}

fn write_queries(path: &Path, cfg: &ExperimentConfig, data: &relayout::model::Dataset) -> Result<()> {
    let queries = generate_static_workload(data, cfg.workload.kind(false), cfg.workload.count, cfg.seed)?;
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    write_workload_log(&mut w, &queries)?;
    w.flush()?;
    println!("wrote {} ({} queries)", path.display(), queries.len());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

