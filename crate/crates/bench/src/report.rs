//! Report files: per-query CSV rows plus a JSON summary.
//!
//! CSV files hold no timings, so they are byte-identical across runs with the
//! same config and seed. Wall-clock figures live only in `summary.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use relayout::dynamic::write_snapshot;
use serde::Serialize;

use crate::error::Result;
use crate::runner::{DynamicReport, StaticReport};

pub const QUERIES_CSV: &str = "queries.csv";
pub const WINDOWS_CSV: &str = "windows.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const POOL_JSON: &str = "pool.json";

pub fn write_csv<T: Serialize, W: Write>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), rows)
}

fn json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Returns the files written.
pub fn write_static(dir: &Path, report: &StaticReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let files = vec![dir.join(QUERIES_CSV), dir.join(SUMMARY_JSON)];
    csv_file(&files[0], &report.records)?;
    json_file(&files[1], &report.summary)?;
    Ok(files)
}

pub fn write_dynamic(dir: &Path, report: &DynamicReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let files = vec![
        dir.join(QUERIES_CSV),
        dir.join(WINDOWS_CSV),
        dir.join(SUMMARY_JSON),
        dir.join(POOL_JSON),
    ];
    csv_file(&files[0], &report.records)?;
    csv_file(&files[1], &report.windows)?;
    json_file(&files[2], &report.summary)?;
    write_snapshot(BufWriter::new(File::create(&files[3])?), &report.pool)?;
    Ok(files)
}
