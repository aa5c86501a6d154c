//! Synthetic data and file loaders.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use relayout::model::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Mixture of isotropic Gaussians with centers uniform in `[0, center_range]^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussMixSpec {
    pub n: usize,
    pub dim: usize,
    pub components: usize,
    pub spread: f64,
    pub center_range: f64,
}

impl Default for GaussMixSpec {
    fn default() -> Self {
        Self {
            n: 10_000,
            dim: 4,
            components: 10,
            spread: 0.05,
            center_range: 1.0,
        }
    }
}

/// Labels record the component each point was drawn from.
pub fn generate_gaussmix(spec: &GaussMixSpec, seed: u64) -> Result<Dataset> {
    if spec.components == 0 {
        return Err(relayout::Error::InvalidParameter {
            name: "components",
            reason: "must be at least 1".into(),
        }
        .into());
    }
    let noise = Normal::new(0.0, spec.spread).map_err(|e| relayout::Error::InvalidParameter {
        name: "spread",
        reason: e.to_string(),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.dim;
    let centers: Vec<f64> = (0..spec.components * d)
        .map(|_| rng.random::<f64>() * spec.center_range)
        .collect();
    let mut coords = Vec::with_capacity(spec.n * d);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let c = rng.random_range(0..spec.components);
        coords.extend((0..d).map(|j| centers[c * d + j] + noise.sample(&mut rng)));
        labels.push(c);
    }
    Ok(Dataset::from_flat(d, coords)?.with_labels(labels)?)
}

/// Records of a little-endian `i32` dimension followed by that many `f32` values.
pub fn read_fvecs<R: Read>(mut input: R) -> Result<Dataset> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut coords = Vec::new();
    let mut dim = None;
    let mut at = 0;
    let mut record = 0;
    while at < bytes.len() {
        let parse = |reason: String| BenchError::Parse { record, reason };
        let head: [u8; 4] = bytes
            .get(at..at + 4)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| parse("truncated dimension header".into()))?;
        let d = i32::from_le_bytes(head);
        if d <= 0 {
            return Err(parse(format!("non-positive dimension {d}")));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(prev) if prev != d => return Err(parse(format!("dimension {d} differs from {prev}"))),
            _ => {}
        }
        at += 4;
        let body = bytes
            .get(at..at + 4 * d)
            .ok_or_else(|| parse("truncated vector".into()))?;
        coords.extend(
            body.chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))),
        );
        at += 4 * d;
        record += 1;
    }
    let dim = dim.ok_or(relayout::Error::EmptyDataset)?;
    Ok(Dataset::from_flat(dim, coords)?)
}

/// Coordinates are narrowed to `f32`.
pub fn write_fvecs<W: Write>(mut out: W, data: &Dataset) -> Result<()> {
    let d = data.dim() as i32;
    for p in data.points() {
        out.write_all(&d.to_le_bytes())?;
        for &x in p.coords {
            out.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Numeric CSV. A first row that is entirely non-numeric is taken as a header.
/// With `dims`, only the first `dims` columns are used.
pub fn read_csv<R: Read>(input: R, dims: Option<usize>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut coords = Vec::new();
    let mut width = dims;
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        if row == 0 && rec.iter().all(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() < w || (dims.is_none() && rec.len() != w) {
            return Err(BenchError::Parse {
                record: row,
                reason: format!("expected {w} columns, found {}", rec.len()),
            });
        }
        for (col, cell) in rec.iter().take(w).enumerate() {
            let x = cell.parse::<f64>().map_err(|_| BenchError::Parse {
                record: row,
                reason: format!("column {col}: `{cell}` is not a number"),
            })?;
            coords.push(x);
        }
    }
    let w = width.ok_or(relayout::Error::EmptyDataset)?;
    Ok(Dataset::from_flat(w, coords)?)
}

pub fn write_csv<W: Write>(out: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in data.points() {
        w.write_record(p.coords.iter().map(|x| format!("{x:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_fvecs(path: &Path) -> Result<Dataset> {
    read_fvecs(BufReader::new(File::open(path)?))
}

pub fn load_csv(path: &Path, dims: Option<usize>) -> Result<Dataset> {
    read_csv(BufReader::new(File::open(path)?), dims)
}

pub fn save_fvecs(path: &Path, data: &Dataset) -> Result<()> {
    write_fvecs(BufWriter::new(File::create(path)?), data)
}

pub fn save_csv(path: &Path, data: &Dataset) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), data)
}
