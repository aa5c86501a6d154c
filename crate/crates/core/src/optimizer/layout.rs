//! The optimized full layout: row ids sorted by KEY and cut into equal-size
//! partitions with zone metadata over the original coordinates.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Zone metadata for one contiguous slice of the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionMeta {
    /// Half-open range of layout positions.
    pub start: usize,
    pub end: usize,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub key_min: f64,
    pub key_max: f64,
}

impl PartitionMeta {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Squared distance from `q` to the partition's bounding box.
    pub fn box_distance_sq(&self, q: &[f64]) -> f64 {
        q.iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&x, (&lo, &hi))| {
                let gap = if x < lo {
                    lo - x
                } else if x > hi {
                    x - hi
                } else {
                    0.0
                };
                gap * gap
            })
            .sum()
    }
}

/// Provenance recorded in the persisted header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LayoutHeader {
    pub clusters: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedLayout {
    dim: usize,
    partition_size: usize,
    permutation: Vec<usize>,
    keys: Vec<f64>,
    partitions: Vec<PartitionMeta>,
    header: LayoutHeader,
}

impl OptimizedLayout {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn partition_size(&self) -> usize {
        self.partition_size
    }

    /// `permutation[pos]` is the row id stored at layout position `pos`.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// KEY of the row at each layout position.
    pub fn keys(&self) -> &[f64] {
        &self.keys
    }

    pub fn partitions(&self) -> &[PartitionMeta] {
        &self.partitions
    }

    pub fn header(&self) -> LayoutHeader {
        self.header
    }

    pub(crate) fn set_header(&mut self, header: LayoutHeader) {
        self.header = header;
    }

    /// Layout position of every row id.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.permutation.len()];
        for (p, &id) in self.permutation.iter().enumerate() {
            pos[id] = p;
        }
        pos
    }

    /// Build a layout from an explicit order, e.g. a random baseline.
    ///
    /// `keys`, when given, is indexed by row id.
    pub fn from_order(
        data: &Dataset,
        order: Vec<usize>,
        keys: Option<&[f64]>,
        partition_size: usize,
    ) -> Result<Self> {
        if partition_size == 0 {
            return Err(Error::invalid("partition_size", "must be at least 1"));
        }
        let n = data.len();
        if order.len() != n {
            return Err(Error::invalid("order", format!("{} ids for {n} rows", order.len())));
        }
        let mut seen = vec![false; n];
        for &id in &order {
            if id >= n || std::mem::replace(&mut seen[id], true) {
                return Err(Error::invalid("order", "not a permutation of row ids"));
            }
        }
        let dim = data.dim();
        let layout_keys: Vec<f64> = match keys {
            Some(k) => {
                if k.len() != n {
                    return Err(Error::invalid("keys", "one key per row required"));
                }
                order.iter().map(|&id| k[id]).collect()
            }
            None => vec![0.0; n],
        };
        let partitions = (0..n)
            .step_by(partition_size)
            .map(|start| {
                let end = (start + partition_size).min(n);
                let mut mins = vec![f64::INFINITY; dim];
                let mut maxs = vec![f64::NEG_INFINITY; dim];
                for &id in &order[start..end] {
                    for (j, &x) in data.row(id).iter().enumerate() {
                        mins[j] = mins[j].min(x);
                        maxs[j] = maxs[j].max(x);
                    }
                }
                let slice = &layout_keys[start..end];
                PartitionMeta {
                    start,
                    end,
                    mins,
                    maxs,
                    key_min: slice.iter().copied().fold(f64::INFINITY, f64::min),
                    key_max: slice.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect();
        Ok(Self {
            dim,
            partition_size,
            permutation: order,
            keys: layout_keys,
            partitions,
            header: LayoutHeader::default(),
        })
    }
}

/// Sort row ids by ascending KEY (ties by id) and cut into `partition_size` slices.
pub fn partition_layout(data: &Dataset, keys: &[f64], partition_size: usize) -> Result<OptimizedLayout> {
    if keys.len() != data.len() {
        return Err(Error::invalid("keys", "one key per row required"));
    }
    if keys.iter().any(|k| k.is_nan()) {
        return Err(Error::invalid("keys", "NaN key"));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    OptimizedLayout::from_order(data, order, Some(keys), partition_size)
}

const MAGIC: &[u8; 4] = b"RLYT";
const VERSION: u32 = 1;

fn put_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(get_u64(r)?))
}

fn get_usize<R: Read>(r: &mut R, what: &str) -> Result<usize> {
    usize::try_from(get_u64(r)?).map_err(|_| Error::Format(format!("{what} overflows usize")))
}

/// Little-endian binary layout file:
///
/// ```text
/// "RLYT" | u32 version | u64 n | u64 dim | u64 partition_size | u64 clusters | u64 seed
/// n x u64 permutation | n x f64 keys
/// u64 partition count | per partition: u64 start, u64 end, f64 key_min, f64 key_max,
///                                      dim x f64 mins, dim x f64 maxs
/// ```
pub fn write_layout<W: Write>(mut w: W, layout: &OptimizedLayout) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [
        layout.len() as u64,
        layout.dim as u64,
        layout.partition_size as u64,
        layout.header.clusters,
        layout.header.seed,
    ] {
        put_u64(&mut w, v)?;
    }
    for &id in &layout.permutation {
        put_u64(&mut w, id as u64)?;
    }
    for &k in &layout.keys {
        put_f64(&mut w, k)?;
    }
    put_u64(&mut w, layout.partitions.len() as u64)?;
    for p in &layout.partitions {
        put_u64(&mut w, p.start as u64)?;
        put_u64(&mut w, p.end as u64)?;
        put_f64(&mut w, p.key_min)?;
        put_f64(&mut w, p.key_max)?;
        for &x in p.mins.iter().chain(&p.maxs) {
            put_f64(&mut w, x)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_layout<R: Read>(mut r: R) -> Result<OptimizedLayout> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut version = [0u8; 4];
    r.read_exact(&mut version)?;
    let version = u32::from_le_bytes(version);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = get_usize(&mut r, "n")?;
    let dim = get_usize(&mut r, "dim")?;
    let partition_size = get_usize(&mut r, "partition_size")?;
    let header = LayoutHeader {
        clusters: get_u64(&mut r)?,
        seed: get_u64(&mut r)?,
    };
    if dim == 0 || partition_size == 0 {
        return Err(Error::Format("zero dim or partition size".into()));
    }
    let permutation = (0..n)
        .map(|_| get_usize(&mut r, "row id"))
        .collect::<Result<Vec<_>>>()?;
    let mut seen = vec![false; n];
    for &id in &permutation {
        if id >= n || std::mem::replace(&mut seen[id], true) {
            return Err(Error::Format("permutation is not a bijection".into()));
        }
    }
    let keys = (0..n).map(|_| get_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let count = get_usize(&mut r, "partition count")?;
    if count != n.div_ceil(partition_size) {
        return Err(Error::Format(format!("{count} partitions for {n} rows")));
    }
    let mut partitions = Vec::with_capacity(count);
    for b in 0..count {
        let start = get_usize(&mut r, "start")?;
        let end = get_usize(&mut r, "end")?;
        if start != b * partition_size || end != (start + partition_size).min(n) {
            return Err(Error::Format(format!("partition {b} has bounds {start}..{end}")));
        }
        let key_min = get_f64(&mut r)?;
        let key_max = get_f64(&mut r)?;
        let mins = (0..dim).map(|_| get_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        let maxs = (0..dim).map(|_| get_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        partitions.push(PartitionMeta {
            start,
            end,
            mins,
            maxs,
            key_min,
            key_max,
        });
    }
    Ok(OptimizedLayout {
        dim,
        partition_size,
        permutation,
        keys,
        partitions,
        header,
    })
}
