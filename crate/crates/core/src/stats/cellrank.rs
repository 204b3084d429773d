//! Average-tie ranks of packed geometry cells.
//!
//! Cells are f32, so each one maps to an order-preserving u32 key; packing
//! `key << 32 | index` into a u64 makes every element unique and lets a plain
//! integer sort order values with index as tie-break. Vectors longer than the
//! configured in-RAM limit are ranked by an external merge sort over temporary
//! files so that only the final rank vector has to be held.

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::assign_tied_ranks;

/// Default in-RAM ranking limit: 2^27 cells.
pub const DEFAULT_RAM_CELLS: usize = 1 << 27;

/// Order-preserving key of a finite f32; both zeros share a key.
#[inline]
fn key(x: f32) -> u32 {
    let bits = if x == 0.0 { 0u32 } else { x.to_bits() };
    if bits & 0x8000_0000 != 0 {
        !bits
    } else {
        bits | 0x8000_0000
    }
}

#[inline]
fn pack(x: f32, index: usize) -> u64 {
    (u64::from(key(x)) << 32) | index as u64
}

fn check_len(m: usize) -> Result<()> {
    if m > u32::MAX as usize {
        return Err(Error::InvalidArgument(format!(
            "{m} cells exceed the 2^32 ranking limit"
        )));
    }
    Ok(())
}

/// In-memory ranks.
pub fn rank_cells(cells: &[f32]) -> Result<Vec<f64>> {
    check_len(cells.len())?;
    let mut packed: Vec<u64> = cells.par_iter().enumerate().map(|(i, &c)| pack(c, i)).collect();
    packed.par_sort_unstable();
    let order: Vec<usize> = packed.iter().map(|&p| (p & 0xFFFF_FFFF) as usize).collect();
    let mut ranks = vec![0.0; cells.len()];
    assign_tied_ranks(&order, |a, b| key(cells[a]) == key(cells[b]), |k, r| ranks[k] = r);
    Ok(ranks)
}

/// Ranks held either in memory or in a temporary file of f64 values in index order.
pub enum RankStore {
    Memory(Vec<f64>),
    Disk { file: File, len: usize },
}

impl RankStore {
    pub fn len(&self) -> usize {
        match self {
            RankStore::Memory(v) => v.len(),
            RankStore::Disk { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visits consecutive chunks of ranks in index order.
    pub fn for_each_chunk(&mut self, chunk: usize, mut f: impl FnMut(&[f64])) -> Result<()> {
        match self {
            RankStore::Memory(v) => {
                v.chunks(chunk).for_each(f);
                Ok(())
            }
            RankStore::Disk { file, len } => {
                let io = |e| Error::io("<rank spill file>", e);
                file.seek(SeekFrom::Start(0)).map_err(io)?;
                let mut reader = BufReader::new(&*file);
                let mut bytes = vec![0u8; chunk * 8];
                let mut values = vec![0.0f64; chunk];
                let mut left = *len;
                while left > 0 {
                    let take = left.min(chunk);
                    reader.read_exact(&mut bytes[..take * 8]).map_err(io)?;
                    for (v, b) in values.iter_mut().zip(bytes.chunks_exact(8)).take(take) {
                        *v = f64::from_le_bytes(b.try_into().unwrap());
                    }
                    f(&values[..take]);
                    left -= take;
                }
                Ok(())
            }
        }
    }

    pub fn into_vec(mut self) -> Result<Vec<f64>> {
        if let RankStore::Memory(v) = self {
            return Ok(v);
        }
        let mut out = Vec::with_capacity(self.len());
        self.for_each_chunk(1 << 16, |c| out.extend_from_slice(c))?;
        Ok(out)
    }
}

/// Ranks `cells`, in memory when `cells.len() <= ram_cells`, otherwise on disk.
pub fn rank_cells_bounded(cells: &[f32], ram_cells: usize) -> Result<RankStore> {
    if cells.len() <= ram_cells {
        return Ok(RankStore::Memory(rank_cells(cells)?));
    }
    check_len(cells.len())?;
    external_ranks(cells, ram_cells.max(1))
}

fn spill_err(e: std::io::Error) -> Error {
    Error::io("<rank spill file>", e)
}

struct Run {
    reader: BufReader<File>,
    left: usize,
}

impl Run {
    fn next(&mut self) -> Result<Option<u64>> {
        if self.left == 0 {
            return Ok(None);
        }
        let mut b = [0u8; 8];
        self.reader.read_exact(&mut b).map_err(spill_err)?;
        self.left -= 1;
        Ok(Some(u64::from_le_bytes(b)))
    }
}

fn external_ranks(cells: &[f32], run_len: usize) -> Result<RankStore> {
    let m = cells.len();

    // 1. sorted runs
    let mut runs = Vec::new();
    for (r, chunk) in cells.chunks(run_len).enumerate() {
        let base = r * run_len;
        let mut packed: Vec<u64> = chunk
            .par_iter()
            .enumerate()
            .map(|(i, &c)| pack(c, base + i))
            .collect();
        packed.par_sort_unstable();
        let mut file = tempfile::tempfile().map_err(spill_err)?;
        {
            let mut w = BufWriter::new(&mut file);
            for p in &packed {
                w.write_all(&p.to_le_bytes()).map_err(spill_err)?;
            }
            w.flush().map_err(spill_err)?;
        }
        file.seek(SeekFrom::Start(0)).map_err(spill_err)?;
        runs.push(Run {
            reader: BufReader::new(file),
            left: packed.len(),
        });
    }

    // 2. k-way merge; each tie group is scattered to per-index-range buckets
    let n_buckets = m.div_ceil(run_len);
    let mut buckets = Vec::with_capacity(n_buckets);
    for _ in 0..n_buckets {
        buckets.push(BufWriter::new(tempfile::tempfile().map_err(spill_err)?));
    }
    let mut heap = BinaryHeap::with_capacity(runs.len());
    for (r, run) in runs.iter_mut().enumerate() {
        if let Some(p) = run.next()? {
            heap.push(Reverse((p, r)));
        }
    }
    let mut group: Vec<u32> = Vec::new();
    let mut group_key = None;
    let mut position = 0usize;
    let mut flush = |group: &mut Vec<u32>, position: &mut usize| -> Result<()> {
        let rank = (2 * *position + 1 + group.len()) as f64 / 2.0;
        for &idx in group.iter() {
            let w = &mut buckets[idx as usize / run_len];
            w.write_all(&idx.to_le_bytes()).map_err(spill_err)?;
            w.write_all(&rank.to_le_bytes()).map_err(spill_err)?;
        }
        *position += group.len();
        group.clear();
        Ok(())
    };
    while let Some(Reverse((p, r))) = heap.pop() {
        let k = (p >> 32) as u32;
        if group_key != Some(k) {
            if !group.is_empty() {
                flush(&mut group, &mut position)?;
            }
            group_key = Some(k);
        }
        group.push((p & 0xFFFF_FFFF) as u32);
        if let Some(next) = runs[r].next()? {
            heap.push(Reverse((next, r)));
        }
    }
    if !group.is_empty() {
        flush(&mut group, &mut position)?;
    }
    debug_assert_eq!(position, m);

    // 3. gather each bucket into index order
    let mut out = tempfile::tempfile().map_err(spill_err)?;
    {
        let mut w = BufWriter::new(&mut out);
        let mut slab = vec![0.0f64; run_len];
        for (b, bucket) in buckets.into_iter().enumerate() {
            let mut file = bucket.into_inner().map_err(|e| spill_err(e.into_error()))?;
            file.seek(SeekFrom::Start(0)).map_err(spill_err)?;
            let base = b * run_len;
            let len = run_len.min(m - base);
            let mut reader = BufReader::new(file);
            let mut rec = [0u8; 12];
            for _ in 0..len {
                reader.read_exact(&mut rec).map_err(spill_err)?;
                let idx = u32::from_le_bytes(rec[..4].try_into().unwrap()) as usize;
                slab[idx - base] = f64::from_le_bytes(rec[4..].try_into().unwrap());
            }
            for v in &slab[..len] {
                w.write_all(&v.to_le_bytes()).map_err(spill_err)?;
            }
        }
        w.flush().map_err(spill_err)?;
    }
    Ok(RankStore::Disk { file: out, len: m })
}
