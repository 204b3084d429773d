//! Fast geometry path.
//!
//! Every row is reduced once to a centred vector (average ranks for spearman, raw
//! values for pearson, uncentred for cosine) together with its inverse norm. The cells
//! are then `1 - <r_i, r_j> / (|r_i| |r_j|)`, evaluated tile by tile over the packed
//! upper triangle.
//!
//! For spearman with `d ≤ 2048` the centred ranks are stored doubled, `2r - (d+1)`,
//! which is always an integer; dot products are then exact in integer arithmetic.
//! Otherwise rows are pre-normalised f64 and every dot product accumulates in a fixed
//! four-lane order. Either way each cell is computed independently by exactly one
//! worker, so the output does not depend on the thread count.

use rayon::prelude::*;

use super::{cell_count, rank, row_offset, Metric};
use crate::embedding::EmbeddingSet;
use crate::parallel;

const TILE: usize = 256;
/// Largest dimension for which doubled centred ranks fit the i32 chunk sums below.
const MAX_INT_DIM: usize = 2048;
/// Products per i32 partial sum: 256 · 2047² < 2³¹.
const INT_CHUNK: usize = 256;

pub(crate) enum Prepared {
    /// Doubled centred ranks, row-major, plus each row's squared norm (0 for constant rows).
    Ranks { rows: Vec<i16>, sq_norm: Vec<i64>, dim: usize },
    /// Unit-norm centred rows (all-zero for degenerate rows).
    Unit { rows: Vec<f64>, degenerate: Vec<bool>, dim: usize },
}

impl Prepared {
    pub(crate) fn len(&self) -> usize {
        match self {
            Prepared::Ranks { sq_norm, .. } => sq_norm.len(),
            Prepared::Unit { degenerate, .. } => degenerate.len(),
        }
    }

    pub(crate) fn degenerate_rows(&self) -> Vec<usize> {
        match self {
            Prepared::Ranks { sq_norm, .. } => (0..sq_norm.len()).filter(|&i| sq_norm[i] == 0).collect(),
            Prepared::Unit { degenerate, .. } => (0..degenerate.len()).filter(|&i| degenerate[i]).collect(),
        }
    }
}

pub(crate) fn prepare(set: &EmbeddingSet, metric: Metric, threads: Option<usize>) -> Prepared {
    let dim = set.dim();
    let n = set.len();
    let pool = parallel::pool(threads);
    pool.install(|| {
        if metric == Metric::Spearman && dim <= MAX_INT_DIM {
            let mut rows = vec![0i16; n * dim];
            let mut sq_norm = vec![0i64; n];
            rows.par_chunks_mut(dim)
                .zip(sq_norm.par_iter_mut())
                .enumerate()
                .for_each_init(
                    || (vec![0.0f64; dim], vec![0usize; dim], vec![0.0f64; dim]),
                    |(values, order, ranks), (i, (out, ss))| {
                        for (v, &x) in values.iter_mut().zip(set.row(i)) {
                            *v = f64::from(x);
                        }
                        rank::centred_double_ranks(values, order, ranks, out);
                        *ss = out.iter().map(|&x| i64::from(x) * i64::from(x)).sum();
                    },
                );
            Prepared::Ranks { rows, sq_norm, dim }
        } else {
            let mut rows = vec![0.0f64; n * dim];
            let mut degenerate = vec![false; n];
            rows.par_chunks_mut(dim)
                .zip(degenerate.par_iter_mut())
                .enumerate()
                .for_each_init(
                    || (vec![0.0f64; dim], vec![0usize; dim], vec![0.0f64; dim]),
                    |(values, order, ranks), (i, (out, flag))| {
                        for (v, &x) in values.iter_mut().zip(set.row(i)) {
                            *v = f64::from(x);
                        }
                        *flag = match metric {
                            Metric::Cosine => values.iter().all(|&x| x == 0.0),
                            _ => values.iter().all(|&x| x == values[0]),
                        };
                        if *flag {
                            out.fill(0.0);
                            return;
                        }
                        let source: &[f64] = if metric == Metric::Spearman {
                            rank::rank_into(values, order, ranks);
                            ranks
                        } else {
                            values
                        };
                        let mean = if metric == Metric::Cosine {
                            0.0
                        } else {
                            source.iter().sum::<f64>() / dim as f64
                        };
                        for (o, &x) in out.iter_mut().zip(source) {
                            *o = x - mean;
                        }
                        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
                        for o in out.iter_mut() {
                            *o /= norm;
                        }
                    },
                );
            Prepared::Unit { rows, degenerate, dim }
        }
    })
}

#[inline(always)]
fn dot_i16_generic(a: &[i16], b: &[i16]) -> i64 {
    let mut total = 0i64;
    for (ca, cb) in a.chunks(INT_CHUNK).zip(b.chunks(INT_CHUNK)) {
        let partial: i32 = ca
            .iter()
            .zip(cb)
            .map(|(&x, &y)| i32::from(x) * i32::from(y))
            .sum();
        total += i64::from(partial);
    }
    total
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn dot_i16_avx2(a: &[i16], b: &[i16]) -> i64 {
    dot_i16_generic(a, b)
}

#[inline]
fn dot_i16(a: &[i16], b: &[i16], avx2: bool) -> i64 {
    #[cfg(target_arch = "x86_64")]
    if avx2 {
        // SAFETY: only taken when the CPU reports AVX2 support.
        return unsafe { dot_i16_avx2(a, b) };
    }
    let _ = avx2;
    dot_i16_generic(a, b)
}

#[inline]
fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// Correlation of two integer rank vectors from their dot product and squared norms.
/// Parallel vectors are detected exactly so identical rows give a cell of exactly 0.
#[inline]
fn rank_similarity(dot: i64, ss_i: i64, ss_j: i64) -> f64 {
    if ss_i == 0 || ss_j == 0 {
        return 0.0;
    }
    if i128::from(dot) * i128::from(dot) == i128::from(ss_i) * i128::from(ss_j) {
        return dot.signum() as f64;
    }
    dot as f64 / (ss_i as f64 * ss_j as f64).sqrt()
}

#[inline]
fn to_cell(similarity: f64) -> f32 {
    (1.0 - similarity.clamp(-1.0, 1.0)).clamp(0.0, 2.0) as f32
}

/// Fills rows `r0..r1` of the packed triangle; `out` is exactly those rows' cells.
fn fill_block(prepared: &Prepared, n: usize, r0: usize, r1: usize, out: &mut [f32], avx2: bool) {
    let base = row_offset(n, r0);
    let mut c0 = r0;
    while c0 < n {
        let c1 = (c0 + TILE).min(n);
        for i in r0..r1 {
            let j0 = c0.max(i + 1);
            if j0 >= c1 {
                continue;
            }
            let start = row_offset(n, i) + (j0 - i - 1) - base;
            let dst = &mut out[start..start + (c1 - j0)];
            match prepared {
                Prepared::Ranks { rows, sq_norm, dim } => {
                    let ri = &rows[i * dim..(i + 1) * dim];
                    for (slot, j) in dst.iter_mut().zip(j0..c1) {
                        let dot = dot_i16(ri, &rows[j * dim..(j + 1) * dim], avx2);
                        *slot = to_cell(rank_similarity(dot, sq_norm[i], sq_norm[j]));
                    }
                }
                Prepared::Unit { rows, dim, .. } => {
                    let ri = &rows[i * dim..(i + 1) * dim];
                    for (slot, j) in dst.iter_mut().zip(j0..c1) {
                        *slot = to_cell(dot_f64(ri, &rows[j * dim..(j + 1) * dim]));
                    }
                }
            }
        }
        c0 = c1;
    }
}

fn has_avx2() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("avx2")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

/// Packed cells for a prepared matrix, parallel over row blocks.
pub(crate) fn gram_cells(prepared: &Prepared, threads: Option<usize>) -> Vec<f32> {
    let n = prepared.len();
    let mut cells = vec![0.0f32; cell_count(n)];
    let avx2 = has_avx2();

    // Row blocks own disjoint, contiguous ranges of the packed layout.
    let mut blocks = Vec::new();
    let mut rest: &mut [f32] = &mut cells;
    let mut r0 = 0;
    while r0 < n {
        let r1 = (r0 + TILE).min(n);
        let len = row_offset(n, r1) - row_offset(n, r0);
        let (head, tail) = rest.split_at_mut(len);
        blocks.push((r0, r1, head));
        rest = tail;
        r0 = r1;
    }

    parallel::pool(threads).install(|| {
        blocks
            .into_par_iter()
            .for_each(|(r0, r1, out)| fill_block(prepared, n, r0, r1, out, avx2));
    });
    cells
}
