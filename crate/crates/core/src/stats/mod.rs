//! Second-order comparison of two geometries.

mod analytic;
mod cellrank;
mod permutation;

use serde::{Deserialize, Serialize};

pub use analytic::{analytic_p, P_FLOOR};
pub use cellrank::{rank_cells, rank_cells_bounded, RankStore, DEFAULT_RAM_CELLS};
pub use permutation::{permutation_test, PermutationOptions};

use crate::error::{Error, Result};
use crate::geometry::Geometry;

/// Minimum number of conditions for a meaningful comparison (6 cell pairs).
pub const MIN_CONDITIONS: usize = 4;

/// Serialized with exactly these field names; absent permutation fields are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsaResult {
    pub score: f64,
    pub n_conditions: usize,
    pub n_cell_pairs: u64,
    pub p_analytic: f64,
    pub p_permutation: Option<f64>,
    pub n_permutations: Option<u32>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy)]
pub struct ScoreOptions {
    /// Cell vectors longer than this are ranked out of core.
    pub ram_cells: usize,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            ram_cells: DEFAULT_RAM_CELLS,
        }
    }
}

pub(crate) fn check_pair(gc: &Geometry, gs: &Geometry) -> Result<()> {
    if gc.condition_ids() != gs.condition_ids() {
        let first = gc
            .condition_ids()
            .iter()
            .zip(gs.condition_ids())
            .position(|(a, b)| a != b);
        let detail = match first {
            Some(k) => format!(
                "position {k}: `{}` vs `{}`",
                gc.condition_ids()[k],
                gs.condition_ids()[k]
            ),
            None => format!("{} vs {} conditions", gc.len(), gs.len()),
        };
        return Err(Error::ConditionMismatch(detail));
    }
    if gc.len() < MIN_CONDITIONS {
        return Err(Error::TooFewConditions {
            found: gc.len(),
            needed: MIN_CONDITIONS,
        });
    }
    Ok(())
}

const SUM_CHUNK: usize = 1 << 16;

/// Pearson correlation of two rank vectors of equal length `m`.
///
/// Average ranks always have mean `(m+1)/2`, so the centring is exact. Partial sums
/// are taken over fixed chunks and combined in order, keeping the result independent
/// of how the chunks are scheduled.
fn rank_correlation(a: &mut RankStore, b: &mut RankStore) -> Result<f64> {
    let m = a.len();
    let mean = (m as f64 + 1.0) / 2.0;
    let partial = |x: &[f64], y: &[f64]| {
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (&p, &q) in x.iter().zip(y) {
            let (dp, dq) = (p - mean, q - mean);
            sxy += dp * dq;
            sxx += dp * dp;
            syy += dq * dq;
        }
        [sxy, sxx, syy]
    };
    let partials: Vec<[f64; 3]> = match (&*a, &*b) {
        (RankStore::Memory(x), RankStore::Memory(y)) => {
            use rayon::prelude::*;
            x.par_chunks(SUM_CHUNK)
                .zip(y.par_chunks(SUM_CHUNK))
                .map(|(x, y)| partial(x, y))
                .collect()
        }
        _ => {
            let x = std::mem::replace(a, RankStore::Memory(Vec::new())).into_vec()?;
            let mut out = Vec::with_capacity(m.div_ceil(SUM_CHUNK));
            let mut offset = 0;
            b.for_each_chunk(SUM_CHUNK, |y| {
                out.push(partial(&x[offset..offset + y.len()], y));
                offset += y.len();
            })?;
            out
        }
    };
    let [sxy, sxx, syy] = partials
        .iter()
        .fold([0.0; 3], |acc, p| [acc[0] + p[0], acc[1] + p[1], acc[2] + p[2]]);
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantCells(
            "every cell of a geometry has the same value".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation between two cell vectors.
pub fn spearman_cells(a: &[f32], b: &[f32], opts: &ScoreOptions) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "cell vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut ra = rank_cells_bounded(a, opts.ram_cells)?;
    let mut rb = rank_cells_bounded(b, opts.ram_cells)?;
    rank_correlation(&mut ra, &mut rb)
}

/// Representational similarity: Spearman correlation of the two packed cell vectors
/// (diagonal excluded), with the analytic p-value over the `N(N-1)/2` cell pairs.
pub fn rsa_score(gc: &Geometry, gs: &Geometry) -> Result<RsaResult> {
    rsa_score_with(gc, gs, &ScoreOptions::default())
}

pub fn rsa_score_with(gc: &Geometry, gs: &Geometry, opts: &ScoreOptions) -> Result<RsaResult> {
    check_pair(gc, gs)?;
    let score = spearman_cells(gc.cells(), gs.cells(), opts)?;
    let m = gc.cells().len() as u64;
    Ok(RsaResult {
        score,
        n_conditions: gc.len(),
        n_cell_pairs: m,
        p_analytic: analytic_p(score, m)?,
        p_permutation: None,
        n_permutations: None,
        seed: None,
    })
}

/// [`rsa_score`] plus a permutation p-value.
pub fn rsa_score_permuted(gc: &Geometry, gs: &Geometry, opts: &PermutationOptions) -> Result<RsaResult> {
    let mut result = rsa_score(gc, gs)?;
    result.p_permutation = Some(permutation_test(gc, gs, opts)?);
    result.n_permutations = Some(opts.permutations);
    result.seed = Some(opts.seed);
    Ok(result)
}
