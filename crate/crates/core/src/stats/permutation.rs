//! Label-permutation test for RSA scores.
//!
//! Conditions of the second geometry are relabelled by a uniformly random permutation
//! (rows and columns jointly) and the score recomputed. Trial `t` draws its permutation
//! from ChaCha8 seeded with the user seed on stream `t + 1`, so every trial is
//! reproducible on its own and the final count does not depend on scheduling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_pair, rank_cells};
use crate::error::{Error, Result};
use crate::geometry::{cell_index, Geometry};
use crate::parallel;

/// Permuted scores within this distance of the observed score count as reaching it.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationOptions {
    pub permutations: u32,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl PermutationOptions {
    pub fn new(permutations: u32, seed: u64) -> Self {
        PermutationOptions {
            permutations,
            seed,
            threads: None,
        }
    }
}

/// Ranks centred and scaled to unit norm, so a correlation is a plain dot product.
fn unit_ranks(cells: &[f32]) -> Result<Vec<f64>> {
    let mut r = rank_cells(cells)?;
    let mean = (r.len() as f64 + 1.0) / 2.0;
    r.iter_mut().for_each(|x| *x -= mean);
    let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ConstantCells(
            "every cell of a geometry has the same value".into(),
        ));
    }
    r.iter_mut().for_each(|x| *x /= norm);
    Ok(r)
}

/// Score of `a` against `b` with `b`'s conditions relabelled by `perm`.
fn permuted_score(a: &[f64], b: &[f64], n: usize, perm: &[usize]) -> f64 {
    let mut sum = 0.0;
    let mut k = 0;
    for i in 0..n {
        let pi = perm[i];
        for &pj in &perm[i + 1..] {
            let idx = if pi < pj { cell_index(n, pi, pj) } else { cell_index(n, pj, pi) };
            sum += a[k] * b[idx];
            k += 1;
        }
    }
    sum
}

pub(crate) fn trial_permutation(seed: u64, trial: u32, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(trial) + 1);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    perm
}

/// `p = (1 + #{trials with score ≥ observed}) / (permutations + 1)`.
pub fn permutation_test(gc: &Geometry, gs: &Geometry, opts: &PermutationOptions) -> Result<f64> {
    if opts.permutations == 0 {
        return Err(Error::InvalidArgument("permutation count must be at least 1".into()));
    }
    check_pair(gc, gs)?;
    let n = gc.len();
    let a = unit_ranks(gc.cells())?;
    let b = unit_ranks(gs.cells())?;
    let identity: Vec<usize> = (0..n).collect();
    let observed = permuted_score(&a, &b, n, &identity);

    let hits = parallel::pool(opts.threads).install(|| {
        (0..opts.permutations)
            .into_par_iter()
            .filter(|&t| {
                let perm = trial_permutation(opts.seed, t, n);
                permuted_score(&a, &b, n, &perm) >= observed - TIE_TOLERANCE
            })
            .count()
    });
    Ok((1 + hits) as f64 / (f64::from(opts.permutations) + 1.0))
}
