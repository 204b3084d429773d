//! Representational geometries: packed pairwise dissimilarity matrices.
//!
//! A geometry over `N` conditions stores the `N(N-1)/2` cells above the diagonal in
//! row-major order, each cell being `1 - similarity(row_i, row_j)`.

mod io;
mod kernel;
mod rank;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use io::{decode_geometry, encode_geometry, read_geometry, write_geometry, GEOMETRY_MAGIC};
pub use rank::{rank_into, rank_transform};
pub(crate) use rank::assign_tied_ranks;

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Spearman,
    Pearson,
    Cosine,
}

impl Metric {
    pub fn tag(self) -> u8 {
        match self {
            Metric::Spearman => 0,
            Metric::Pearson => 1,
            Metric::Cosine => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Metric> {
        match tag {
            0 => Some(Metric::Spearman),
            1 => Some(Metric::Pearson),
            2 => Some(Metric::Cosine),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Spearman => "spearman",
            Metric::Pearson => "pearson",
            Metric::Cosine => "cosine",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spearman" => Ok(Metric::Spearman),
            "pearson" => Ok(Metric::Pearson),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric `{other}` (expected spearman, pearson or cosine)"
            ))),
        }
    }
}

/// What to do when a row has no variance (a constant vector for spearman/pearson,
/// an all-zero vector for cosine). Affected pairs always get similarity 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantPolicy {
    /// Similarity 0; fail when the degenerate fraction exceeds the limit.
    #[default]
    Zero,
    /// Similarity 0 with no limit.
    Allow,
    /// Fail on the first degenerate row.
    Error,
}

impl FromStr for ConstantPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(ConstantPolicy::Zero),
            "allow" => Ok(ConstantPolicy::Allow),
            "error" => Ok(ConstantPolicy::Error),
            other => Err(Error::InvalidArgument(format!(
                "unknown constant policy `{other}` (expected zero, allow or error)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryOptions {
    pub metric: Metric,
    pub constant_policy: ConstantPolicy,
    /// Largest tolerated fraction of degenerate pairs under [`ConstantPolicy::Zero`].
    pub max_degenerate_fraction: f64,
    /// Worker count; `None` defers to `RSAPROBE_THREADS`, then all cores.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        GeometryOptions {
            metric: Metric::Spearman,
            constant_policy: ConstantPolicy::Zero,
            max_degenerate_fraction: 0.01,
            threads: None,
        }
    }
}

impl GeometryOptions {
    pub fn with_metric(metric: Metric) -> Self {
        GeometryOptions {
            metric,
            ..Self::default()
        }
    }
}

/// Number of cells in the packed upper triangle of an `n × n` matrix.
pub fn cell_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Offset of row `i`'s first cell in the packed layout.
#[inline]
pub(crate) fn row_offset(n: usize, i: usize) -> usize {
    i * (2 * n - i - 1) / 2
}

/// Packed index of the cell `(i, j)`, `i < j`.
#[inline]
pub fn cell_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    row_offset(n, i) + (j - i - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    condition_ids: Vec<String>,
    cells: Vec<f32>,
    metric: Metric,
    degenerate_pairs: u64,
}

impl Geometry {
    /// Builds a geometry from packed cells, checking length, finiteness and range.
    pub fn from_parts(condition_ids: Vec<String>, cells: Vec<f32>, metric: Metric) -> Result<Self> {
        let n = condition_ids.len();
        if cells.len() != cell_count(n) {
            return Err(Error::Validation(format!(
                "{n} conditions need {} cells, got {}",
                cell_count(n),
                cells.len()
            )));
        }
        if let Some(k) = cells.iter().position(|c| !c.is_finite() || !(0.0..=2.0).contains(c)) {
            return Err(Error::Validation(format!(
                "cell {k} = {} outside [0, 2]",
                cells[k]
            )));
        }
        Ok(Geometry {
            condition_ids,
            cells,
            metric,
            degenerate_pairs: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.condition_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.condition_ids.is_empty()
    }

    pub fn condition_ids(&self) -> &[String] {
        &self.condition_ids
    }

    pub fn cells(&self) -> &[f32] {
        &self.cells
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn degenerate_pairs(&self) -> u64 {
        self.degenerate_pairs
    }

    /// Dissimilarity between conditions `i` and `j` in either order; 0 on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f32 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.cells[cell_index(self.len(), i, j)],
            std::cmp::Ordering::Greater => self.cells[cell_index(self.len(), j, i)],
        }
    }

    /// Reorders conditions so that new condition `k` is old condition `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Geometry {
        let n = self.len();
        assert_eq!(order.len(), n, "permutation length must match condition count");
        let mut cells = Vec::with_capacity(self.cells.len());
        for a in 0..n {
            for b in a + 1..n {
                cells.push(self.get(order[a], order[b]));
            }
        }
        Geometry {
            condition_ids: order.iter().map(|&k| self.condition_ids[k].clone()).collect(),
            cells,
            metric: self.metric,
            degenerate_pairs: self.degenerate_pairs,
        }
    }

    /// Same geometry with every cell passed through `f`.
    pub fn map_cells(&self, f: impl Fn(f32) -> f32) -> Geometry {
        Geometry {
            cells: self.cells.iter().map(|&c| f(c)).collect(),
            ..self.clone()
        }
    }

    /// Dense `N × N` view, for small geometries and debugging.
    pub fn to_dense(&self) -> Vec<Vec<f32>> {
        (0..self.len())
            .map(|i| (0..self.len()).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Outcome of a single pair: the dissimilarity and whether a constant vector forced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDissimilarity {
    pub value: f64,
    pub degenerate: bool,
}

fn is_degenerate(v: &[f64], metric: Metric) -> bool {
    match metric {
        Metric::Cosine => v.iter().all(|&x| x == 0.0),
        Metric::Spearman | Metric::Pearson => v.iter().all(|&x| x == v[0]),
    }
}

fn pearson(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        let (da, db) = (a - mu, b - mv);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    sxy / (sxx * syy).sqrt()
}

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    uv / (uu * vv).sqrt()
}

/// `1 - similarity(u, v)` under `metric`; Spearman is Pearson on average-tie ranks.
///
/// If either vector is degenerate (constant, or all-zero for cosine) the similarity is
/// taken as 0 and the outcome is flagged.
pub fn pair_dissimilarity(u: &[f64], v: &[f64], metric: Metric) -> Result<PairDissimilarity> {
    if u.len() != v.len() {
        return Err(Error::InvalidArgument(format!(
            "vector lengths differ: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    if u.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "vectors need at least 2 entries, got {}",
            u.len()
        )));
    }
    if is_degenerate(u, metric) || is_degenerate(v, metric) {
        return Ok(PairDissimilarity {
            value: 1.0,
            degenerate: true,
        });
    }
    let similarity = match metric {
        Metric::Spearman => pearson(&rank_transform(u), &rank_transform(v)),
        Metric::Pearson => pearson(u, v),
        Metric::Cosine => cosine(u, v),
    };
    Ok(PairDissimilarity {
        value: (1.0 - similarity.clamp(-1.0, 1.0)).clamp(0.0, 2.0),
        degenerate: false,
    })
}

fn widen(row: &[f32]) -> Vec<f64> {
    row.iter().map(|&x| f64::from(x)).collect()
}

fn check_set(set: &EmbeddingSet) -> Result<()> {
    if set.len() < 2 {
        return Err(Error::TooFewConditions {
            found: set.len(),
            needed: 2,
        });
    }
    if set.dim() < 2 {
        return Err(Error::InvalidArgument(format!(
            "embedding dimension {} is too small to correlate",
            set.dim()
        )));
    }
    Ok(())
}

/// Applies the constant-vector policy given the degenerate rows found.
fn enforce_policy(set: &EmbeddingSet, degenerate_rows: &[usize], opts: &GeometryOptions) -> Result<u64> {
    let n = set.len() as u64;
    let c = degenerate_rows.len() as u64;
    let pairs = c * (n - c) + c * c.saturating_sub(1) / 2;
    let total = n * (n - 1) / 2;
    let fail = match opts.constant_policy {
        ConstantPolicy::Allow => false,
        ConstantPolicy::Error => c > 0,
        ConstantPolicy::Zero => pairs as f64 > opts.max_degenerate_fraction * total as f64,
    };
    if fail {
        let limit_percent = match opts.constant_policy {
            ConstantPolicy::Error => 0.0,
            _ => opts.max_degenerate_fraction * 100.0,
        };
        return Err(Error::Degenerate {
            count: pairs,
            total,
            limit_percent,
            ids: degenerate_rows.iter().map(|&i| set.ids()[i].clone()).collect(),
        });
    }
    Ok(pairs)
}

/// Geometry via the blocked Gram-product path (see [`kernel`]).
pub fn compute_geometry(set: &EmbeddingSet, opts: &GeometryOptions) -> Result<Geometry> {
    check_set(set)?;
    let prepared = kernel::prepare(set, opts.metric, opts.threads);
    let degenerate_pairs = enforce_policy(set, &prepared.degenerate_rows(), opts)?;
    let cells = kernel::gram_cells(&prepared, opts.threads);
    Ok(Geometry {
        condition_ids: set.ids().to_vec(),
        cells,
        metric: opts.metric,
        degenerate_pairs,
    })
}

/// Reference geometry: one [`pair_dissimilarity`] call per pair, single-threaded.
pub fn compute_geometry_naive(set: &EmbeddingSet, opts: &GeometryOptions) -> Result<Geometry> {
    check_set(set)?;
    let n = set.len();
    let rows: Vec<Vec<f64>> = set.rows().map(widen).collect();
    let degenerate_rows: Vec<usize> = (0..n)
        .filter(|&i| is_degenerate(&rows[i], opts.metric))
        .collect();
    let mut cells = Vec::with_capacity(cell_count(n));
    let mut flagged = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            let pair = pair_dissimilarity(&rows[i], &rows[j], opts.metric)?;
            flagged += u64::from(pair.degenerate);
            cells.push(pair.value as f32);
        }
    }
    let degenerate_pairs = enforce_policy(set, &degenerate_rows, opts)?;
    debug_assert_eq!(flagged, degenerate_pairs);
    Ok(Geometry {
        condition_ids: set.ids().to_vec(),
        cells,
        metric: opts.metric,
        degenerate_pairs,
    })
}
