//! Embedding sets: per-sample pooled vectors with identity and provenance.

mod align;
mod codec;

pub(crate) mod codec_internals {
    pub(crate) use super::codec::{check_magic, read_trailing_ids};
}
mod meta;

use std::collections::HashSet;

pub use align::{align_sets, subsample_ids};
pub use codec::{
    decode, encode, load_set, read_ids, read_set, read_tsv, sidecar_path, write_set, write_tsv,
    MAGIC,
};
pub use meta::{Checkpoint, Correctness, EmbeddingMeta, Language, Modality, Pooling};

use crate::error::{Error, Result};

/// `N` samples by `d` dimensions, row-major, with unique ids.
///
/// Immutable once constructed; all invariants are checked in [`EmbeddingSet::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    ids: Vec<String>,
    values: Vec<f32>,
    dim: usize,
    meta: EmbeddingMeta,
}

impl EmbeddingSet {
    pub fn new(ids: Vec<String>, values: Vec<f32>, dim: usize, meta: EmbeddingMeta) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("dimension must be at least 1".into()));
        }
        if ids.len().checked_mul(dim) != Some(values.len()) {
            return Err(Error::Validation(format!(
                "{} ids with dimension {} need {} values, got {}",
                ids.len(),
                dim,
                ids.len().saturating_mul(dim),
                values.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if id.is_empty() || id.contains('\n') {
                return Err(Error::Validation(format!(
                    "sample id {id:?} is empty or contains a newline"
                )));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::Validation(format!("duplicate sample id `{id}`")));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value {} in row `{}` at column {}",
                values[pos],
                ids[pos / dim],
                pos % dim
            )));
        }
        Ok(EmbeddingSet {
            ids,
            values,
            dim,
            meta,
        })
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f32>], meta: EmbeddingMeta) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Validation(format!(
                "row {bad} has dimension {} but row 0 has {dim}",
                rows[bad].len()
            )));
        }
        if ids.len() != rows.len() {
            return Err(Error::Validation(format!(
                "{} ids for {} rows",
                ids.len(),
                rows.len()
            )));
        }
        let dim = if rows.is_empty() { 1 } else { dim };
        Self::new(ids, rows.concat(), dim, meta)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn meta(&self) -> &EmbeddingMeta {
        &self.meta
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.values.chunks_exact(self.dim)
    }

    /// New set holding the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> EmbeddingSet {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        let mut ids = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            ids.push(self.ids[i].clone());
        }
        EmbeddingSet {
            ids,
            values,
            dim: self.dim,
            meta: self.meta.clone(),
        }
    }

    /// Keeps only the listed ids, in the listed order. Unknown ids are an error.
    pub fn restrict_to(&self, ids: &[String]) -> Result<EmbeddingSet> {
        let index: std::collections::HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let rows = ids
            .iter()
            .map(|id| {
                index.get(id.as_str()).copied().ok_or_else(|| {
                    Error::Validation(format!("sample id `{id}` not present in set"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select(&rows))
    }

    /// Requires at least `min` samples.
    pub fn require_len(&self, min: usize) -> Result<()> {
        if self.len() < min {
            return Err(Error::Validation(format!(
                "set has {} samples, need at least {min}",
                self.len()
            )));
        }
        Ok(())
    }
}
