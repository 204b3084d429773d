//! Representational similarity analysis (RSA) for probing embeddings of code models.
//!
//! The crate is organised along the data flow of an RSA study:
//!
//! - [`embedding`]: on-disk embedding sets (`RSAE1`) with JSON sidecars, and
//!   alignment of two sets on shared sample ids.
//! - [`geometry`]: pairwise dissimilarity matrices (packed upper triangle)
//!   with a naive reference path and a blocked Gram-product fast path.
//! - [`stats`]: second-order similarity between two geometries with analytic
//!   and permutation p-values.
//! - [`corpus`]: NL-PL pair manifests built from CodeNet-style metadata and
//!   nested fine-tuning splits.
//! - [`pipeline`]: grid sweeps over layers, languages, checkpoints, input
//!   modality and submission correctness, plus CSV/JSON/SVG reports.


pub mod corpus;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod parallel;
pub mod pipeline;

pub mod stats;
pub mod synthetic;


pub use embedding::{align_sets, EmbeddingMeta, EmbeddingSet};
pub use error::{Error, Result};
pub use geometry::{compute_geometry, Geometry, GeometryOptions, Metric};
pub use stats::{permutation_test, rsa_score, PermutationOptions, RsaResult};
