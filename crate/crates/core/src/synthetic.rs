//! Synthetic embedding sets with a known amount of shared structure.
//!
//! Every sample `k` has a latent vector `z_k`. The semantic view is
//! `S_k = A·z_k + ε_k` and the code view is `C_k = B·z_k + σ·ε'_k` with fixed random
//! projections `A`, `B` and standard normal noise, so the grounding of the code view in
//! the semantic view falls as `σ` grows. Used by the test suites and the `demo` command.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embedding::{
    write_set, Checkpoint, Correctness, EmbeddingMeta, EmbeddingSet, Language, Modality, Pooling,
};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentDims {
    pub latent_dim: usize,
    pub semantic_dim: usize,
    pub code_dim: usize,
    /// Scale of `ε` in the semantic view.
    pub semantic_noise: f64,
}

impl Default for LatentDims {
    fn default() -> Self {
        LatentDims {
            latent_dim: 8,
            semantic_dim: 32,
            code_dim: 48,
            semantic_noise: 0.5,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn project(matrix: &[f64], z: &[f64], out_dim: usize) -> Vec<f64> {
    let l = z.len();
    (0..out_dim)
        .map(|r| matrix[r * l..(r + 1) * l].iter().zip(z).map(|(a, b)| a * b).sum())
        .collect()
}

/// Latents and projections shared by every view drawn from one world.
pub struct LatentWorld {
    dims: LatentDims,
    ids: Vec<String>,
    latents: Vec<Vec<f64>>,
    semantic_proj: Vec<f64>,
    code_proj: Vec<f64>,
    seed: u64,
}

impl LatentWorld {
    pub fn new(n: usize, dims: LatentDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let latents = (0..n).map(|_| gaussian(&mut rng, dims.latent_dim)).collect();
        let semantic_proj = gaussian(&mut rng, dims.semantic_dim * dims.latent_dim);
        let code_proj = gaussian(&mut rng, dims.code_dim * dims.latent_dim);
        LatentWorld {
            dims,
            ids: (0..n).map(|i| format!("s{i:06}")).collect(),
            latents,
            semantic_proj,
            code_proj,
            seed,
        }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// The semantic view `A·z + ε`.
    pub fn semantic(&self, meta: EmbeddingMeta) -> EmbeddingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        self.view(&self.semantic_proj, self.dims.semantic_dim, self.dims.semantic_noise, &mut rng, meta)
    }

    /// A code view `B·z + σ·ε'`; `stream` picks an independent noise draw.
    pub fn code(&self, sigma: f64, stream: u64, meta: EmbeddingMeta) -> EmbeddingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream + 2);
        self.view(&self.code_proj, self.dims.code_dim, sigma, &mut rng, meta)
    }

    fn view(&self, proj: &[f64], dim: usize, noise: f64, rng: &mut ChaCha8Rng, meta: EmbeddingMeta) -> EmbeddingSet {
        let mut values = Vec::with_capacity(self.ids.len() * dim);
        for z in &self.latents {
            let clean = project(proj, z, dim);
            let eps = gaussian(rng, dim);
            values.extend(clean.iter().zip(&eps).map(|(c, e)| (c + noise * e) as f32));
        }
        EmbeddingSet::new(self.ids.clone(), values, dim, meta).expect("synthetic values are finite")
    }
}

/// Shorthand for one `(code, semantic)` pair of views with code noise `sigma`.
pub fn shared_latent_pair(n: usize, dims: LatentDims, sigma: f64, seed: u64) -> (EmbeddingSet, EmbeddingSet) {
    let world = LatentWorld::new(n, dims, seed);
    let code_meta = EmbeddingMeta {
        model_id: "synthetic".into(),
        layer: 0,
        modality: Modality::UnimodalPl,
        language: Language::Go,
        checkpoint: Checkpoint::X0,
        correctness: Correctness::Correct,
        pooling: Pooling::FirstToken,
    };
    let code = world.code(sigma, 0, code_meta);
    (code, world.semantic(EmbeddingMeta::semantic("synthetic", 0)))
}

/// A synthetic embedding tree laid out for a sweep.
#[derive(Debug, Clone)]
pub struct SyntheticGrid {
    pub samples: usize,
    pub languages: Vec<Language>,
    pub layers: Vec<u32>,
    pub checkpoints: Vec<Checkpoint>,
    pub modalities: Vec<Modality>,
    pub correctness: Vec<Correctness>,
    pub dims: LatentDims,
    pub seed: u64,
}

impl Default for SyntheticGrid {
    fn default() -> Self {
        SyntheticGrid {
            samples: 40,
            languages: vec![Language::Go],
            layers: (0..=12).collect(),
            checkpoints: Checkpoint::ALL.to_vec(),
            modalities: vec![Modality::BimodalNlPl, Modality::UnimodalPl],
            correctness: vec![Correctness::Correct, Correctness::Incorrect],
            dims: LatentDims::default(),
            seed: 0,
        }
    }
}

/// Relative path of one code set under the default sweep layout.
pub fn default_layout(language: Language, checkpoint: Checkpoint, modality: Modality, correctness: Correctness, layer: u32) -> PathBuf {
    PathBuf::from(format!("{language}/{checkpoint}/{modality}/{correctness}/layer{layer}.rsae"))
}

impl SyntheticGrid {
    /// Code noise of one cell. Deeper layers, more fine-tuning, bimodal input and correct
    /// submissions all lower the noise, mimicking the qualitative trends being probed.
    pub fn sigma(&self, layer: u32, checkpoint: Checkpoint, modality: Modality, correctness: Correctness) -> f64 {
        let depth = f64::from(layer) / 12.0;
        let tuning = (1.0 + checkpoint.multiple() as f64).log2() / 5.0;
        let mut sigma = 6.0 - 3.0 * depth * (0.5 + tuning);
        if modality == Modality::BimodalNlPl {
            sigma *= 0.6;
        }
        if correctness == Correctness::Incorrect {
            sigma *= 1.4;
        }
        sigma.max(0.2)
    }

    /// Writes every code set plus one semantic set per language (`<language>/semantic.rsae`)
    /// under `root`. Returns the semantic set paths in language order.
    pub fn write(&self, root: impl AsRef<Path>) -> Result<Vec<(Language, PathBuf)>> {
        let root = root.as_ref();
        let mut semantic_paths = Vec::new();
        for (li, &language) in self.languages.iter().enumerate() {
            let world = LatentWorld::new(self.samples, self.dims, self.seed.wrapping_add(li as u64));
            let dir = root.join(language.as_str());
            std::fs::create_dir_all(&dir).map_err(|e| crate::Error::io(&dir, e))?;
            let semantic_path = dir.join("semantic.rsae");
            write_set(&semantic_path, &world.semantic(EmbeddingMeta::semantic("synthetic-nl", 12)))?;
            semantic_paths.push((language, semantic_path));

            let mut stream = 0;
            for &checkpoint in &self.checkpoints {
                for &modality in &self.modalities {
                    for &correctness in &self.correctness {
                        for &layer in &self.layers {
                            let meta = EmbeddingMeta {
                                model_id: "synthetic-code".into(),
                                layer,
                                modality,
                                language,
                                checkpoint,
                                correctness,
                                pooling: Pooling::FirstToken,
                            };
                            let sigma = self.sigma(layer, checkpoint, modality, correctness);
                            let set = world.code(sigma, stream, meta);
                            stream += 1;
                            let path = root.join(default_layout(language, checkpoint, modality, correctness, layer));
                            let parent = path.parent().expect("layout path has a parent");
                            std::fs::create_dir_all(parent).map_err(|e| crate::Error::io(parent, e))?;
                            write_set(&path, &set)?;
                        }
                    }
                }
            }
        }
        Ok(semantic_paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn views_share_ids_and_are_reproducible() {
        let (c1, s1) = shared_latent_pair(10, LatentDims::default(), 1.0, 3);
        let (c2, s2) = shared_latent_pair(10, LatentDims::default(), 1.0, 3);
        assert_eq!(c1, c2);
        assert_eq!(s1, s2);
        assert_eq!(c1.ids(), s1.ids());
        assert_eq!((c1.dim(), s1.dim()), (48, 32));
    }

    #[test]
    fn noise_free_code_view_is_a_projection() {
        let dims = LatentDims { latent_dim: 2, semantic_dim: 3, code_dim: 3, semantic_noise: 0.0 };
        let world = LatentWorld::new(4, dims, 1);
        let a = world.code(0.0, 0, EmbeddingMeta::semantic("m", 0));
        let b = world.code(0.0, 9, EmbeddingMeta::semantic("m", 0));
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn grid_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let grid = SyntheticGrid {
            samples: 8,
            layers: vec![0, 12],
            checkpoints: vec![Checkpoint::X0, Checkpoint::X4],
            modalities: vec![Modality::UnimodalPl],
            correctness: vec![Correctness::Correct],
            ..Default::default()
        };
        let semantic = grid.write(dir.path()).unwrap();
        assert_eq!(semantic.len(), 1);
        let p = dir.path().join("go/x4/unimodal-pl/correct/layer12.rsae");
        let set = crate::embedding::read_set(&p).unwrap();
        assert_eq!(set.meta().layer, 12);
        assert_eq!(set.meta().checkpoint, Checkpoint::X4);
        assert_eq!(set.len(), 8);
    }
}
