#![allow(dead_code)]

use std::path::Path;

use rsa_probe::embedding::{Checkpoint, Correctness, Language, Modality};
use rsa_probe::pipeline::{SweepConfig, DEFAULT_PATH_TEMPLATE};
use rsa_probe::synthetic::SyntheticGrid;
use rsa_probe::Metric;

/// Writes `grid` under `root` and returns a matching sweep config.
pub fn sweep_fixture(root: &Path, grid: &SyntheticGrid) -> SweepConfig {
    let semantic = grid.write(root).expect("fixture written");
    SweepConfig {
        embedding_root: root.to_path_buf(),
        semantic_sets: semantic
            .into_iter()
            .map(|(lang, p)| (lang, p.strip_prefix(root).unwrap().to_path_buf()))
            .collect(),
        path_template: DEFAULT_PATH_TEMPLATE.to_string(),
        layers: grid.layers.clone(),
        languages: grid.languages.clone(),
        checkpoints: grid.checkpoints.clone(),
        modalities: grid.modalities.clone(),
        correctness: grid.correctness.clone(),
        metric: Metric::Spearman,
        max_conditions: None,
        seed: 11,
        permutations: None,
        constant_policy: Default::default(),
        max_degenerate_fraction: 0.01,
        model_depth: 12,
        base_dir: Default::default(),
    }
}

/// 2 layers × 1 language × 2 checkpoints, one modality and correctness.
pub fn small_grid() -> SyntheticGrid {
    SyntheticGrid {
        samples: 24,
        languages: vec![Language::Go],
        layers: vec![4, 12],
        checkpoints: vec![Checkpoint::X0, Checkpoint::X8],
        modalities: vec![Modality::UnimodalPl],
        correctness: vec![Correctness::Correct],
        ..Default::default()
    }
}
