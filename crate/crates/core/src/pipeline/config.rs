use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::{Checkpoint, Correctness, Language, Modality};
use crate::error::{Error, Result};
use crate::geometry::{ConstantPolicy, GeometryOptions, Metric};
use crate::stats::MIN_CONDITIONS;

pub const DEFAULT_PATH_TEMPLATE: &str = "{language}/{checkpoint}/{modality}/{correctness}/layer{layer}.rsae";

fn default_template() -> String {
    DEFAULT_PATH_TEMPLATE.to_string()
}

fn default_depth() -> u32 {
    12
}

fn default_fraction() -> f64 {
    0.01
}

/// One sweep over the layer × language × checkpoint × modality × correctness grid.
///
/// Relative `embedding_root` resolves against the config file's directory; relative
/// semantic set paths and expanded templates resolve against `embedding_root`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub embedding_root: PathBuf,
    /// NL reference set per language.
    pub semantic_sets: BTreeMap<Language, PathBuf>,
    /// Placeholders: `{language}`, `{layer}`, `{checkpoint}`, `{modality}`, `{correctness}`.
    #[serde(default = "default_template")]
    pub path_template: String,
    pub layers: Vec<u32>,
    pub languages: Vec<Language>,
    pub checkpoints: Vec<Checkpoint>,
    pub modalities: Vec<Modality>,
    pub correctness: Vec<Correctness>,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub max_conditions: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub permutations: Option<u32>,
    #[serde(default)]
    pub constant_policy: ConstantPolicy,
    #[serde(default = "default_fraction")]
    pub max_degenerate_fraction: f64,
    /// Encoder blocks of the probed model; layers run over `0..=model_depth`.
    #[serde(default = "default_depth")]
    pub model_depth: u32,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn has_duplicates<T: Ord + Clone>(items: &[T]) -> bool {
    let mut sorted = items.to_vec();
    sorted.sort();
    sorted.windows(2).any(|w| w[0] == w[1])
}

impl SweepConfig {
    /// Parses TOML, or JSON when the extension is `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<SweepConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut config = if is_json {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<SweepConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<SweepConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 over the canonical JSON form; `base_dir` is excluded so a moved
    /// workspace keeps its fingerprint.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn geometry_options(&self, threads: Option<usize>) -> GeometryOptions {
        GeometryOptions {
            metric: self.metric,
            constant_policy: self.constant_policy,
            max_degenerate_fraction: self.max_degenerate_fraction,
            threads,
        }
    }

    pub fn root(&self) -> PathBuf {
        self.base_dir.join(&self.embedding_root)
    }

    pub fn semantic_path(&self, language: Language) -> Option<PathBuf> {
        self.semantic_sets.get(&language).map(|p| self.root().join(p))
    }

    pub fn code_path(&self, language: Language, layer: u32, checkpoint: Checkpoint, modality: Modality, correctness: Correctness) -> PathBuf {
        let rel = self
            .path_template
            .replace("{language}", language.as_str())
            .replace("{layer}", &layer.to_string())
            .replace("{checkpoint}", checkpoint.as_str())
            .replace("{modality}", modality.as_str())
            .replace("{correctness}", correctness.as_str());
        self.root().join(rel)
    }

    /// Number of grid cells.
    pub fn grid_size(&self) -> usize {
        self.layers.len() * self.languages.len() * self.checkpoints.len() * self.modalities.len() * self.correctness.len()
    }

    /// Rejects malformed configs. Returns warnings for referenced paths that do not
    /// exist; the affected cells will be reported as missing input.
    pub fn validate(&self) -> Result<Vec<String>> {
        let axes = [
            ("layers", self.layers.is_empty(), has_duplicates(&self.layers)),
            ("languages", self.languages.is_empty(), has_duplicates(&self.languages)),
            ("checkpoints", self.checkpoints.is_empty(), has_duplicates(&self.checkpoints)),
            ("modalities", self.modalities.is_empty(), has_duplicates(&self.modalities)),
            ("correctness", self.correctness.is_empty(), has_duplicates(&self.correctness)),
        ];
        for (name, empty, dup) in axes {
            if empty {
                return Err(Error::Config(format!("axis `{name}` is empty")));
            }
            if dup {
                return Err(Error::Config(format!("axis `{name}` lists a value twice")));
            }
        }
        if let Some(layer) = self.layers.iter().find(|&&l| l > self.model_depth) {
            return Err(Error::Config(format!(
                "layer {layer} exceeds model depth {}",
                self.model_depth
            )));
        }
        if self.languages.contains(&Language::None) {
            return Err(Error::Config("`none` is not a code language".into()));
        }
        if self.modalities.contains(&Modality::NlOnly) {
            return Err(Error::Config("`nl-only` is not a code modality".into()));
        }
        if let Some(k) = self.max_conditions {
            if k < MIN_CONDITIONS {
                return Err(Error::Config(format!(
                    "max_conditions {k} is below the minimum of {MIN_CONDITIONS}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.max_degenerate_fraction) {
            return Err(Error::Config("max_degenerate_fraction must lie in [0, 1]".into()));
        }
        if self.permutations == Some(0) {
            return Err(Error::Config("permutations must be positive".into()));
        }

        let mut warnings = Vec::new();
        let root = self.root();
        if !root.is_dir() {
            warnings.push(format!("embedding root {} does not exist", root.display()));
        }
        for &language in &self.languages {
            match self.semantic_path(language) {
                None => warnings.push(format!("no semantic set configured for {language}")),
                Some(p) if !p.is_file() => {
                    warnings.push(format!("semantic set for {language} not found: {}", p.display()))
                }
                Some(_) => {}
            }
        }
        Ok(warnings)
    }
}
