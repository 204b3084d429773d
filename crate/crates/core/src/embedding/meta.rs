use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declares a closed label set that round-trips through its kebab-case name.
macro_rules! labels {
    ($(#[$attr:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$attr])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::InvalidArgument(format!(
                        "unknown {} `{}` (expected one of: {})",
                        stringify!($name),
                        other,
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }
    };
}

labels!(
    /// Input setting under which a representation was extracted.
    Modality {
        UnimodalPl => "unimodal-pl",
        BimodalNlPl => "bimodal-nl-pl",
        NlOnly => "nl-only",
    }
);

labels!(
    /// Programming language of a sample; `None` marks natural-language-only sets.
    Language {
        Go => "go",
        Java => "java",
        JavaScript => "javascript",
        Php => "php",
        Python => "python",
        Ruby => "ruby",
        None => "none",
    }
);

labels!(
    Correctness {
        Correct => "correct",
        Incorrect => "incorrect",
        NotApplicable => "n/a",
    }
);

labels!(
    Pooling {
        FirstToken => "first-token",
        Mean => "mean",
    }
);

labels!(
    /// Fine-tuning checkpoint: `x0` is the pre-trained model, `xk` was tuned on `k·|x1|` pairs.
    Checkpoint {
        X0 => "x0",
        X1 => "x1",
        X2 => "x2",
        X4 => "x4",
        X8 => "x8",
        X16 => "x16",
        X32 => "x32",
    }
);

impl Language {
    /// The six languages with code submissions.
    pub const CODE: [Language; 6] = [
        Language::Go,
        Language::Java,
        Language::JavaScript,
        Language::Php,
        Language::Python,
        Language::Ruby,
    ];

    /// Parses the spellings found in CodeNet metadata ("JavaScript", "Python", ...).
    pub fn from_codenet(s: &str) -> Option<Language> {
        match s.trim().to_ascii_lowercase().as_str() {
            "go" => Some(Language::Go),
            "java" => Some(Language::Java),
            "javascript" | "js" => Some(Language::JavaScript),
            "php" => Some(Language::Php),
            "python" => Some(Language::Python),
            "ruby" => Some(Language::Ruby),
            _ => None,
        }
    }
}

impl Checkpoint {
    /// Fine-tuning checkpoints excluding the pre-trained `x0`.
    pub const TUNED: [Checkpoint; 6] = [
        Checkpoint::X1,
        Checkpoint::X2,
        Checkpoint::X4,
        Checkpoint::X8,
        Checkpoint::X16,
        Checkpoint::X32,
    ];

    /// Multiple of `|x1|` this checkpoint was tuned on.
    pub fn multiple(self) -> usize {
        match self {
            Checkpoint::X0 => 0,
            Checkpoint::X1 => 1,
            Checkpoint::X2 => 2,
            Checkpoint::X4 => 4,
            Checkpoint::X8 => 8,
            Checkpoint::X16 => 16,
            Checkpoint::X32 => 32,
        }
    }
}

/// Provenance stored in the `<name>.meta.json` sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub model_id: String,
    pub layer: u32,
    pub modality: Modality,
    pub language: Language,
    pub checkpoint: Checkpoint,
    pub correctness: Correctness,
    pub pooling: Pooling,
}

impl EmbeddingMeta {
    /// Metadata for a natural-language reference set.
    pub fn semantic(model_id: impl Into<String>, layer: u32) -> Self {
        EmbeddingMeta {
            model_id: model_id.into(),
            layer,
            modality: Modality::NlOnly,
            language: Language::None,
            checkpoint: Checkpoint::X0,
            correctness: Correctness::NotApplicable,
            pooling: Pooling::FirstToken,
        }
    }

    /// Checks the layer index against the depth of the producing model
    /// (layer 0 is the embedding layer, so a 12-block encoder has layers 0..=12).
    pub fn check_depth(&self, depth: u32) -> Result<()> {
        if self.layer > depth {
            return Err(Error::Validation(format!(
                "layer {} exceeds model depth {}",
                self.layer, depth
            )));
        }
        Ok(())
    }
}
