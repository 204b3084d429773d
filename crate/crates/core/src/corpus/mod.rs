//! NL-PL pair manifests from a CodeNet-style corpus.
//!
//! Submission metadata comes from delimiter-separated exports; problem descriptions are
//! pre-extracted plain text files named `<problem_id>.txt`. The sample id of a pair is
//! its submission id.

mod manifest;
mod metadata;
mod select;
mod splits;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use manifest::{build_pair_manifest, ManifestBuild, ManifestRow, PairManifest};
pub use metadata::{read_metadata, ColumnMapping, MetadataFormat, MetadataLoad};
pub use select::{partition_train_validation, select_problems, ProblemPolicy};
pub use splits::{make_ft_splits, SplitPlan, MIN_SPLIT_ROWS};

use crate::embedding::Language;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
}

impl Verdict {
    /// Only the literal status `Accepted` counts as accepted.
    pub fn from_status(status: &str) -> Verdict {
        if status.trim() == "Accepted" {
            Verdict::Accepted
        } else {
            Verdict::Rejected
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accepted => "accepted",
            Verdict::Rejected => "rejected",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Test,
    Train,
    Validation,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Test => "test",
            Split::Train => "train",
            Split::Validation => "validation",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test" => Ok(Split::Test),
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmissionRecord {
    pub problem_id: String,
    pub submission_id: String,
    pub language: Language,
    pub verdict: Verdict,
    pub code_path: PathBuf,
}
