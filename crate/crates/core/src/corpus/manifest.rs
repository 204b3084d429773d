use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Split, SubmissionRecord, Verdict};
use crate::embedding::Language;
use crate::error::{Error, Result};

/// CSV header of manifest files, in column order.
pub const MANIFEST_HEADER: [&str; 7] = [
    "problem_id",
    "submission_id",
    "language",
    "verdict",
    "description_path",
    "code_path",
    "split",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub problem_id: String,
    pub submission_id: String,
    pub language: Language,
    pub verdict: Verdict,
    pub description_path: PathBuf,
    pub code_path: PathBuf,
    pub split: Split,
}

impl ManifestRow {
    /// Sample id used by embedding sets built from this row.
    pub fn sample_id(&self) -> &str {
        &self.submission_id
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairManifest {
    pub rows: Vec<ManifestRow>,
}

impl PairManifest {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(MANIFEST_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.problem_id.as_str(),
                r.submission_id.as_str(),
                r.language.as_str(),
                r.verdict.as_str(),
                &r.description_path.to_string_lossy(),
                &r.code_path.to_string_lossy(),
                r.split.as_str(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<PairManifest> {
        let mut reader = csv::Reader::from_path(path.as_ref())?;
        let headers = reader.headers()?;
        if headers.iter().ne(MANIFEST_HEADER.iter().copied()) {
            return Err(Error::Corpus(format!(
                "{}: manifest header must be `{}`",
                path.as_ref().display(),
                MANIFEST_HEADER.join(",")
            )));
        }
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestRow>, _>>()?;
        Ok(PairManifest { rows })
    }

    /// Every description must exist and contain non-whitespace text.
    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            if !description_ok(&r.description_path) {
                return Err(Error::Corpus(format!(
                    "description {} for submission {} is missing or empty",
                    r.description_path.display(),
                    r.submission_id
                )));
            }
        }
        Ok(())
    }

    pub fn rows_in(&self, split: Split) -> impl Iterator<Item = &ManifestRow> {
        self.rows.iter().filter(move |r| r.split == split)
    }
}

fn description_ok(path: &Path) -> bool {
    std::fs::read_to_string(path).is_ok_and(|t| !t.trim().is_empty())
}

#[derive(Debug, Clone)]
pub struct ManifestBuild {
    pub manifest: PairManifest,
    /// Problems dropped for a missing or empty description.
    pub skipped_problems: Vec<String>,
}

/// One row per selected submission of each `(problem, language, verdict)` cell, at most
/// `per_cell_limit` per cell chosen by ascending submission id.
///
/// Test manifests carry both verdicts; train and validation manifests carry accepted
/// submissions only. Rows are ordered by problem, language, verdict, submission.
pub fn build_pair_manifest(
    problem_ids: &[String],
    split: Split,
    descriptions_dir: impl AsRef<Path>,
    records: &[SubmissionRecord],
    per_cell_limit: Option<usize>,
) -> Result<ManifestBuild> {
    let descriptions_dir = descriptions_dir.as_ref();
    if !descriptions_dir.is_dir() {
        return Err(Error::Corpus(format!(
            "descriptions directory {} does not exist",
            descriptions_dir.display()
        )));
    }
    let wanted: HashSet<&str> = problem_ids.iter().map(String::as_str).collect();
    let verdicts: &[Verdict] = match split {
        Split::Test => &[Verdict::Accepted, Verdict::Rejected],
        Split::Train | Split::Validation => &[Verdict::Accepted],
    };

    let mut cells: BTreeMap<(&str, Language, Verdict), Vec<&SubmissionRecord>> = BTreeMap::new();
    for r in records {
        if wanted.contains(r.problem_id.as_str()) && verdicts.contains(&r.verdict) {
            cells
                .entry((r.problem_id.as_str(), r.language, r.verdict))
                .or_default()
                .push(r);
        }
    }

    let mut problems: Vec<&str> = wanted.iter().copied().collect();
    problems.sort_unstable();
    let mut skipped = Vec::new();
    let mut rows = Vec::new();
    for problem in problems {
        let description = descriptions_dir.join(format!("{problem}.txt"));
        if !description_ok(&description) {
            log::warn!("skipping problem {problem}: no usable description at {}", description.display());
            skipped.push(problem.to_owned());
            continue;
        }
        for (_, subs) in cells.range_mut((problem, Language::Go, Verdict::Accepted)..=(problem, Language::None, Verdict::Rejected)) {
            subs.sort_by(|a, b| a.submission_id.cmp(&b.submission_id));
            let take = per_cell_limit.unwrap_or(usize::MAX);
            for r in subs.iter().take(take) {
                rows.push(ManifestRow {
                    problem_id: r.problem_id.clone(),
                    submission_id: r.submission_id.clone(),
                    language: r.language,
                    verdict: r.verdict,
                    description_path: description.clone(),
                    code_path: r.code_path.clone(),
                    split,
                });
            }
        }
    }
    if !problem_ids.is_empty() && 2 * skipped.len() > wanted.len() {
        return Err(Error::Corpus(format!(
            "{} of {} problems have no usable description under {}; is the corpus path right?",
            skipped.len(),
            wanted.len(),
            descriptions_dir.display()
        )));
    }
    Ok(ManifestBuild {
        manifest: PairManifest { rows },
        skipped_problems: skipped,
    })
}
