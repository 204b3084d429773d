use std::collections::HashSet;
use std::path::{Path, PathBuf};

use super::{SubmissionRecord, Verdict};
use crate::embedding::Language;
use crate::error::{Error, Result};

/// Header names of the five required columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMapping {
    pub problem_id: String,
    pub submission_id: String,
    pub language: String,
    pub status: String,
    pub path: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            problem_id: "problem_id".into(),
            submission_id: "submission_id".into(),
            language: "language".into(),
            status: "status".into(),
            path: "path".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetadataFormat {
    pub delimiter: u8,
    pub columns: ColumnMapping,
}

impl Default for MetadataFormat {
    fn default() -> Self {
        MetadataFormat {
            delimiter: b',',
            columns: ColumnMapping::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MetadataLoad {
    pub records: Vec<SubmissionRecord>,
    /// Rows in languages outside the six supported ones.
    pub skipped_rows: usize,
}

/// Reads a submission metadata export. Relative code paths resolve against the
/// directory holding the metadata file.
pub fn read_metadata(path: impl AsRef<Path>, format: &MetadataFormat) -> Result<MetadataLoad> {
    let path = path.as_ref();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Corpus(format!("{}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Corpus(format!("{}: missing column `{name}`", path.display()))
        })
    };
    let c = &format.columns;
    let (pi, si, li, st, pa) = (
        col(&c.problem_id)?,
        col(&c.submission_id)?,
        col(&c.language)?,
        col(&c.status)?,
        col(&c.path)?,
    );

    let mut load = MetadataLoad::default();
    let mut seen = HashSet::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let field = |k: usize| row.get(k).unwrap_or_default();
        let Some(language) = Language::from_codenet(field(li)) else {
            load.skipped_rows += 1;
            continue;
        };
        let problem_id = field(pi).to_owned();
        let submission_id = field(si).to_owned();
        if problem_id.is_empty() || submission_id.is_empty() {
            return Err(Error::Corpus(format!(
                "{}: data row {} lacks a problem or submission id",
                path.display(),
                line + 1
            )));
        }
        if !seen.insert((problem_id.clone(), submission_id.clone())) {
            return Err(Error::Corpus(format!(
                "duplicate submission ({problem_id}, {submission_id})"
            )));
        }
        let code = PathBuf::from(field(pa));
        load.records.push(SubmissionRecord {
            problem_id,
            submission_id,
            language,
            verdict: Verdict::from_status(field(st)),
            code_path: if code.is_relative() { base.join(code) } else { code },
        });
    }
    Ok(load)
}
