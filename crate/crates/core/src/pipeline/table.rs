use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{Checkpoint, Correctness, Language, Modality};
use crate::error::{Error, Result};
use crate::stats::RsaResult;

/// Grid coordinates; the derived order is the canonical table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub language: Language,
    pub layer: u32,
    pub checkpoint: Checkpoint,
    pub modality: Modality,
    pub correctness: Correctness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    MissingInput,
    Degenerate,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::MissingInput => "missing-input",
            Status::Degenerate => "degenerate",
        }
    }

    fn parse(s: &str) -> Result<Status> {
        match s {
            "ok" => Ok(Status::Ok),
            "missing-input" => Ok(Status::MissingInput),
            "degenerate" => Ok(Status::Degenerate),
            other => Err(Error::Config(format!("unknown status `{other}`"))),
        }
    }
}

/// One grid cell. `rs` and `p_analytic` are present iff `status` is `ok`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub language: Language,
    pub layer: u32,
    pub checkpoint: Checkpoint,
    pub modality: Modality,
    pub correctness: Correctness,
    pub rs: Option<f64>,
    pub p_analytic: Option<f64>,
    pub p_permutation: Option<f64>,
    pub n_conditions: usize,
    pub status: Status,
}

impl ScoreRecord {
    pub fn key(&self) -> CellKey {
        CellKey {
            language: self.language,
            layer: self.layer,
            checkpoint: self.checkpoint,
            modality: self.modality,
            correctness: self.correctness,
        }
    }

    fn empty(key: CellKey, n_conditions: usize, status: Status) -> Self {
        ScoreRecord {
            language: key.language,
            layer: key.layer,
            checkpoint: key.checkpoint,
            modality: key.modality,
            correctness: key.correctness,
            rs: None,
            p_analytic: None,
            p_permutation: None,
            n_conditions,
            status,
        }
    }

    pub fn missing(key: CellKey) -> Self {
        Self::empty(key, 0, Status::MissingInput)
    }

    pub fn degenerate(key: CellKey, n_conditions: usize) -> Self {
        Self::empty(key, n_conditions, Status::Degenerate)
    }

    pub fn scored(key: CellKey, result: &RsaResult) -> Self {
        ScoreRecord {
            rs: Some(result.score),
            p_analytic: Some(result.p_analytic),
            p_permutation: result.p_permutation,
            ..Self::empty(key, result.n_conditions, Status::Ok)
        }
    }

    fn check(&self) -> Result<()> {
        let scored = self.rs.is_some() && self.p_analytic.is_some();
        let blank = self.rs.is_none() && self.p_analytic.is_none() && self.p_permutation.is_none();
        if (self.status == Status::Ok && !scored) || (self.status != Status::Ok && !blank) {
            return Err(Error::Config(format!(
                "record {:?} has status {} but inconsistent scores",
                self.key(),
                self.status.as_str()
            )));
        }
        Ok(())
    }
}

/// Column order of the CSV report.
pub const CSV_COLUMNS: [&str; 11] = [
    "language",
    "layer",
    "checkpoint",
    "modality",
    "correctness",
    "rs",
    "p_analytic",
    "p_permutation",
    "n_conditions",
    "status",
    "config_fingerprint",
];

/// Sweep output in canonical grid order; one record per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub config_fingerprint: String,
    pub records: Vec<ScoreRecord>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn parse_opt(s: &str, column: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Config(format!("bad {column} value `{s}`")))
}

impl ScoreTable {
    /// Sorts into grid order and validates.
    pub fn new(config_fingerprint: String, mut records: Vec<ScoreRecord>) -> Result<ScoreTable> {
        records.sort_by_key(ScoreRecord::key);
        let table = ScoreTable {
            config_fingerprint,
            records,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for r in &self.records {
            r.check()?;
            if !seen.insert(r.key()) {
                return Err(Error::Config(format!("duplicate record for {:?}", r.key())));
            }
        }
        if !self.records.windows(2).all(|w| w[0].key() < w[1].key()) {
            return Err(Error::Config("records are not in grid order".into()));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, key: &CellKey) -> Option<&ScoreRecord> {
        self.records
            .binary_search_by_key(key, ScoreRecord::key)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS)?;
        for r in &self.records {
            w.write_record([
                r.language.as_str().to_string(),
                r.layer.to_string(),
                r.checkpoint.as_str().to_string(),
                r.modality.as_str().to_string(),
                r.correctness.as_str().to_string(),
                opt(r.rs),
                opt(r.p_analytic),
                opt(r.p_permutation),
                r.n_conditions.to_string(),
                r.status.as_str().to_string(),
                self.config_fingerprint.clone(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<ScoreTable> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.iter().ne(CSV_COLUMNS) {
            return Err(Error::Config(format!(
                "unexpected score table header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut fingerprint: Option<String> = None;
        let mut records = Vec::new();
        for row in reader.records() {
            let row = row?;
            let f = |i: usize| row.get(i).unwrap_or("");
            let int = |i: usize| -> Result<u64> {
                f(i).parse()
                    .map_err(|_| Error::Config(format!("bad {} value `{}`", CSV_COLUMNS[i], f(i))))
            };
            match &fingerprint {
                None => fingerprint = Some(f(10).to_string()),
                Some(fp) if fp != f(10) => {
                    return Err(Error::Config("rows disagree on config_fingerprint".into()))
                }
                Some(_) => {}
            }
            records.push(ScoreRecord {
                language: f(0).parse()?,
                layer: int(1)? as u32,
                checkpoint: f(2).parse()?,
                modality: f(3).parse()?,
                correctness: f(4).parse()?,
                rs: parse_opt(f(5), "rs")?,
                p_analytic: parse_opt(f(6), "p_analytic")?,
                p_permutation: parse_opt(f(7), "p_permutation")?,
                n_conditions: int(8)? as usize,
                status: Status::parse(f(9))?,
            });
        }
        ScoreTable::new(fingerprint.unwrap_or_default(), records)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<ScoreTable> {
        let table: ScoreTable = serde_json::from_str(text)?;
        ScoreTable::new(table.config_fingerprint, table.records)
    }

    /// Reads a table written as `.csv` or `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<ScoreTable> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Self::from_csv(&text)
        } else {
            Self::from_json(&text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(layer: u32) -> CellKey {
        CellKey {
            language: Language::Go,
            layer,
            checkpoint: Checkpoint::X0,
            modality: Modality::UnimodalPl,
            correctness: Correctness::Correct,
        }
    }

    fn sample() -> ScoreTable {
        let result = RsaResult {
            score: 0.123456789012345,
            n_conditions: 30,
            n_cell_pairs: 435,
            p_analytic: 1.5e-200,
            p_permutation: Some(0.001),
            n_permutations: Some(999),
            seed: Some(1),
        };
        ScoreTable::new(
            "abc".into(),
            vec![
                ScoreRecord::missing(key(2)),
                ScoreRecord::scored(key(0), &result),
                ScoreRecord::degenerate(key(1), 3),
            ],
        )
        .unwrap()
    }

    #[test]
    fn new_sorts_into_grid_order() {
        let t = sample();
        let layers: Vec<u32> = t.records.iter().map(|r| r.layer).collect();
        assert_eq!(layers, [0, 1, 2]);
        assert_eq!(t.get(&key(1)).unwrap().status, Status::Degenerate);
        assert!(t.get(&key(5)).is_none());
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let t = sample();
        let csv = t.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines[3], "go,2,x0,unimodal-pl,correct,,,,0,missing-input,abc");
        assert_eq!(ScoreTable::from_csv(&csv).unwrap(), t);
    }

    #[test]
    fn json_round_trip() {
        let t = sample();
        assert_eq!(ScoreTable::from_json(&t.to_json().unwrap()).unwrap(), t);
    }

    #[test]
    fn duplicates_and_inconsistent_records_are_rejected() {
        let dup = ScoreTable::new("x".into(), vec![ScoreRecord::missing(key(0)), ScoreRecord::missing(key(0))]);
        assert!(dup.is_err());
        let mut bad = ScoreRecord::missing(key(0));
        bad.rs = Some(0.5);
        assert!(ScoreTable::new("x".into(), vec![bad]).is_err());
    }
}
