use std::str::FromStr;

use crate::embedding::{Checkpoint, Correctness, Language, Modality};
use crate::error::{Error, Result};

use super::table::{CellKey, ScoreTable, Status};

/// Marker written in place of a gain whose baseline is zero.
pub const UNDEFINED_GAIN: &str = "undefined";

/// `100·(a − b)/|b|`, or `None` when `b = 0`.
pub fn relative_gain(a: f64, b: f64) -> Option<f64> {
    if b == 0.0 {
        None
    } else {
        Some(100.0 * (a - b) / b.abs())
    }
}

/// Axis a gain compares along; the other axes are held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainAxis {
    /// bimodal-nl-pl over unimodal-pl.
    Modality,
    /// correct over incorrect.
    Correctness,
}

impl FromStr for GainAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modality" => Ok(GainAxis::Modality),
            "correctness" => Ok(GainAxis::Correctness),
            other => Err(Error::InvalidArgument(format!(
                "unknown gain axis `{other}` (expected modality or correctness)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainRecord {
    pub language: Language,
    pub layer: u32,
    pub checkpoint: Checkpoint,
    /// Value of the axis held fixed (a correctness label or a modality label).
    pub held: String,
    pub rs_a: f64,
    pub rs_b: f64,
    pub gain: Option<f64>,
}

/// Gains for every pair of `ok` cells that differ only along `axis`.
pub fn gain_table(table: &ScoreTable, axis: GainAxis) -> Vec<GainRecord> {
    let mut out = Vec::new();
    for r in table.records.iter().filter(|r| r.status == Status::Ok) {
        let (is_a, partner, held) = match axis {
            GainAxis::Modality => (
                r.modality == Modality::BimodalNlPl,
                CellKey { modality: Modality::UnimodalPl, ..r.key() },
                r.correctness.to_string(),
            ),
            GainAxis::Correctness => (
                r.correctness == Correctness::Correct,
                CellKey { correctness: Correctness::Incorrect, ..r.key() },
                r.modality.to_string(),
            ),
        };
        if !is_a {
            continue;
        }
        let Some(b) = table.get(&partner).filter(|b| b.status == Status::Ok) else {
            continue;
        };
        let (rs_a, rs_b) = (r.rs.expect("ok record has rs"), b.rs.expect("ok record has rs"));
        out.push(GainRecord {
            language: r.language,
            layer: r.layer,
            checkpoint: r.checkpoint,
            held,
            rs_a,
            rs_b,
            gain: relative_gain(rs_a, rs_b),
        });
    }
    out
}

pub const GAIN_COLUMNS: [&str; 8] = [
    "language",
    "layer",
    "checkpoint",
    "held",
    "rs_a",
    "rs_b",
    "gain_percent",
    "config_fingerprint",
];

pub fn gains_csv(gains: &[GainRecord], fingerprint: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(GAIN_COLUMNS)?;
    for g in gains {
        w.write_record([
            g.language.to_string(),
            g.layer.to_string(),
            g.checkpoint.to_string(),
            g.held.clone(),
            format!("{:?}", g.rs_a),
            format!("{:?}", g.rs_b),
            g.gain.map_or_else(|| UNDEFINED_GAIN.to_string(), |x| format!("{x:?}")),
            fingerprint.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
