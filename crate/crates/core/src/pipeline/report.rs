use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::svg;
use super::table::ScoreTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    HeatmapSvg,
    LinechartSvg,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 4] = [
        ReportFormat::Csv,
        ReportFormat::Json,
        ReportFormat::HeatmapSvg,
        ReportFormat::LinechartSvg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::HeatmapSvg => "heatmap-svg",
            ReportFormat::LinechartSvg => "linechart-svg",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown report format `{s}` (expected csv, json, heatmap-svg or linechart-svg)"
                ))
            })
    }
}

pub const DEFAULT_LINE_LAYERS: [u32; 4] = [1, 4, 8, 12];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    /// Layers drawn as lines in `linechart-svg`.
    pub line_layers: Vec<u32>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            line_layers: DEFAULT_LINE_LAYERS.to_vec(),
        }
    }
}

/// Renders `table`; the output depends on nothing else.
pub fn emit_report(table: &ScoreTable, format: ReportFormat, options: &ReportOptions) -> Result<String> {
    if table.is_empty() {
        return Err(Error::Config("cannot report an empty score table".into()));
    }
    match format {
        ReportFormat::Csv => table.to_csv(),
        ReportFormat::Json => table.to_json(),
        ReportFormat::HeatmapSvg => Ok(svg::heatmap(table)),
        ReportFormat::LinechartSvg => svg::linechart(table, &options.line_layers),
    }
}

pub fn write_report(table: &ScoreTable, format: ReportFormat, options: &ReportOptions, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = emit_report(table, format, options)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
