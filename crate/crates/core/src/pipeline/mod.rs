//! Grid sweeps over layers, languages, checkpoints, modality and correctness, with
//! tabular and SVG reports.

mod config;
mod gain;
mod report;
mod svg;
mod sweep;
mod table;

pub use config::{SweepConfig, DEFAULT_PATH_TEMPLATE};
pub use gain::{gain_table, gains_csv, relative_gain, GainAxis, GainRecord, GAIN_COLUMNS, UNDEFINED_GAIN};
pub use report::{emit_report, write_report, ReportFormat, ReportOptions, DEFAULT_LINE_LAYERS};
pub use sweep::{grid_keys, group_conditions, run_sweep, SweepOptions};
pub use table::{CellKey, ScoreRecord, ScoreTable, Status, CSV_COLUMNS};
