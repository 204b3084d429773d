use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rsa_probe::geometry::ConstantPolicy;
use rsa_probe::pipeline::{GainAxis, ReportFormat};
use rsa_probe::Metric;

mod commands;

/// Representational similarity analysis for code-model embeddings.
#[derive(Debug, Parser)]
#[command(name = "rsa-probe", version, about)]
struct Cli {
    /// Worker threads; overrides RSAPROBE_THREADS (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log more (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corpus preparation: problem selection, pair manifests and fine-tuning splits.
    #[command(subcommand)]
    Prep(Prep),
    /// Computes the dissimilarity matrix of one embedding set.
    Geometry(GeometryArgs),
    /// Scores a code set against a semantic set and prints the result as JSON.
    Score(ScoreArgs),
    /// Runs a grid sweep described by a TOML or JSON config.
    Sweep(SweepArgs),
    /// Renders a score table as CSV, JSON or SVG.
    Report(ReportArgs),
    /// Relative gains of bimodal over unimodal or correct over incorrect cells.
    Gains(GainsArgs),
    /// Writes a synthetic embedding tree and a matching sweep config.
    Demo(DemoArgs),
}

#[derive(Debug, Subcommand)]
enum Prep {
    /// Lists problems that satisfy a selection policy.
    Select {
        #[command(flatten)]
        metadata: MetadataArgs,
        #[arg(long, value_enum)]
        policy: Policy,
        /// Output file (one id per line); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Splits a problem list into training and validation problems.
    Partition {
        #[arg(long)]
        problems: PathBuf,
        /// Number of validation problems.
        #[arg(long)]
        validation: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        validation_out: PathBuf,
    },
    /// Builds an NL-PL pair manifest for one split.
    Manifest {
        #[command(flatten)]
        metadata: MetadataArgs,
        /// Directory of `<problem_id>.txt` descriptions.
        #[arg(long)]
        descriptions: PathBuf,
        /// Problem list, one id per line.
        #[arg(long)]
        problems: PathBuf,
        #[arg(long, value_enum)]
        split: SplitArg,
        /// Submissions kept per (problem, language, verdict).
        #[arg(long)]
        per_cell_limit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes nested fine-tuning splits, one `<language>.json` per language.
    Splits {
        /// Training manifest.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Policy {
    Test,
    Train,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Test,
    Train,
    Validation,
}

#[derive(Debug, Args)]
struct MetadataArgs {
    /// Submission metadata table.
    #[arg(long)]
    metadata: PathBuf,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    #[arg(long, default_value = "problem_id")]
    problem_column: String,
    #[arg(long, default_value = "submission_id")]
    submission_column: String,
    #[arg(long, default_value = "language")]
    language_column: String,
    #[arg(long, default_value = "status")]
    status_column: String,
    #[arg(long, default_value = "path")]
    path_column: String,
}

#[derive(Debug, Args)]
struct GeometryFlags {
    #[arg(long)]
    metric: Option<Metric>,
    /// zero, allow or error.
    #[arg(long)]
    constant_policy: Option<ConstantPolicy>,
    /// Largest tolerated fraction of pairs touching a constant vector.
    #[arg(long)]
    max_degenerate_fraction: Option<f64>,
}

#[derive(Debug, Args)]
struct GeometryArgs {
    /// Embedding set (RSAE1 or TSV, with its meta sidecar).
    #[arg(long)]
    input: PathBuf,
    /// Output geometry file (RSAG1).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: GeometryFlags,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Code embedding set, or a geometry file.
    #[arg(long)]
    code: PathBuf,
    /// Semantic embedding set, or a geometry file.
    #[arg(long)]
    semantic: PathBuf,
    #[command(flatten)]
    flags: GeometryFlags,
    /// Seeded subsample of the aligned conditions.
    #[arg(long)]
    max_conditions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Adds a permutation p-value with this many permutations.
    #[arg(long)]
    permutations: Option<u32>,
    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    flags: GeometryFlags,
    #[arg(long)]
    max_conditions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    permutations: Option<u32>,
    /// Journal of finished cells; an existing journal is resumed.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Score table as CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Score table as JSON as well.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Score table (.csv or .json).
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    format: ReportFormat,
    /// Layers drawn in line charts.
    #[arg(long, value_delimiter = ',', default_value = "1,4,8,12")]
    layers: Vec<u32>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GainsArgs {
    #[arg(long)]
    table: PathBuf,
    /// modality (bimodal over unimodal) or correctness (correct over incorrect).
    #[arg(long)]
    axis: GainAxis,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long)]
    out: PathBuf,
    /// Samples per embedding set.
    #[arg(long, default_value_t = 40)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
