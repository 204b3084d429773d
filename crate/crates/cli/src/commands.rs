use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use log::{info, warn};

use rsa_probe::corpus::{
    build_pair_manifest, make_ft_splits, partition_train_validation, read_metadata, select_problems,
    ColumnMapping, MetadataFormat, PairManifest, ProblemPolicy, Split,
};
use rsa_probe::embedding::{align_sets, load_set, subsample_ids};
use rsa_probe::geometry::{read_geometry, write_geometry, GEOMETRY_MAGIC};
use rsa_probe::pipeline::{
    emit_report, gain_table, gains_csv, run_sweep, ReportOptions, ScoreTable, SweepConfig, SweepOptions,
    DEFAULT_PATH_TEMPLATE,
};
use rsa_probe::stats::{rsa_score, rsa_score_permuted, PermutationOptions};
use rsa_probe::synthetic::SyntheticGrid;
use rsa_probe::{compute_geometry, Error, Geometry, GeometryOptions, Result};

use crate::{Cli, Command, DemoArgs, GeometryFlags, MetadataArgs, Policy, Prep, ScoreArgs, SplitArg, SweepArgs};

pub(crate) fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    match cli.command {
        Command::Prep(prep) => run_prep(prep),
        Command::Geometry(args) => {
            let set = load_set(&args.input)?;
            let g = compute_geometry(&set, &geometry_options(&args.flags, threads))?;
            write_geometry(&args.out, &g)?;
            let summary = serde_json::json!({
                "n_conditions": g.len(),
                "n_cells": g.cells().len(),
                "metric": g.metric(),
                "degenerate_pairs": g.degenerate_pairs(),
            });
            println!("{summary}");
            Ok(())
        }
        Command::Score(args) => run_score(args, threads),
        Command::Sweep(args) => run_sweep_command(args, threads),
        Command::Report(args) => {
            let table = ScoreTable::load(&args.table)?;
            let options = ReportOptions { line_layers: args.layers };
            emit(args.out.as_deref(), &emit_report(&table, args.format, &options)?)
        }
        Command::Gains(args) => {
            let table = ScoreTable::load(&args.table)?;
            let gains = gain_table(&table, args.axis);
            emit(args.out.as_deref(), &gains_csv(&gains, &table.config_fingerprint)?)
        }
        Command::Demo(args) => run_demo(args),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_error(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn geometry_options(flags: &GeometryFlags, threads: Option<usize>) -> GeometryOptions {
    let mut opts = GeometryOptions::default();
    if let Some(m) = flags.metric {
        opts.metric = m;
    }
    if let Some(p) = flags.constant_policy {
        opts.constant_policy = p;
    }
    if let Some(f) = flags.max_degenerate_fraction {
        opts.max_degenerate_fraction = f;
    }
    opts.threads = threads;
    opts
}

fn metadata_format(args: &MetadataArgs) -> Result<MetadataFormat> {
    if !args.delimiter.is_ascii() {
        return Err(Error::InvalidArgument("delimiter must be a single ASCII character".into()));
    }
    Ok(MetadataFormat {
        delimiter: args.delimiter as u8,
        columns: ColumnMapping {
            problem_id: args.problem_column.clone(),
            submission_id: args.submission_column.clone(),
            language: args.language_column.clone(),
            status: args.status_column.clone(),
            path: args.path_column.clone(),
        },
    })
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn write_lines(path: Option<&Path>, lines: &[String]) -> Result<()> {
    let mut text = lines.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    emit(path, &text)
}

fn run_prep(prep: Prep) -> Result<()> {
    match prep {
        Prep::Select { metadata, policy, out } => {
            let load = read_metadata(&metadata.metadata, &metadata_format(&metadata)?)?;
            if load.skipped_rows > 0 {
                info!("skipped {} rows in unsupported languages", load.skipped_rows);
            }
            let policy = match policy {
                Policy::Test => ProblemPolicy::Test,
                Policy::Train => ProblemPolicy::Train,
            };
            let problems = select_problems(&load.records, policy);
            info!("{} problems selected", problems.len());
            write_lines(out.as_deref(), &problems)
        }
        Prep::Partition { problems, validation, seed, train_out, validation_out } => {
            let (train, held_out) = partition_train_validation(&read_lines(&problems)?, validation, seed);
            write_lines(Some(&train_out), &train)?;
            write_lines(Some(&validation_out), &held_out)
        }
        Prep::Manifest { metadata, descriptions, problems, split, per_cell_limit, out } => {
            let load = read_metadata(&metadata.metadata, &metadata_format(&metadata)?)?;
            let split = match split {
                SplitArg::Test => Split::Test,
                SplitArg::Train => Split::Train,
                SplitArg::Validation => Split::Validation,
            };
            let build =
                build_pair_manifest(&read_lines(&problems)?, split, &descriptions, &load.records, per_cell_limit)?;
            for p in &build.skipped_problems {
                warn!("problem {p} skipped: missing or empty description");
            }
            info!("{} manifest rows", build.manifest.rows.len());
            build.manifest.write_csv(&out)
        }
        Prep::Splits { manifest, seed, out_dir } => {
            let manifest = PairManifest::read_csv(&manifest)?;
            let plans = make_ft_splits(&manifest.rows, seed)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| io_error(&out_dir, e))?;
            for plan in &plans {
                plan.write_json(out_dir.join(format!("{}.json", plan.language)))?;
            }
            info!("{} split plans written", plans.len());
            Ok(())
        }
    }
}

fn is_geometry_file(path: &Path) -> Result<bool> {
    let mut head = [0u8; 5];
    let mut file = File::open(path).map_err(|e| io_error(path, e))?;
    let n = file.read(&mut head).map_err(|e| io_error(path, e))?;
    Ok(n == head.len() && &head == GEOMETRY_MAGIC)
}

fn run_score(args: ScoreArgs, threads: Option<usize>) -> Result<()> {
    let seed = args.seed.unwrap_or(0);
    let (gc, gs): (Geometry, Geometry) = match (is_geometry_file(&args.code)?, is_geometry_file(&args.semantic)?) {
        (true, true) => {
            if args.max_conditions.is_some() {
                return Err(Error::InvalidArgument("--max-conditions needs embedding sets, not geometries".into()));
            }
            (read_geometry(&args.code)?, read_geometry(&args.semantic)?)
        }
        (false, false) => {
            let (code, semantic) = align_sets(&load_set(&args.code)?, &load_set(&args.semantic)?)?;
            let (code, semantic) = match args.max_conditions {
                Some(k) => {
                    let ids = subsample_ids(code.ids(), k, seed, 0);
                    (code.restrict_to(&ids)?, semantic.restrict_to(&ids)?)
                }
                None => (code, semantic),
            };
            let opts = geometry_options(&args.flags, threads);
            (compute_geometry(&code, &opts)?, compute_geometry(&semantic, &opts)?)
        }
        _ => {
            return Err(Error::InvalidArgument(
                "--code and --semantic must both be embedding sets or both be geometries".into(),
            ))
        }
    };
    let result = match args.permutations {
        Some(p) => rsa_score_permuted(&gc, &gs, &PermutationOptions { permutations: p, seed, threads })?,
        None => rsa_score(&gc, &gs)?,
    };
    let text = serde_json::to_string_pretty(&result)? + "\n";
    emit(args.out.as_deref(), &text)
}

fn run_sweep_command(args: SweepArgs, threads: Option<usize>) -> Result<()> {
    let mut config = SweepConfig::load(&args.config)?;
    if let Some(m) = args.flags.metric {
        config.metric = m;
    }
    if let Some(p) = args.flags.constant_policy {
        config.constant_policy = p;
    }
    if let Some(f) = args.flags.max_degenerate_fraction {
        config.max_degenerate_fraction = f;
    }
    if args.max_conditions.is_some() {
        config.max_conditions = args.max_conditions;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.permutations.is_some() {
        config.permutations = args.permutations;
    }
    let table = run_sweep(&config, &SweepOptions { threads, resume: args.resume })?;
    if let Some(path) = &args.json {
        std::fs::write(path, table.to_json()?).map_err(|e| io_error(path, e))?;
    }
    emit(args.out.as_deref(), &table.to_csv()?)
}

fn run_demo(args: DemoArgs) -> Result<()> {
    let grid = SyntheticGrid { samples: args.samples, seed: args.seed, ..Default::default() };
    let root = args.out.join("embeddings");
    let semantic = grid.write(&root)?;
    let config = SweepConfig {
        embedding_root: PathBuf::from("embeddings"),
        semantic_sets: semantic
            .into_iter()
            .map(|(lang, p)| (lang, p.strip_prefix(&root).map(Path::to_path_buf).unwrap_or(p)))
            .collect(),
        path_template: DEFAULT_PATH_TEMPLATE.to_string(),
        layers: grid.layers.clone(),
        languages: grid.languages.clone(),
        checkpoints: grid.checkpoints.clone(),
        modalities: grid.modalities.clone(),
        correctness: grid.correctness.clone(),
        metric: Default::default(),
        max_conditions: None,
        seed: args.seed,
        permutations: None,
        constant_policy: Default::default(),
        max_degenerate_fraction: 0.01,
        model_depth: 12,
        base_dir: PathBuf::new(),
    };
    let path = args.out.join("sweep.toml");
    std::fs::write(&path, config.to_toml()?).map_err(|e| io_error(&path, e))?;
    println!("{}", path.display());
    Ok(())
}
