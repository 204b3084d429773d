use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SweepConfig;
use super::table::{CellKey, ScoreRecord, ScoreTable, Status};
use crate::embedding::{load_set, read_ids, subsample_ids, Correctness, EmbeddingSet, Language};
use crate::error::{Error, Result};
use crate::geometry::{compute_geometry, Geometry, GeometryOptions};
use crate::parallel;
use crate::stats::{rsa_score, rsa_score_permuted, PermutationOptions, MIN_CONDITIONS};

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker count; `None` defers to `RSAPROBE_THREADS`.
    pub threads: Option<usize>,
    /// Journal of finished cells. Existing entries are reused when the fingerprint matches.
    pub resume: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct JournalHeader {
    config_fingerprint: String,
}

/// Append-only JSONL journal: a header line, then one record per finished cell.
struct Journal {
    writer: Mutex<BufWriter<File>>,
    path: PathBuf,
}

impl Journal {
    fn open(path: &Path, fingerprint: &str) -> Result<(Journal, BTreeMap<CellKey, ScoreRecord>)> {
        let mut done = BTreeMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let lines: Vec<String> = BufReader::new(file)
                .lines()
                .collect::<std::io::Result<_>>()
                .map_err(|e| Error::io(path, e))?;
            if let Some(first) = lines.first() {
                let header: JournalHeader = serde_json::from_str(first)
                    .map_err(|e| Error::Config(format!("{}: bad journal header: {e}", path.display())))?;
                if header.config_fingerprint != fingerprint {
                    return Err(Error::Config(format!(
                        "config hash mismatch on resume: journal {} has {}, config has {fingerprint}",
                        path.display(),
                        header.config_fingerprint
                    )));
                }
            }
            let body = lines.iter().skip(1).enumerate();
            let last = lines.len().saturating_sub(2);
            for (i, line) in body {
                match serde_json::from_str::<ScoreRecord>(line) {
                    Ok(r) => {
                        done.insert(r.key(), r);
                    }
                    // an interrupted write can only truncate the final line
                    Err(_) if i == last => warn!("{}: dropping truncated last line", path.display()),
                    Err(e) => {
                        return Err(Error::Config(format!(
                            "{}: bad journal line {}: {e}",
                            path.display(),
                            i + 2
                        )))
                    }
                }
            }
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let journal = Journal {
            writer: Mutex::new(BufWriter::new(file)),
            path: path.to_path_buf(),
        };
        let header = JournalHeader {
            config_fingerprint: fingerprint.to_string(),
        };
        journal.append_line(&serde_json::to_string(&header)?)?;
        for r in done.values() {
            journal.append_line(&serde_json::to_string(r)?)?;
        }
        Ok((journal, done))
    }

    fn append_line(&self, line: &str) -> Result<()> {
        let mut w = self.writer.lock().expect("journal lock poisoned");
        writeln!(w, "{line}")
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    fn append(&self, record: &ScoreRecord) -> Result<()> {
        self.append_line(&serde_json::to_string(record)?)
    }
}

fn is_degenerate(e: &Error) -> bool {
    e.exit_code() == 3
}

/// Shared condition set of one (language, correctness) group: the ids present in the
/// NL set and every existing code set of the group, optionally subsampled.
fn condition_universe(
    config: &SweepConfig,
    language: Language,
    correctness: Correctness,
    nl: &EmbeddingSet,
    code_paths: &[PathBuf],
) -> Result<Vec<String>> {
    let mut shared: BTreeSet<String> = nl.ids().iter().cloned().collect();
    for path in code_paths.iter().filter(|p| p.exists()) {
        let ids: BTreeSet<String> = read_ids(path)?.into_iter().collect();
        shared.retain(|id| ids.contains(id));
    }
    let mut universe: Vec<String> = shared.into_iter().collect();
    if let Some(k) = config.max_conditions {
        let lang = Language::ALL.iter().position(|&l| l == language).unwrap_or(0);
        let corr = Correctness::ALL.iter().position(|&c| c == correctness).unwrap_or(0);
        let stream = (lang * Correctness::ALL.len() + corr) as u64;
        universe = subsample_ids(&universe, k, config.seed, stream);
    }
    Ok(universe)
}

fn check_provenance(config: &SweepConfig, key: &CellKey, set: &EmbeddingSet, path: &Path) -> Result<()> {
    let m = set.meta();
    m.check_depth(config.model_depth)?;
    let expected = (key.language, key.layer, key.checkpoint, key.modality, key.correctness);
    let found = (m.language, m.layer, m.checkpoint, m.modality, m.correctness);
    if expected != found {
        return Err(Error::Validation(format!(
            "{}: sidecar says {}/layer{}/{}/{}/{}, grid cell is {}/layer{}/{}/{}/{}",
            path.display(),
            found.0, found.1, found.2, found.3, found.4,
            expected.0, expected.1, expected.2, expected.3, expected.4
        )));
    }
    Ok(())
}

/// Condition ids a sweep uses for every cell of one (language, correctness) group,
/// sorted ascending. Missing code sets are ignored.
pub fn group_conditions(config: &SweepConfig, language: Language, correctness: Correctness) -> Result<Vec<String>> {
    let path = config
        .semantic_path(language)
        .ok_or_else(|| Error::Config(format!("no semantic set configured for {language}")))?;
    let nl = load_set(&path)?;
    let code_paths = group_paths(config, language, correctness);
    condition_universe(config, language, correctness, &nl, &code_paths)
}

fn group_paths(config: &SweepConfig, language: Language, correctness: Correctness) -> Vec<PathBuf> {
    grid_keys(config)
        .into_iter()
        .filter(|k| k.language == language && k.correctness == correctness)
        .map(|k| config.code_path(k.language, k.layer, k.checkpoint, k.modality, k.correctness))
        .collect()
}

fn score_cell(
    config: &SweepConfig,
    key: CellKey,
    universe: &[String],
    nl: &Geometry,
    opts: &GeometryOptions,
) -> Result<ScoreRecord> {
    let path = config.code_path(key.language, key.layer, key.checkpoint, key.modality, key.correctness);
    if !path.exists() {
        warn!("missing input {}", path.display());
        return Ok(ScoreRecord::missing(key));
    }
    let set = load_set(&path)?;
    check_provenance(config, &key, &set, &path)?;
    let set = set.restrict_to(universe)?;
    let outcome = compute_geometry(&set, opts).and_then(|gc| match config.permutations {
        Some(p) => {
            let popts = PermutationOptions {
                permutations: p,
                seed: config.seed,
                threads: Some(1),
            };
            rsa_score_permuted(&gc, nl, &popts)
        }
        None => rsa_score(&gc, nl),
    });
    match outcome {
        Ok(result) => Ok(ScoreRecord::scored(key, &result)),
        Err(e) if is_degenerate(&e) => {
            warn!("degenerate cell {}: {e}", path.display());
            Ok(ScoreRecord::degenerate(key, universe.len()))
        }
        Err(e) => Err(e),
    }
}

/// Every grid cell in canonical order.
pub fn grid_keys(config: &SweepConfig) -> Vec<CellKey> {
    let mut keys = Vec::with_capacity(config.grid_size());
    for &language in &config.languages {
        for &layer in &config.layers {
            for &checkpoint in &config.checkpoints {
                for &modality in &config.modalities {
                    for &correctness in &config.correctness {
                        keys.push(CellKey {
                            language,
                            layer,
                            checkpoint,
                            modality,
                            correctness,
                        });
                    }
                }
            }
        }
    }
    keys.sort();
    keys
}

/// Scores every grid cell against the NL geometry of its language.
///
/// Cells are grouped by (language, correctness); each group shares one condition set and
/// one NL geometry. Cells without input files are recorded as `missing-input` and cells
/// whose data is degenerate as `degenerate`; any other failure aborts the sweep.
pub fn run_sweep(config: &SweepConfig, options: &SweepOptions) -> Result<ScoreTable> {
    for w in config.validate()? {
        warn!("{w}");
    }
    let fingerprint = config.fingerprint();
    let (journal, mut done) = match &options.resume {
        Some(path) => {
            let (j, d) = Journal::open(path, &fingerprint)?;
            if !d.is_empty() {
                info!("resuming with {} finished cells", d.len());
            }
            (Some(j), d)
        }
        None => (None, BTreeMap::new()),
    };

    let keys = grid_keys(config);
    let mut groups: BTreeMap<(Language, Correctness), Vec<CellKey>> = BTreeMap::new();
    for k in &keys {
        groups.entry((k.language, k.correctness)).or_default().push(*k);
    }

    let pool = parallel::pool(options.threads);
    let group_opts = config.geometry_options(options.threads);
    let cell_opts = config.geometry_options(Some(1));
    let mut records: Vec<ScoreRecord> = Vec::with_capacity(keys.len());

    for ((language, correctness), cells) in groups {
        let todo: Vec<CellKey> = cells.iter().filter(|k| !done.contains_key(k)).copied().collect();
        records.extend(cells.iter().filter_map(|k| done.remove(k)));
        if todo.is_empty() {
            continue;
        }
        let code_paths = group_paths(config, language, correctness);

        let semantic = config.semantic_path(language).filter(|p| p.exists());
        let mut fresh = Vec::with_capacity(todo.len());
        match semantic {
            None => {
                warn!("no semantic set for {language}; {} cells missing", todo.len());
                fresh.extend(todo.iter().map(|&k| ScoreRecord::missing(k)));
            }
            Some(path) => {
                let nl = load_set(&path)?;
                let universe = condition_universe(config, language, correctness, &nl, &code_paths)?;
                info!(
                    "{language}/{correctness}: {} conditions, {} cells",
                    universe.len(),
                    todo.len()
                );
                let nl_geometry = if universe.len() < MIN_CONDITIONS {
                    Err(Error::TooFewConditions {
                        found: universe.len(),
                        needed: MIN_CONDITIONS,
                    })
                } else {
                    nl.restrict_to(&universe).and_then(|s| compute_geometry(&s, &group_opts))
                };
                match nl_geometry {
                    Ok(g) => {
                        let scored: Vec<Result<ScoreRecord>> = pool.install(|| {
                            todo.par_iter()
                                .map(|&k| {
                                    let r = score_cell(config, k, &universe, &g, &cell_opts)?;
                                    if let Some(j) = &journal {
                                        j.append(&r)?;
                                    }
                                    Ok(r)
                                })
                                .collect()
                        });
                        for r in scored {
                            records.push(r?);
                        }
                        continue;
                    }
                    Err(e) if is_degenerate(&e) => {
                        warn!("{language}/{correctness}: {e}");
                        fresh.extend(todo.iter().map(|&k| {
                            let p = config.code_path(k.language, k.layer, k.checkpoint, k.modality, k.correctness);
                            if p.exists() {
                                ScoreRecord::degenerate(k, universe.len())
                            } else {
                                ScoreRecord::missing(k)
                            }
                        }));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        if let Some(j) = &journal {
            for r in &fresh {
                j.append(r)?;
            }
        }
        records.extend(fresh);
    }

    if records.iter().all(|r| r.status == Status::MissingInput) {
        return Err(Error::Config(format!(
            "none of the {} grid cells has resolvable inputs under {}",
            keys.len(),
            config.root().display()
        )));
    }
    ScoreTable::new(fingerprint, records)
}
