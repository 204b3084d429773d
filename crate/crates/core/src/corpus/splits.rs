use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ManifestRow;
use crate::embedding::{Checkpoint, Language};
use crate::error::{Error, Result};

/// Fewest training rows a language needs so that `|x1| ≥ 1`.
pub const MIN_SPLIT_ROWS: usize = 32;

/// Nested fine-tuning splits of one language: `x_k` is the first `k·|x1|` ids of a
/// single seeded shuffle, so every split is a prefix of the next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub language: Language,
    pub seed: u64,
    pub splits: BTreeMap<Checkpoint, Vec<String>>,
}

impl SplitPlan {
    pub fn ids(&self, checkpoint: Checkpoint) -> &[String] {
        self.splits.get(&checkpoint).map_or(&[], Vec::as_slice)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<SplitPlan> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Builds one [`SplitPlan`] per language present in `train_rows`, in language order.
///
/// Per language the sample ids are sorted, shuffled with ChaCha8 (seed `seed`, stream =
/// language ordinal), and `|x1| = floor(count / 32)`; ids past `32·|x1|` stay unused.
pub fn make_ft_splits(train_rows: &[ManifestRow], seed: u64) -> Result<Vec<SplitPlan>> {
    let mut by_language: BTreeMap<Language, Vec<String>> = BTreeMap::new();
    for r in train_rows {
        by_language
            .entry(r.language)
            .or_default()
            .push(r.sample_id().to_owned());
    }
    let mut plans = Vec::with_capacity(by_language.len());
    for (language, mut ids) in by_language {
        ids.sort();
        ids.dedup();
        if ids.len() < MIN_SPLIT_ROWS {
            return Err(Error::Corpus(format!(
                "{language} has {} training rows; fine-tuning splits need at least {MIN_SPLIT_ROWS}",
                ids.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ordinal = Language::ALL.iter().position(|&l| l == language).unwrap_or(0);
        rng.set_stream(ordinal as u64);
        ids.shuffle(&mut rng);
        let unit = ids.len() / MIN_SPLIT_ROWS;
        let splits = Checkpoint::TUNED
            .iter()
            .map(|&c| (c, ids[..c.multiple() * unit].to_vec()))
            .collect();
        plans.push(SplitPlan {
            language,
            seed,
            splits,
        });
    }
    Ok(plans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Split, Verdict};
    use std::collections::HashSet;
    use std::path::PathBuf;

    fn rows(language: Language, count: usize) -> Vec<ManifestRow> {
        (0..count)
            .map(|i| ManifestRow {
                problem_id: format!("p{}", i % 7),
                submission_id: format!("{language}-s{i:04}"),
                language,
                verdict: Verdict::Accepted,
                description_path: PathBuf::new(),
                code_path: PathBuf::new(),
                split: Split::Train,
            })
            .collect()
    }

    #[test]
    fn sizes_and_nesting() {
        let plans = make_ft_splits(&rows(Language::Go, 320), 7).unwrap();
        assert_eq!(plans.len(), 1);
        let plan = &plans[0];
        assert_eq!(plan.ids(Checkpoint::X1).len(), 10);
        assert_eq!(plan.ids(Checkpoint::X32).len(), 320);
        assert!(plan.ids(Checkpoint::X8).starts_with(plan.ids(Checkpoint::X4)));
        for w in Checkpoint::TUNED.windows(2) {
            let (small, large) = (plan.ids(w[0]), plan.ids(w[1]));
            assert_eq!(large.len(), 2 * small.len());
            assert!(large.starts_with(small));
        }
        assert!(plan.ids(Checkpoint::X0).is_empty());
    }

    #[test]
    fn remainder_is_unused() {
        let plan = &make_ft_splits(&rows(Language::Php, 100), 1).unwrap()[0];
        assert_eq!(plan.ids(Checkpoint::X1).len(), 3);
        assert_eq!(plan.ids(Checkpoint::X32).len(), 96);
        let unique: HashSet<_> = plan.ids(Checkpoint::X32).iter().collect();
        assert_eq!(unique.len(), 96);
    }

    #[test]
    fn deterministic_bytes() {
        let input = [rows(Language::Go, 64), rows(Language::Ruby, 40)].concat();
        let a = serde_json::to_vec(&make_ft_splits(&input, 9).unwrap()).unwrap();
        let b = serde_json::to_vec(&make_ft_splits(&input, 9).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_vec(&make_ft_splits(&input, 10).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_few_rows_names_language() {
        let err = make_ft_splits(&rows(Language::Java, 20), 1).unwrap_err();
        assert!(err.to_string().contains("java"), "{err}");
    }

    #[test]
    fn json_layout() {
        let plan = &make_ft_splits(&rows(Language::Go, 32), 3).unwrap()[0];
        let v = serde_json::to_value(plan).unwrap();
        assert_eq!(v["seed"], 3);
        let keys: Vec<_> = v["splits"].as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 6);
        assert!(keys.contains(&"x16".to_string()));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("go.json");
        plan.write_json(&path).unwrap();
        assert_eq!(&SplitPlan::read_json(&path).unwrap(), plan);
    }
}
