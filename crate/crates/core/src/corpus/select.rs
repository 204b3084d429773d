use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{SubmissionRecord, Verdict};
use crate::embedding::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemPolicy {
    /// At least one accepted and one rejected submission in every language.
    Test,
    /// At least one accepted submission in every language.
    Train,
}

/// Problem ids satisfying `policy`, sorted ascending.
pub fn select_problems(records: &[SubmissionRecord], policy: ProblemPolicy) -> Vec<String> {
    let mut coverage: BTreeMap<&str, HashSet<(Language, Verdict)>> = BTreeMap::new();
    for r in records {
        coverage
            .entry(r.problem_id.as_str())
            .or_default()
            .insert((r.language, r.verdict));
    }
    let needed: &[Verdict] = match policy {
        ProblemPolicy::Test => &[Verdict::Accepted, Verdict::Rejected],
        ProblemPolicy::Train => &[Verdict::Accepted],
    };
    coverage
        .into_iter()
        .filter(|(_, seen)| {
            Language::CODE
                .iter()
                .all(|&l| needed.iter().all(|&v| seen.contains(&(l, v))))
        })
        .map(|(p, _)| p.to_owned())
        .collect()
}

/// Seeded split of training problems into `(train, validation)`, both sorted.
pub fn partition_train_validation(
    problems: &[String],
    validation: usize,
    seed: u64,
) -> (Vec<String>, Vec<String>) {
    let mut shuffled = problems.to_vec();
    shuffled.sort();
    shuffled.dedup();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = validation.min(shuffled.len());
    let mut held_out = shuffled[..cut].to_vec();
    let mut train = shuffled[cut..].to_vec();
    held_out.sort();
    train.sort();
    (train, held_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn rec(p: &str, s: &str, l: Language, v: Verdict) -> SubmissionRecord {
        SubmissionRecord {
            problem_id: p.into(),
            submission_id: s.into(),
            language: l,
            verdict: v,
            code_path: PathBuf::new(),
        }
    }

    #[test]
    fn empty_input() {
        assert!(select_problems(&[], ProblemPolicy::Test).is_empty());
    }

    #[test]
    fn test_policy_needs_both_verdicts_everywhere() {
        let mut records = Vec::new();
        for (k, l) in Language::CODE.iter().enumerate() {
            records.push(rec("p2", &format!("a{k}"), *l, Verdict::Accepted));
            records.push(rec("p2", &format!("r{k}"), *l, Verdict::Rejected));
            records.push(rec("p1", &format!("b{k}"), *l, Verdict::Accepted));
        }
        records.push(rec("p1", "x", Language::Go, Verdict::Rejected));
        assert_eq!(select_problems(&records, ProblemPolicy::Test), vec!["p2"]);
        assert_eq!(select_problems(&records, ProblemPolicy::Train), vec!["p1", "p2"]);
    }

    #[test]
    fn partition_is_seeded_and_complete() {
        let problems: Vec<String> = (0..20).map(|i| format!("p{i:02}")).collect();
        let (train, val) = partition_train_validation(&problems, 5, 3);
        assert_eq!((train.len(), val.len()), (15, 5));
        assert_eq!(partition_train_validation(&problems, 5, 3), (train.clone(), val.clone()));
        let mut all = [train, val].concat();
        all.sort();
        assert_eq!(all, problems);
    }
}
