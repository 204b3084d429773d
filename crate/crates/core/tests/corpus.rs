use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rsa_probe::corpus::{
    build_pair_manifest, make_ft_splits, partition_train_validation, read_metadata, select_problems, ColumnMapping,
    MetadataFormat, PairManifest, ProblemPolicy, Split, SubmissionRecord, Verdict,
};
use rsa_probe::embedding::{Checkpoint, Language};
use rsa_probe::Error;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

fn records() -> Vec<SubmissionRecord> {
    let load = read_metadata(fixture().join("metadata.csv"), &MetadataFormat::default()).unwrap();
    // p00009 carries two C++ submissions
    assert_eq!(load.skipped_rows, 2);
    load.records
}

fn ids(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

#[test]
fn policies_reproduce_the_hand_enumerated_sets() {
    let records = records();
    assert_eq!(
        select_problems(&records, ProblemPolicy::Test),
        ids(&["p00001", "p00002", "p00003", "p00004"])
    );
    assert_eq!(
        select_problems(&records, ProblemPolicy::Train),
        ids(&["p00001", "p00002", "p00003", "p00004", "p00005", "p00006", "p00009"])
    );
}

#[test]
fn test_manifest_with_one_submission_per_cell() {
    let records = records();
    let problems = ids(&["p00001", "p00002", "p00003"]);
    let build = build_pair_manifest(&problems, Split::Test, fixture().join("descriptions"), &records, Some(1)).unwrap();
    let m = &build.manifest;
    assert_eq!(m.rows.len(), 3 * 6 * 2);
    assert!(build.skipped_problems.is_empty());
    m.validate().unwrap();
    let cells: BTreeSet<(String, Language, Verdict)> =
        m.rows.iter().map(|r| (r.problem_id.clone(), r.language, r.verdict)).collect();
    assert_eq!(cells.len(), 36);
    for r in &m.rows {
        assert!(r.description_path.ends_with(format!("{}.txt", r.problem_id)));
        let smallest = records
            .iter()
            .filter(|s| s.problem_id == r.problem_id && s.language == r.language && s.verdict == r.verdict)
            .map(|s| s.submission_id.as_str())
            .min()
            .unwrap();
        assert_eq!(r.submission_id, smallest);
    }
}

#[test]
fn unlimited_manifest_keeps_every_matching_submission() {
    let records = records();
    let problems = select_problems(&records, ProblemPolicy::Test);
    let build = build_pair_manifest(&problems, Split::Test, fixture().join("descriptions"), &records, None).unwrap();
    let expected = records.iter().filter(|r| problems.contains(&r.problem_id)).count();
    assert_eq!(build.manifest.rows.len(), expected);
    let keys: Vec<_> = build
        .manifest
        .rows
        .iter()
        .map(|r| (r.problem_id.clone(), r.language, r.verdict, r.submission_id.clone()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn train_manifest_is_accepted_only_and_skips_undescribed_problems() {
    let records = records();
    let problems = ids(&["p00005", "p00006", "p00009", "p00010"]);
    let build = build_pair_manifest(&problems, Split::Train, fixture().join("descriptions"), &records, None).unwrap();
    assert_eq!(build.skipped_problems, ids(&["p00010"]));
    assert!(build.manifest.rows.iter().all(|r| r.verdict == Verdict::Accepted && r.split == Split::Train));
    assert!(build.manifest.rows.iter().all(|r| r.problem_id != "p00010"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.csv");
    build.manifest.write_csv(&path).unwrap();
    assert_eq!(PairManifest::read_csv(&path).unwrap(), build.manifest);

    // fewer than 32 rows per language cannot be split
    match make_ft_splits(&build.manifest.rows, 0) {
        Err(Error::Corpus(msg)) => assert!(msg.contains("go"), "{msg}"),
        other => panic!("expected a corpus error, got {other:?}"),
    }
}

#[test]
fn splits_from_replicated_fixture_rows_nest() {
    let records = records();
    let problems = select_problems(&records, ProblemPolicy::Train);
    let base = build_pair_manifest(&problems, Split::Train, fixture().join("descriptions"), &records, None)
        .unwrap()
        .manifest
        .rows;
    // replicate rows under fresh submission ids to reach a splittable size
    let rows: Vec<_> = (0..12)
        .flat_map(|k| {
            base.iter().map(move |r| {
                let mut r = r.clone();
                r.submission_id = format!("{}-{k}", r.submission_id);
                r
            })
        })
        .collect();
    let plans = make_ft_splits(&rows, 4).unwrap();
    assert_eq!(plans.iter().map(|p| p.language).collect::<Vec<_>>(), Language::CODE.to_vec());
    for plan in &plans {
        let count = rows.iter().filter(|r| r.language == plan.language).count();
        let x1 = plan.ids(Checkpoint::X1).len();
        assert_eq!(x1, count / 32);
        for pair in Checkpoint::TUNED.windows(2) {
            assert!(plan.ids(pair[1]).starts_with(plan.ids(pair[0])));
        }
        for ck in Checkpoint::TUNED {
            assert_eq!(plan.ids(ck).len(), ck.multiple() * x1);
        }
        assert!(plan.ids(Checkpoint::X0).is_empty());
    }
    assert_eq!(make_ft_splits(&rows, 4).unwrap(), plans);
}

#[test]
fn validation_partition_is_disjoint() {
    let problems = select_problems(&records(), ProblemPolicy::Train);
    let (train, validation) = partition_train_validation(&problems, 2, 7);
    assert_eq!(validation.len(), 2);
    let all: BTreeSet<&String> = train.iter().chain(&validation).collect();
    assert_eq!(all.len(), problems.len());
}

fn read_codenet(path: &Path) -> Vec<SubmissionRecord> {
    // CodeNet's per-problem tables have no path column; the file extension stands in
    let format = MetadataFormat {
        delimiter: b',',
        columns: ColumnMapping { path: "filename_ext".into(), ..ColumnMapping::default() },
    };
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(path)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    files.iter().flat_map(|f| read_metadata(f, &format).unwrap().records).collect()
}

/// Needs the CodeNet metadata: `RSAPROBE_CODENET_METADATA` names either the
/// `metadata/` directory of per-problem CSVs or one concatenated CSV.
#[test]
#[ignore = "requires CodeNet metadata via RSAPROBE_CODENET_METADATA"]
fn codenet_problem_counts() {
    let path = std::env::var("RSAPROBE_CODENET_METADATA").expect("RSAPROBE_CODENET_METADATA is set");
    let records = read_codenet(Path::new(&path));
    let test = select_problems(&records, ProblemPolicy::Test);
    assert_eq!(test.len(), 255);
    let test: BTreeSet<&String> = test.iter().collect();
    let train: Vec<String> = select_problems(&records, ProblemPolicy::Train)
        .into_iter()
        .filter(|p| !test.contains(p))
        .collect();
    assert_eq!(train.len(), 808);
    let (fit, validation) = partition_train_validation(&train, 100, 0);
    assert_eq!((fit.len(), validation.len()), (708, 100));
}
