use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rsa_probe::corpus::{ManifestRow, PairManifest, Split, SplitPlan, Verdict};
use rsa_probe::embedding::{read_set, write_set, Checkpoint, Language};
use rsa_probe::EmbeddingSet;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rsa-probe"));
    c.env_remove("RUST_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/corpus")
}

fn demo(dir: &Path, samples: &str) -> PathBuf {
    let out = run(&["demo", "--out", s(dir), "--samples", samples]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("sweep.toml")
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["sweep"])), 1);
    assert_eq!(code(&run(&["score", "--code", "a", "--semantic", "b", "--metric", "euclid"])), 1);
    assert_eq!(code(&run(&["report", "--table", "t.csv", "--format", "png"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn sweep_csv_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo(dir.path(), "16");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = ["sweep", "--config", s(&config), "--max-conditions", "12", "--permutations", "19"];
    let first = bin().args(base).args(["--threads", "1", "--out", s(&a)]).output().unwrap();
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let second = bin().args(base).args(["--out", s(&b)]).env("RSAPROBE_THREADS", "3").output().unwrap();
    assert_eq!(code(&second), 0);
    let a = std::fs::read(&a).unwrap();
    assert_eq!(a, std::fs::read(&b).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 13 * 7 * 2 * 2);
    assert!(text.lines().skip(1).all(|l| l.contains(",12,ok,")));
}

#[test]
fn reports_and_gains_from_a_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo(dir.path(), "12");
    std::fs::remove_file(dir.path().join("embeddings/go/x4/unimodal-pl/correct/layer3.rsae")).unwrap();
    let table = dir.path().join("table.json");
    let out = run(&["sweep", "--config", s(&config), "--json", s(&table), "--out", s(&dir.path().join("t.csv"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let csv = run(&["report", "--table", s(&table), "--format", "csv"]);
    assert_eq!(stdout(&csv), std::fs::read_to_string(dir.path().join("t.csv")).unwrap());
    assert!(stdout(&csv).contains(",missing-input,"));

    let heat = dir.path().join("heat.svg");
    assert_eq!(code(&run(&["report", "--table", s(&table), "--format", "heatmap-svg", "--out", s(&heat)])), 0);
    let svg = std::fs::read_to_string(heat).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches(r#"class="cell "#).count(), 13 * 7 * 4);
    assert!(svg.contains("legend-missing-input"));

    let lines = run(&["report", "--table", s(&table), "--format", "linechart-svg", "--layers", "0,12"]);
    assert_eq!(code(&lines), 0);
    assert!(stdout(&lines).contains(r#"class="series" data-layer="0""#));
    let none = run(&["report", "--table", s(&table), "--format", "linechart-svg", "--layers", "99"]);
    assert_eq!(code(&none), 1);

    let gains = run(&["gains", "--table", s(&table), "--axis", "modality"]);
    assert_eq!(code(&gains), 0);
    // the unimodal partner of one bimodal cell is missing
    assert_eq!(stdout(&gains).lines().count(), 1 + 13 * 7 * 2 - 1);
    let gains = run(&["gains", "--table", s(&table), "--axis", "correctness"]);
    assert_eq!(stdout(&gains).lines().count(), 1 + 13 * 7 * 2 - 1);
}

#[test]
fn resume_with_a_changed_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo(dir.path(), "8");
    let journal = dir.path().join("j.jsonl");
    let ok = run(&["sweep", "--config", s(&config), "--resume", s(&journal), "--out", s(&dir.path().join("a.csv"))]);
    assert_eq!(code(&ok), 0);
    let bad = run(&["sweep", "--config", s(&config), "--resume", s(&journal), "--seed", "5"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("mismatch"));
}

#[test]
fn score_geometry_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    demo(dir.path(), "10");
    let emb = dir.path().join("embeddings/go");
    let code_set = emb.join("x8/bimodal-nl-pl/correct/layer12.rsae");
    let semantic = emb.join("semantic.rsae");

    let direct = run(&["score", "--code", s(&code_set), "--semantic", s(&semantic)]);
    assert_eq!(code(&direct), 0);
    let direct: serde_json::Value = serde_json::from_str(&stdout(&direct)).unwrap();
    assert_eq!(direct["n_conditions"], 10);
    assert!(direct["p_permutation"].is_null());

    let gc = dir.path().join("c.rsag");
    let gs = dir.path().join("s.rsag");
    for (input, out) in [(&code_set, &gc), (&semantic, &gs)] {
        let o = run(&["geometry", "--input", s(input), "--out", s(out), "--threads", "2"]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).contains(r#""n_cells":45"#));
    }
    let via_files = run(&["score", "--code", s(&gc), "--semantic", s(&gs)]);
    let via_files: serde_json::Value = serde_json::from_str(&stdout(&via_files)).unwrap();
    assert_eq!(via_files["score"], direct["score"]);

    let mixed = run(&["score", "--code", s(&gc), "--semantic", s(&semantic)]);
    assert_eq!(code(&mixed), 1);

    let permuted = run(&["score", "--code", s(&code_set), "--semantic", s(&semantic), "--permutations", "49", "--seed", "3", "--max-conditions", "8"]);
    let permuted: serde_json::Value = serde_json::from_str(&stdout(&permuted)).unwrap();
    assert_eq!(permuted["n_permutations"], 49);
    assert_eq!(permuted["n_conditions"], 8);

    let set = read_set(&code_set).unwrap();
    let flat = EmbeddingSet::new(set.ids().to_vec(), vec![0.5; set.values().len()], set.dim(), set.meta().clone()).unwrap();
    let flat_path = dir.path().join("flat.rsae");
    write_set(&flat_path, &flat).unwrap();
    let degenerate = run(&["score", "--code", s(&flat_path), "--semantic", s(&semantic)]);
    assert_eq!(code(&degenerate), 3);
    let allowed = run(&["score", "--code", s(&flat_path), "--semantic", s(&semantic), "--constant-policy", "allow"]);
    assert_eq!(code(&allowed), 3, "an all-zero-similarity geometry has constant cells");

    let corrupt = dir.path().join("corrupt.rsae");
    std::fs::copy(&code_set, &corrupt).unwrap();
    std::fs::copy(emb.join("x8/bimodal-nl-pl/correct/layer12.meta.json"), dir.path().join("corrupt.meta.json")).unwrap();
    let bytes = std::fs::read(&corrupt).unwrap();
    std::fs::write(&corrupt, &bytes[..bytes.len() / 2]).unwrap();
    let broken = run(&["score", "--code", s(&corrupt), "--semantic", s(&semantic)]);
    assert_eq!(code(&broken), 2);
    assert!(String::from_utf8_lossy(&broken.stderr).contains("byte"));
}

#[test]
fn prep_commands_on_the_fixture_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture_corpus();
    let metadata = corpus.join("metadata.csv");
    let test = run(&["prep", "select", "--metadata", s(&metadata), "--policy", "test"]);
    assert_eq!(code(&test), 0);
    assert_eq!(stdout(&test), "p00001\np00002\np00003\np00004\n");

    let train_list = dir.path().join("train.txt");
    let train = run(&["prep", "select", "--metadata", s(&metadata), "--policy", "train", "--out", s(&train_list)]);
    assert_eq!(code(&train), 0);
    assert_eq!(
        std::fs::read_to_string(&train_list).unwrap(),
        "p00001\np00002\np00003\np00004\np00005\np00006\np00009\n"
    );

    let (tr, va) = (dir.path().join("tr.txt"), dir.path().join("va.txt"));
    let part = run(&["prep", "partition", "--problems", s(&train_list), "--validation", "2", "--seed", "1", "--train-out", s(&tr), "--validation-out", s(&va)]);
    assert_eq!(code(&part), 0);
    assert_eq!(std::fs::read_to_string(&va).unwrap().lines().count(), 2);
    assert_eq!(std::fs::read_to_string(&tr).unwrap().lines().count(), 5);

    let problems = dir.path().join("test.txt");
    std::fs::write(&problems, "p00001\np00002\np00003\n").unwrap();
    let manifest = dir.path().join("manifest.csv");
    let m = run(&[
        "prep", "manifest", "--metadata", s(&metadata), "--descriptions", s(&corpus.join("descriptions")),
        "--problems", s(&problems), "--split", "test", "--per-cell-limit", "1", "--out", s(&manifest),
    ]);
    assert_eq!(code(&m), 0, "{}", String::from_utf8_lossy(&m.stderr));
    assert_eq!(PairManifest::read_csv(&manifest).unwrap().rows.len(), 36);

    let missing = run(&[
        "prep", "manifest", "--metadata", s(&metadata), "--descriptions", s(&dir.path().join("nope")),
        "--problems", s(&problems), "--split", "test", "--out", s(&manifest),
    ]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn prep_splits_writes_nested_plans() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<ManifestRow> = (0..70)
        .map(|i| ManifestRow {
            problem_id: format!("p{:03}", i % 7),
            submission_id: format!("s{i:04}"),
            language: Language::Ruby,
            verdict: Verdict::Accepted,
            description_path: PathBuf::from("d.txt"),
            code_path: PathBuf::from(format!("c{i}.rb")),
            split: Split::Train,
        })
        .collect();
    let manifest = dir.path().join("train.csv");
    PairManifest { rows }.write_csv(&manifest).unwrap();
    let out_dir = dir.path().join("splits");
    let o = run(&["prep", "splits", "--manifest", s(&manifest), "--seed", "9", "--out-dir", s(&out_dir)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let plan = SplitPlan::read_json(out_dir.join("ruby.json")).unwrap();
    assert_eq!(plan.ids(Checkpoint::X1).len(), 2);
    assert_eq!(plan.ids(Checkpoint::X32).len(), 64);
    assert!(plan.ids(Checkpoint::X32).starts_with(plan.ids(Checkpoint::X16)));

    let small = dir.path().join("small.csv");
    let few = PairManifest::read_csv(&manifest).unwrap().rows[..10].to_vec();
    PairManifest { rows: few }.write_csv(&small).unwrap();
    let o = run(&["prep", "splits", "--manifest", s(&small), "--out-dir", s(&out_dir)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ruby"));
}
