use std::collections::HashMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rsa_probe::embedding::{
    load_set, read_ids, read_set, read_tsv, sidecar_path, write_set, write_tsv, Checkpoint, Correctness, Language,
    Modality, Pooling,
};
use rsa_probe::{align_sets, EmbeddingMeta, EmbeddingSet, Error};

fn meta() -> EmbeddingMeta {
    EmbeddingMeta {
        model_id: "encoder-base".into(),
        layer: 7,
        modality: Modality::BimodalNlPl,
        language: Language::Php,
        checkpoint: Checkpoint::X16,
        correctness: Correctness::Incorrect,
        pooling: Pooling::Mean,
    }
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmbeddingSet {
    let ids = (0..n).map(|i| format!("sub-{i}-é")).collect();
    let values = (0..n * d).map(|_| rng.gen_range(-3.0f32..3.0)).collect();
    EmbeddingSet::new(ids, values, d, meta()).unwrap()
}

#[test]
fn file_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let set = random_set(&mut rng, 3, 4);
    let path = dir.path().join("layer7.rsae");
    write_set(&path, &set).unwrap();
    let back = read_set(&path).unwrap();
    assert_eq!(back.ids(), set.ids());
    assert_eq!(back.meta(), set.meta());
    assert!(back.values().iter().zip(set.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(read_ids(&path).unwrap(), set.ids());
    assert_eq!(load_set(&path).unwrap(), set);

    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..5], &[0x52, 0x53, 0x41, 0x45, 0x31]);
    assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 3);
    assert_eq!(u32::from_le_bytes(bytes[9..13].try_into().unwrap()), 4);

    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
    let mut keys: Vec<&str> = sidecar.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["checkpoint", "correctness", "language", "layer", "modality", "model_id", "pooling"]);
    assert_eq!(sidecar["checkpoint"], "x16");
    assert_eq!(sidecar["modality"], "bimodal-nl-pl");
}

#[test]
fn empty_sets_cannot_be_written() {
    let dir = tempfile::tempdir().unwrap();
    let empty = EmbeddingSet::new(vec![], vec![], 4, meta()).unwrap();
    assert!(matches!(write_set(dir.path().join("e.rsae"), &empty), Err(Error::Validation(_))));
}

#[test]
fn invalid_sets_are_rejected_at_construction() {
    let dup = EmbeddingSet::new(vec!["a".into(), "a".into()], vec![0.0; 2], 1, meta());
    assert!(matches!(dup, Err(Error::Validation(_))));
    let nan = EmbeddingSet::new(vec!["a".into(), "b".into()], vec![0.0, f32::NAN], 1, meta());
    assert!(matches!(nan, Err(Error::Validation(_))));
    let shape = EmbeddingSet::new(vec!["a".into(), "b".into()], vec![0.0; 3], 2, meta());
    assert!(matches!(shape, Err(Error::Validation(_))));
}

#[test]
fn corrupt_files_report_byte_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let path = dir.path().join("s.rsae");
    write_set(&path, &random_set(&mut rng, 5, 3)).unwrap();
    let good = std::fs::read(&path).unwrap();

    let mut bad_magic = good.clone();
    bad_magic[2] = b'X';
    std::fs::write(&path, &bad_magic).unwrap();
    match read_set(&path) {
        Err(Error::Format { offset, .. }) => assert_eq!(offset, 2),
        other => panic!("expected a format error, got {other:?}"),
    }

    std::fs::write(&path, &good[..13 + 4 * 7]).unwrap();
    match read_set(&path) {
        Err(Error::Format { offset, .. }) => assert!(offset >= 13 && offset <= good.len() as u64, "{offset}"),
        other => panic!("expected a format error, got {other:?}"),
    }

    std::fs::write(&path, &good).unwrap();
    std::fs::remove_file(sidecar_path(&path)).unwrap();
    assert!(matches!(read_set(&path), Err(Error::Io { .. })));
}

#[test]
fn tsv_fallback_matches_binary() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let set = random_set(&mut rng, 6, 5);
    let path = dir.path().join("s.tsv");
    write_tsv(&path, &set).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("id\tv0\tv1\tv2\tv3\tv4\n"));
    let (ids, values, d) = read_tsv(&path).unwrap();
    assert_eq!((ids.as_slice(), d), (set.ids(), 5));
    assert_eq!(values, set.values());
    assert_eq!(load_set(&path).unwrap(), set);

    std::fs::write(&path, "id\tv0\tv1\na\t1\t2\nb\t3\n").unwrap();
    match read_tsv(&path) {
        Err(Error::Format { offset, .. }) => assert_eq!(offset, 15),
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn alignment_examples() {
    let set = |ids: &[&str]| {
        let rows: Vec<Vec<f32>> = (0..ids.len()).map(|i| vec![i as f32, 1.0]).collect();
        EmbeddingSet::from_rows(ids.iter().map(|s| s.to_string()).collect(), &rows, meta()).unwrap()
    };
    let (a, b) = align_sets(&set(&["p1", "p2", "p3"]), &set(&["p2", "p3", "p4"])).unwrap();
    assert_eq!(a.ids(), ["p2", "p3"]);
    assert_eq!(b.ids(), ["p2", "p3"]);
    assert_eq!(a.row(0), [1.0, 1.0]);
    assert_eq!(b.row(0), [0.0, 1.0]);
    match align_sets(&set(&["a", "b"]), &set(&["c", "d", "e"])) {
        Err(Error::Alignment { left: 2, right: 3, shared: 0 }) => {}
        other => panic!("expected an alignment error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shuffled_rows_align_back_by_id(n in 2usize..40, d in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_set(&mut rng, n, d);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let b = a.select(&order);
        let by_id: HashMap<&str, &[f32]> = a.ids().iter().map(String::as_str).zip(a.rows()).collect();
        let (x, y) = align_sets(&a, &b).unwrap();
        prop_assert_eq!(x.ids(), y.ids());
        prop_assert!(x.ids().windows(2).all(|w| w[0] < w[1]));
        for (i, id) in x.ids().iter().enumerate() {
            prop_assert_eq!(x.row(i), by_id[id.as_str()]);
            prop_assert_eq!(y.row(i), by_id[id.as_str()]);
        }
        let (x2, y2) = align_sets(&x, &y).unwrap();
        prop_assert_eq!(&x2, &x);
        prop_assert_eq!(&y2, &y);
    }
}
