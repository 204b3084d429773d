use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EmbeddingSet;
use crate::error::{Error, Result};

/// Restricts both sets to their shared sample ids, ordered ascending, so that
/// row `i` of either output describes the same sample.
pub fn align_sets(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<(EmbeddingSet, EmbeddingSet)> {
    let in_b: HashMap<&str, usize> = b
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut shared: Vec<(&str, usize, usize)> = a
        .ids()
        .iter()
        .enumerate()
        .filter_map(|(i, id)| in_b.get(id.as_str()).map(|&j| (id.as_str(), i, j)))
        .collect();
    if shared.len() < 2 {
        return Err(Error::Alignment {
            left: a.len(),
            right: b.len(),
            shared: shared.len(),
        });
    }
    shared.sort_unstable_by(|x, y| x.0.cmp(y.0));
    let rows_a: Vec<usize> = shared.iter().map(|s| s.1).collect();
    let rows_b: Vec<usize> = shared.iter().map(|s| s.2).collect();
    Ok((a.select(&rows_a), b.select(&rows_b)))
}

/// Seeded draw of `k` ids without replacement, returned in their input order.
/// Returns all ids when `k >= ids.len()`. `stream` separates independent draws.
pub fn subsample_ids(ids: &[String], k: usize, seed: u64, stream: u64) -> Vec<String> {
    if k >= ids.len() {
        return ids.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut picked = rand::seq::index::sample(&mut rng, ids.len(), k).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| ids[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingMeta;

    fn set(ids: &[&str]) -> EmbeddingSet {
        let rows: Vec<Vec<f32>> = (0..ids.len()).map(|i| vec![i as f32, -(i as f32)]).collect();
        EmbeddingSet::from_rows(
            ids.iter().map(|s| s.to_string()).collect(),
            &rows,
            EmbeddingMeta::semantic("m", 0),
        )
        .unwrap()
    }

    #[test]
    fn intersects_and_sorts() {
        let (a, b) = align_sets(&set(&["p1", "p2", "p3"]), &set(&["p4", "p3", "p2"])).unwrap();
        assert_eq!(a.ids(), ["p2", "p3"]);
        assert_eq!(b.ids(), ["p2", "p3"]);
        assert_eq!(a.row(0), [1.0, -1.0]);
        // p2 was row 2 of the second set
        assert_eq!(b.row(0), [2.0, -2.0]);
    }

    #[test]
    fn disjoint_sets_fail_with_counts() {
        let err = align_sets(&set(&["a", "b"]), &set(&["c", "d", "e"])).unwrap_err();
        match err {
            Error::Alignment { left, right, shared } => {
                assert_eq!((left, right, shared), (2, 3, 0));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn shuffled_rows_follow_their_ids() {
        let a = set(&["d", "a", "c", "b"]);
        let b = set(&["b", "c", "a", "d"]);
        // independent id -> row maps built from the inputs
        let map_a: HashMap<String, Vec<f32>> =
            a.ids().iter().cloned().zip(a.rows().map(<[f32]>::to_vec)).collect();
        let map_b: HashMap<String, Vec<f32>> =
            b.ids().iter().cloned().zip(b.rows().map(<[f32]>::to_vec)).collect();
        let (x, y) = align_sets(&a, &b).unwrap();
        assert_eq!(x.ids(), y.ids());
        assert_eq!(x.ids(), ["a", "b", "c", "d"]);
        for (i, id) in x.ids().iter().enumerate() {
            assert_eq!(x.row(i), map_a[id].as_slice());
            assert_eq!(y.row(i), map_b[id].as_slice());
        }
    }

    #[test]
    fn aligning_aligned_sets_is_a_no_op() {
        let (x, y) = align_sets(&set(&["b", "a", "c"]), &set(&["c", "b", "a", "z"])).unwrap();
        let (x2, y2) = align_sets(&x, &y).unwrap();
        assert_eq!(x, x2);
        assert_eq!(y, y2);
    }

    #[test]
    fn subsample_is_seeded_and_ordered() {
        let ids: Vec<String> = (0..50).map(|i| format!("id{i:03}")).collect();
        let a = subsample_ids(&ids, 10, 5, 0);
        assert_eq!(a, subsample_ids(&ids, 10, 5, 0));
        assert_ne!(a, subsample_ids(&ids, 10, 6, 0));
        assert_ne!(a, subsample_ids(&ids, 10, 5, 1));
        assert_eq!(a.len(), 10);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample_ids(&ids, 80, 5, 0), ids);
    }
}
