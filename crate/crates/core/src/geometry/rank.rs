//! Average-tie ranking.

use std::cmp::Ordering;

/// Ranks `values` (1-based); tied values share the mean of the positions they occupy.
///
/// The ranks always sum to `d(d+1)/2`. A constant input yields `(d+1)/2` everywhere.
pub fn rank_transform(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    let mut ranks = vec![0.0; values.len()];
    rank_into(values, &mut order, &mut ranks);
    ranks
}

/// Allocation-free form of [`rank_transform`]; `order` is scratch of the same length.
pub fn rank_into(values: &[f64], order: &mut [usize], ranks: &mut [f64]) {
    debug_assert_eq!(values.len(), order.len());
    debug_assert_eq!(values.len(), ranks.len());
    for (k, slot) in order.iter_mut().enumerate() {
        *slot = k;
    }
    order.sort_unstable_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    assign_tied_ranks(order, |a, b| values[a] == values[b], |k, r| ranks[k] = r);
}

/// Walks positions sorted by value and emits the average rank of every tie run.
///
/// `same(a, b)` decides whether two original indices hold equal values;
/// `emit(index, rank)` receives each index exactly once.
pub(crate) fn assign_tied_ranks(
    sorted: &[usize],
    same: impl Fn(usize, usize) -> bool,
    mut emit: impl FnMut(usize, f64),
) {
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && same(sorted[start], sorted[end]) {
            end += 1;
        }
        // positions start..end hold 1-based ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &k in &sorted[start..end] {
            emit(k, rank);
        }
        start = end;
    }
}

/// Twice the centred average rank, `2r - (d+1)`, which is always an integer.
///
/// Used by the exact integer Spearman kernel. Callers guarantee `d ≤ 2048`.
pub(crate) fn centred_double_ranks(values: &[f64], order: &mut [usize], ranks: &mut [f64], out: &mut [i16]) {
    rank_into(values, order, ranks);
    let shift = values.len() as f64 + 1.0;
    for (o, r) in out.iter_mut().zip(ranks.iter()) {
        *o = (2.0 * r - shift) as i16;
    }
}
