//! Deterministic pairwise reductions over carrier indices.
//!
//! The split points depend only on the index range, so the result is
//! bit-identical whether the halves run on one thread or many.

use std::ops::Add;

const LEAF: usize = 16;
const PAR_THRESHOLD: usize = 256;

/// Pairwise sum of `term(i)` for `i` in `range`, folding left inside leaves of
/// at most 16 terms. Returns `zero()` on an empty range.
pub fn pairwise_sum<T, Z, F>(range: std::ops::Range<usize>, zero: &Z, term: &F) -> T
where
    T: Add<Output = T> + Send,
    Z: Fn() -> T + Sync,
    F: Fn(usize) -> T + Sync,
{
    let len = range.end.saturating_sub(range.start);
    if len <= LEAF {
        let mut acc = zero();
        for i in range {
            acc = acc + term(i);
        }
        return acc;
    }
    let mid = range.start + len / 2;
    let (lo, hi) = if len >= PAR_THRESHOLD {
        rayon::join(
            || pairwise_sum(range.start..mid, zero, term),
            || pairwise_sum(mid..range.end, zero, term),
        )
    } else {
        (
            pairwise_sum(range.start..mid, zero, term),
            pairwise_sum(mid..range.end, zero, term),
        )
    };
    lo + hi
}

/// Pairwise sum over an explicit index list (same tree shape as
/// [`pairwise_sum`] over positions in the list).
pub fn pairwise_sum_over<T, Z, F>(indices: &[usize], zero: &Z, term: &F) -> T
where
    T: Add<Output = T> + Send,
    Z: Fn() -> T + Sync,
    F: Fn(usize) -> T + Sync,
{
    pairwise_sum(0..indices.len(), zero, &|k| term(indices[k]))
}
