use crate::rng;

/// Seeded Fisher–Yates permutation of `0..n` chunked into `ceil(n / batch)`
/// batches; the last batch holds the remainder.
pub fn batched_indices(n: usize, batch: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(n > 0 && batch > 0, "batched_indices needs n > 0 and batch > 0");
    let mut order: Vec<usize> = (0..n).collect();
    rng::fisher_yates(&mut order, &mut rng::seeded_rng(seed));
    order.chunks(batch).map(<[usize]>::to_vec).collect()
}
