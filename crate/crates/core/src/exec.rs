//! Execution helpers for the data-parallel kernels.
//!
//! With the `parallel` feature the maps fan out through rayon; without it
//! they run sequentially. Only order-preserving indexed maps go through
//! here. Reductions that are sensitive to floating-point association
//! (sums, means, min/max folds) stay sequential in the callers, so the
//! two execution modes produce bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indices_preserves_order() {
        let out = map_indices(5, |i| i * i);
        assert_eq!(out, vec![0, 1, 4, 9, 16]);
    }

    #[test]
    fn map_indices_empty() {
        let out: Vec<usize> = map_indices(0, |i| i);
        assert!(out.is_empty());
    }
}
