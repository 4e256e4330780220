//! Stratified sampling without replacement.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Draws ⌈fraction·|group|⌉ members from every group, without replacement,
/// and returns the selected indices sorted ascending.
///
/// Every non-empty group contributes at least one member. With
/// `fraction = 1.0` the result is exactly `0..groups.len()`. Groups are
/// visited in ascending label order and all draws come from a single
/// seeded stream, so the output is a pure function of `(groups, fraction,
/// seed)`.
pub fn stratified_indices(groups: &[usize], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) || !fraction.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "sampling fraction must be in (0, 1], got {fraction}"
        )));
    }
    let mut by_group: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &g) in groups.iter().enumerate() {
        by_group.entry(g).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for members in by_group.values() {
        // The epsilon keeps ⌈f·n⌉ at the mathematical value when f·n rounds
        // just above an integer (e.g. 0.1 * 30).
        let m =
            ((fraction * members.len() as f64 - 1e-9).ceil().max(1.0) as usize).min(members.len());
        let picks = rand::seq::index::sample(&mut rng, members.len(), m);
        out.extend(picks.iter().map(|p| members[p]));
    }
    out.sort_unstable();
    Ok(out)
}
