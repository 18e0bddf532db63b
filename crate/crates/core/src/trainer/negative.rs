use std::collections::HashSet;

use rand::{Rng, RngExt};

use crate::error::{Error, Result};
use crate::kg::{EntityId, Triple};

/// Attempts per negative before a known-true corruption is accepted anyway.
pub const MAX_FILTER_ATTEMPTS: usize = 50;

/// Draws `k` corruptions of `triple`.
///
/// Each negative flips a fair coin between head and tail and replaces that
/// entity with a different, uniformly chosen candidate. Corruptions found in
/// `known_true` are redrawn up to [`MAX_FILTER_ATTEMPTS`] times.
/// `candidates` must be sorted ascending.
pub fn sample_negatives<R: Rng + ?Sized>(
    triple: &Triple,
    k: usize,
    candidates: &[EntityId],
    rng: &mut R,
    known_true: &HashSet<Triple>,
) -> Result<Vec<Triple>> {
    if candidates.len() < 2 {
        return Err(Error::Config(
            "negative sampling needs at least two candidate entities".into(),
        ));
    }
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let corrupt_head = rng.random_bool(0.5);
        let original = if corrupt_head { triple.head } else { triple.tail };
        let skip = candidates.binary_search(&original).ok();
        let choices = candidates.len() - usize::from(skip.is_some());
        let mut negative = *triple;
        for _ in 0..MAX_FILTER_ATTEMPTS {
            let mut idx = rng.random_range(0..choices);
            if skip.is_some_and(|s| idx >= s) {
                idx += 1;
            }
            let replacement = candidates[idx];
            negative = if corrupt_head {
                Triple::new(replacement, triple.relation, triple.tail)
            } else {
                Triple::new(triple.head, triple.relation, replacement)
            };
            if !known_true.contains(&negative) {
                break;
            }
        }
        out.push(negative);
    }
    Ok(out)
}
