//! Deterministic seed derivation.
//!
//! Every random stream in the crate is derived from a single master seed by
//! mixing structural coordinates (user index, repartition, training-set size,
//! ...) through a splitmix64 chain. This makes any cell of an experiment
//! independently reproducible without re-running the cells before it.

/// One splitmix64 scrambling round.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a sequence of structural parts.
///
/// The derivation is order-sensitive: `mix(s, &[a, b]) != mix(s, &[b, a])`
/// in general.
pub fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(seed);
    for &part in parts {
        state = splitmix64(state ^ splitmix64(part));
    }
    state
}
