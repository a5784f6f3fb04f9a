//! Counter-based deterministic random source.
//!
//! Every random quantity in this crate is a pure function of a 64-bit stream
//! key and a 64-bit counter (or a signed coordinate index). There is no
//! mutable generator state, so two-sided orbit windows can be materialized
//! lazily in any order and always agree, and ensemble members can run on any
//! number of threads without changing the results.
//!
//! The mixer is the SplitMix64 finalizer applied twice over the combined
//! (key, counter) words. It is not cryptographic; it is a statistical PRF
//! good enough for Monte Carlo at the tolerances used here.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pure 64-bit word keyed on (key, counter).
#[inline]
pub fn word(key: u64, counter: u64) -> u64 {
    mix64(mix64(key.wrapping_add(GAMMA)) ^ counter.wrapping_mul(GAMMA))
}

/// Word keyed on a signed coordinate index (two-sided orbits).
#[inline]
pub fn word_at(key: u64, index: i64) -> u64 {
    word(key, index as u64)
}

/// Uniform f64 in [0, 1) keyed on (key, counter).
#[inline]
pub fn unit(key: u64, counter: u64) -> f64 {
    (word(key, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform f64 in [0, 1) keyed on a signed coordinate index.
#[inline]
pub fn unit_at(key: u64, index: i64) -> f64 {
    (word_at(key, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derives an independent stream key, e.g. for ensemble member `tag`.
#[inline]
pub fn derive(key: u64, tag: u64) -> u64 {
    word(key, tag ^ 0xD1B5_4A32_D192_ED03)
}

/// Inverse-CDF draw from a finite distribution given a uniform variate.
///
/// `weights` must be non-negative; they are treated as already normalized.
/// Rounding slack is absorbed by the last positive-weight entry.
pub fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap behind the final cumulative sum
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .unwrap_or(weights.len() - 1)
}
