//! Counter-based mixing used for lazily materialized random choices.
//!
//! Scenarios, lazily filled strategy coordinates and grid payoff matrices are
//! all functions of `(seed, key)`, so they are reproducible on any platform
//! without storing the realized values.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
pub fn hash2(seed: u64, key: u64) -> u64 {
    mix64(seed ^ mix64(key).rotate_left(17))
}

/// Uniform value in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n` via a widening multiply.
#[inline]
pub fn uniform_index(h: u64, n: usize) -> usize {
    ((h as u128 * n as u128) >> 64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_index_stays_in_range_and_covers() {
        let mut seen = [0usize; 3];
        for k in 0..3000 {
            let i = uniform_index(hash2(7, k), 3);
            seen[i] += 1;
        }
        assert!(seen.iter().all(|&c| c > 900), "{seen:?}");
    }

    #[test]
    fn unit_interval_bounds() {
        assert_eq!(unit_interval(0), 0.0);
        assert!(unit_interval(u64::MAX) < 1.0);
    }
}
