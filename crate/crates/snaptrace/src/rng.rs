//! Deterministic random-number streams.
//!
//! Every stochastic routine in this crate draws from a ChaCha8 stream derived
//! from one root seed plus a list of integer labels (goal index, sample index,
//! phase tag, ...). The derivation uses a fixed 64-bit mix implemented here —
//! not the standard library's `Hasher`, whose output may change between
//! releases — so identical configurations produce identical results across
//! platforms, Rust versions, and thread schedules. Parallel and serial runs
//! agree bit for bit because each unit of work owns its own derived stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream label for cache-growth rollouts.
pub const PHASE_CACHE: u64 = 1;
/// Stream label for likelihood samples.
pub const PHASE_SAMPLE: u64 = 2;
/// Stream label for converged ground-truth runs inside the benchmark.
pub const PHASE_GROUND_TRUTH: u64 = 3;
/// Stream label for per-trial benchmark runs.
pub const PHASE_TRIAL: u64 = 4;
/// Stream label for drawing a task's stimulus snapshots from the
/// generative model.
pub const PHASE_STIMULI: u64 = 5;

/// One round of the splitmix64 generator; a well-mixed 64→64 bijection-based
/// hash with fixed constants.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold `parts` into `root` to name a substream. Order-sensitive.
pub fn derive_seed(root: u64, parts: &[u64]) -> u64 {
    let mut acc = splitmix64(root ^ 0xA076_1D64_78BD_642F);
    for &p in parts {
        acc = splitmix64(acc ^ splitmix64(p));
    }
    acc
}

/// The RNG for one unit of work, named by `root` and `parts`.
pub fn stream(root: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, parts))
}

/// FNV-1a hash of a string label, for folding task or snapshot names into
/// seed derivations. Stable by construction.
pub fn label_seed(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Uniform draw from `[0, 1)` using the top 53 bits of one `u64`.
pub fn unit_f64<R: Rng>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n`. Panics if `n == 0`.
pub fn pick_uniform<R: Rng>(rng: &mut R, n: usize) -> usize {
    assert!(n > 0, "cannot pick from an empty range");
    ((unit_f64(rng) * n as f64) as usize).min(n - 1)
}

/// Draw an index in `0..n` with probability proportional to `weight(i)`.
/// Returns `None` when every weight is zero (or `n == 0`). Weights must be
/// finite and non-negative.
pub fn pick_weighted<R: Rng>(
    rng: &mut R,
    n: usize,
    weight: impl Fn(usize) -> f64,
) -> Option<usize> {
    let mut total = 0.0;
    for i in 0..n {
        let w = weight(i);
        debug_assert!(w.is_finite() && w >= 0.0, "bad weight {w}");
        total += w;
    }
    if total <= 0.0 {
        return None;
    }
    let r = unit_f64(rng) * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for i in 0..n {
        let w = weight(i);
        if w > 0.0 {
            last_positive = Some(i);
            acc += w;
            if r < acc {
                return Some(i);
            }
        }
    }
    // Floating-point shortfall: accumulated sum landed a hair under `total`.
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_seed_matches_reference_vectors() {
        // Published FNV-1a 64-bit test vectors.
        assert_eq!(label_seed(""), 0xCBF2_9CE4_8422_2325);
        assert_eq!(label_seed("a"), 0xAF63_DC4C_8601_EC8C);
        assert_eq!(label_seed("foobar"), 0x8594_4171_F739_67E8);
    }

    #[test]
    fn derive_seed_is_order_sensitive_and_stable() {
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
        // Pinned values: changing the mixing function breaks every recorded
        // result in the repository, so treat these as a compatibility contract.
        assert_eq!(derive_seed(7, &[]), 0x5AEA_0893_D43C_1309);
        assert_eq!(derive_seed(7, &[1, 2, 3]), 0x969E_CC20_D681_1217);
    }

    #[test]
    fn unit_f64_stays_in_range() {
        let mut rng = stream(3, &[PHASE_SAMPLE]);
        for _ in 0..10_000 {
            let u = unit_f64(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn pick_weighted_ignores_zero_weights() {
        let weights = [0.0, 0.0, 2.5, 0.0];
        let mut rng = stream(5, &[]);
        for _ in 0..100 {
            assert_eq!(pick_weighted(&mut rng, 4, |i| weights[i]), Some(2));
        }
        assert_eq!(pick_weighted(&mut rng, 4, |_| 0.0), None);
        assert_eq!(pick_weighted(&mut rng, 0, |_| 1.0), None);
    }

    #[test]
    fn pick_uniform_covers_range() {
        let mut rng = stream(9, &[]);
        let mut seen = [false; 5];
        for _ in 0..1000 {
            seen[pick_uniform(&mut rng, 5)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
