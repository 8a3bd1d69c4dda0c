//! Counter-based pseudo-random generation with explicit stream splitting.
//!
//! Every random draw in this crate is derived from a master seed plus a path
//! of stream identifiers (e.g. `(seed, code index, trial index)`), so any
//! part of a run can be regenerated independently and in parallel while
//! staying bit-identical across platforms and thread counts.

/// SplitMix64 finalizer; bijective on `u64`.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of the sub-stream identified by `path` under `master`.
pub fn stream_seed(master: u64, path: &[u64]) -> u64 {
    let mut state = mix64(master);
    for &part in path {
        state = mix64(state ^ mix64(part.wrapping_add(0xA076_1D64_78BD_642F)));
    }
    state
}

/// Small counter-based generator (SplitMix64 sequence).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Generator for the sub-stream `path` of `master`.
    pub fn from_path(master: u64, path: &[u64]) -> Self {
        Self::new(stream_seed(master, path))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform draw in `[0, bound)` via rejection.
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        if bound == 1 {
            return 0;
        }
        // Rejection threshold keeps the modulo unbiased.
        let threshold = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_u64();
            if v < threshold {
                return v % bound;
            }
        }
    }
}
