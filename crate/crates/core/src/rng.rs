//! Deterministic pseudo-randomness.
//!
//! [`mix`] is a counter-indexed generator: draw `i` of stream `seed` can be
//! recomputed in isolation, so a sampled placement is fully described by
//! its seed without per-bit state. [`SplitMix64`] wraps the same function
//! as a sequential generator for test fixtures and trial scheduling.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 output at position `counter` of stream `seed`.
pub fn mix(seed: u64, counter: u64) -> u64 {
    let mut z = seed
        .wrapping_add(counter.wrapping_mul(GOLDEN))
        .wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sequential splitmix64 generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    seed: u64,
    counter: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = mix(self.seed, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform draw in `0..n`. Modulo bias is negligible for the small `n`
    /// used here.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        self.next_u64() % n
    }
}
