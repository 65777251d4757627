//! Deterministic pseudo-random numbers for graph generation and weight init.
//!
//! Everything downstream promises bit-exact reproducibility for a fixed seed,
//! including across language ports, so the generator is pinned to SplitMix64
//! (Steele, Lea & Flood's `splitmix64` finalizer) rather than an unspecified
//! library RNG. The integer and float derivations below are part of that
//! contract: `uniform_usize` reduces by modulo, `next_f64` takes the top 53
//! bits.

/// SplitMix64 generator. One `u64` of state, period 2^64.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derives an independent stream from a seed and a list of stream labels.
    ///
    /// Used to give every (graph, model, hop) training run its own
    /// deterministic stream regardless of scheduling order.
    pub fn derive(seed: u64, labels: &[u64]) -> Self {
        let mut rng = Self::new(seed);
        for &label in labels {
            let mixed = rng.next_u64() ^ label.wrapping_mul(0x9e37_79b9_7f4a_7c15);
            rng = Self::new(mixed);
        }
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in {0, 1, ..., bound-1}. Modulo reduction; the bias is
    /// below 2^-40 for any bound this toolkit uses and the simple rule keeps
    /// ports exact.
    pub fn uniform_usize(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "uniform_usize: bound must be positive");
        (self.next_u64() % bound as u64) as usize
    }

    /// Uniform in [lo, hi).
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
