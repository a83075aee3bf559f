//! Counter-based deterministic random source.
//!
//! Every stochastic draw in the simulator is a pure function of a 64-bit key
//! tuple, so independent signal lanes are reproducible and provably
//! decorrelated: no generator state is shared between lanes, steps, or
//! threads.

/// SplitMix64 finalizer. Bijective avalanche over one 64-bit word.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash a (seed, lane, index) tuple into one well-mixed word.
#[inline]
pub fn key3(seed: u64, lane: u64, index: u64) -> u64 {
    mix64(mix64(mix64(seed) ^ lane) ^ index)
}

/// Map a hashed word onto [0, 1) with 53-bit resolution.
#[inline]
pub fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One uniform draw in [0, 1) keyed by (seed, lane, index).
#[inline]
pub fn uniform(seed: u64, lane: u64, index: u64) -> f64 {
    unit_f64(key3(seed, lane, index))
}

/// One standard-normal draw keyed by (seed, lane, index), via Box-Muller on
/// two sub-keys of the same tuple.
pub fn normal(seed: u64, lane: u64, index: u64) -> f64 {
    let h = key3(seed, lane, index);
    let u1 = unit_f64(mix64(h ^ 0x5bf0_3635));
    let u2 = unit_f64(mix64(h ^ 0xd9f6_39a1_9f6a_38c4));
    // Guard the log singularity at u1 == 0.
    let u1 = u1.max(f64::MIN_POSITIVE);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Sequential generator for places that want a stream rather than a counter
/// (training shuffles, task sampling). Still fully determined by its seed.
#[derive(Clone, Debug)]
pub struct Rng64 {
    state: u64,
}

impl Rng64 {
    pub fn new(seed: u64) -> Self {
        Rng64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        mix64(self.state)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}
