//! Deterministic RNG for rollouts and randomized fixtures.
//!
//! xorshift64* — fast, portable, identical output on every platform, so
//! seeded trajectories and generated test MDPs are bit-reproducible.
//! Not cryptographically secure.

/// Name recorded in trajectory log headers so a log can be replayed.
pub const RNG_ALGORITHM: &str = "xorshift64*";

/// Deterministic RNG with a single 64-bit state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimRng {
    state: u64,
}

impl SimRng {
    /// A zero seed is remapped to a fixed non-zero constant to avoid the
    /// xorshift lockup state.
    pub fn new(seed: u64) -> Self {
        let s = if seed == 0 { 0x9E37_79B9_7F4A_7C15 } else { seed };
        Self { state: s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        // 53 high bits -> uniform dyadic rational in [0,1).
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn gen_range(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo < hi);
        lo + (self.next_u64() % (hi - lo) as u64) as usize
    }

    /// Sample an index from a discrete distribution given as `(value, p)`
    /// pairs. Probabilities are assumed to sum to ~1; any residual mass
    /// from rounding falls on the last entry.
    pub fn sample_discrete<T: Copy>(&mut self, dist: &[(T, f64)]) -> T {
        debug_assert!(!dist.is_empty());
        let u = self.next_f64();
        let mut acc = 0.0;
        for &(v, p) in dist {
            acc += p;
            if u < acc {
                return v;
            }
        }
        dist[dist.len() - 1].0
    }

    /// A fresh generator derived from this one; used to give independent
    /// streams to parallel rollouts.
    pub fn split(&mut self) -> SimRng {
        SimRng::new(self.next_u64() | 1)
    }
}
