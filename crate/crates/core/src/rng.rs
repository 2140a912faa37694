//! Deterministic pseudo-random streams.
//!
//! Every source of randomness in a simulation derives from one master seed.
//! Subsystems pull named streams (traffic, per-agent exploration) so that
//! changing one knob never perturbs another stream's sequence. The generator
//! is a self-contained xoshiro256** seeded through SplitMix64, which keeps
//! results bit-identical across platforms and toolchain updates.

/// Stream tag for traffic generation.
pub const STREAM_TRAFFIC: u64 = 0x5452_4146;
/// Stream tag base for per-router exploration; add the router's flat id.
pub const STREAM_AGENT: u64 = 0x4147_4E54_0000_0000;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xoshiro256** generator with explicit, stable seeding.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    /// Derive a named stream from the master seed. Streams with different
    /// tags are statistically independent.
    pub fn stream(master_seed: u64, tag: u64) -> Self {
        let mut sm = master_seed ^ tag.wrapping_mul(0xA24B_AED4_963E_E407);
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut sm);
        }
        // xoshiro must not start from the all-zero state
        if s == [0, 0, 0, 0] {
            s[0] = 0x9E37_79B9_7F4A_7C15;
        }
        Rng { s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli draw. `p <= 0` never fires and `p >= 1` always fires, but
    /// both still consume exactly one draw so stream positions stay aligned.
    #[inline]
    pub fn gen_bool(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform integer in [0, n). `n` must be nonzero.
    #[inline]
    pub fn gen_range(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // Multiply-shift: unbiased enough for simulation workloads and
        // branch-free, so the draw count per call is constant.
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}
