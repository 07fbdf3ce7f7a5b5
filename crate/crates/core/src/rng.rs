//! Counted random streams.
//!
//! Every video gets its own PCG32 (XSH-RR 64/32) stream derived from the
//! master seed and the video index, so any single video can be regenerated
//! without replaying the others.

use serde::{Deserialize, Serialize};

/// Identifier recorded in manifests so datasets can be reproduced elsewhere.
pub const RNG_ALGORITHM: &str = "pcg32-xsh-rr/splitmix64-seeded";

const PCG_MULT: u64 = 6364136223846793005;

/// SplitMix64 finalizer, used to spread seeds over the PCG state space.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    state: u64,
    inc: u64,
}

impl RngStream {
    /// Reference PCG32 seeding (`pcg32_srandom_r`).
    pub fn new(init_state: u64, stream_id: u64) -> Self {
        let mut rng = RngStream {
            state: 0,
            inc: (stream_id << 1) | 1,
        };
        rng.step();
        rng.state = rng.state.wrapping_add(init_state);
        rng.step();
        rng
    }

    /// Stream id (the PCG sequence selector).
    pub fn stream_id(&self) -> u64 {
        self.inc >> 1
    }

    #[inline]
    fn step(&mut self) {
        self.state = self.state.wrapping_mul(PCG_MULT).wrapping_add(self.inc);
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.step();
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`; returns `lo` exactly when `lo == hi`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.next_f64();
        if lo == hi {
            return lo;
        }
        let v = lo + (hi - lo) * u;
        if v > hi {
            hi
        } else {
            v
        }
    }

    /// Uniform index in `0..n` (`n > 0`).
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let i = (self.next_f64() * n as f64) as usize;
        i.min(n - 1)
    }

    /// Standard normal via Box-Muller (one draw per call, two uniforms consumed).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        crate::math::sqrt(-2.0 * crate::math::ln(u1)) * crate::math::cos(2.0 * crate::math::PI * u2)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

/// Per-video stream: deterministic in `(master_seed, video_index)`, distinct
/// PCG sequence per index.
pub fn derive_stream(master_seed: u64, video_index: u64) -> RngStream {
    let init = splitmix64(master_seed.wrapping_add(splitmix64(video_index)));
    RngStream::new(init, video_index)
}
