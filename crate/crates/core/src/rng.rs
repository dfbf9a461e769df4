//! Counter-based Gaussian draws.
//!
//! Every random number in the crate is addressed by `(seed, stream, counter)`
//! and produced by a ChaCha8 keystream positioned at `counter`. A draw never
//! depends on how many other draws happened before it, which makes
//! trajectories reproducible under any scheduling and lets nested grids
//! share the low-mode part of a random field.

use core::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::spectral::Mode;

/// Stream tags. A stream id is `tag << 48 | index`.
pub mod tag {
    pub const TRAJECTORY: u16 = 1;
    pub const OPTIMIZER: u16 = 2;
    pub const CERTIFY: u16 = 3;
    pub const NOISE_CHECK: u16 = 4;
    pub const INITIAL: u16 = 5;
}

pub fn stream_id(tag: u16, index: u64) -> u64 {
    debug_assert!(index < 1 << 48);
    (u64::from(tag) << 48) | index
}

const MODE_BITS: u32 = 21;
const MODE_OFFSET: i64 = 1 << 20;

/// Grid-independent integer code of a wavenumber.
pub fn mode_code(k: Mode) -> u64 {
    let a = (i64::from(k.0) + MODE_OFFSET) as u64;
    let b = (i64::from(k.1) + MODE_OFFSET) as u64;
    (a << MODE_BITS) | b
}

/// Counter for the draw of mode `k` at time step `step`.
pub fn step_mode_counter(step: u64, k: Mode) -> u64 {
    (step << (2 * MODE_BITS)) | mode_code(k)
}

#[derive(Clone, Debug)]
pub struct CounterRng {
    rng: ChaCha8Rng,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Two independent standard normals (Box-Muller on two keystream words).
    pub fn normal_pair(&mut self, counter: u64) -> (f64, f64) {
        self.rng.set_word_pos(u128::from(counter) * 4);
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let (s, c) = libm::sincos(TAU * u2);
        (r * c, r * s)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self, counter: u64) -> f64 {
        self.rng.set_word_pos(u128::from(counter) * 4);
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
