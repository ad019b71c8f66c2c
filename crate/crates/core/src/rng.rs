//! Seeded random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream keyed by
//! `(master seed, label, index)`. The key is folded into a single 64-bit
//! child seed with the splitmix64 finalizer, so a trial, an irrep or a
//! matrix row gets the same numbers regardless of which worker runs it or
//! in what order.

use crate::linalg::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Stream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(master, label, index)`.
pub fn child_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut h = splitmix64(master);
    for chunk in label.as_bytes().chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        h = splitmix64(h ^ u64::from_le_bytes(word));
    }
    splitmix64(h ^ splitmix64(index ^ 0xA076_1D64_78BD_642F))
}

pub fn stream(master: u64, label: &str, index: u64) -> Stream {
    Stream::seed_from_u64(child_seed(master, label, index))
}

#[inline]
pub fn normal(rng: &mut Stream) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex normal with E|z|^2 = 1.
#[inline]
pub fn complex_normal(rng: &mut Stream) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    C64::new(normal(rng) * s, normal(rng) * s)
}
