//! Counter-based random streams: every `(master, path, substream)` triple
//! owns an independent ChaCha8 generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

pub type StreamRng = ChaCha8Rng;

pub const CLOCK: u64 = 0;
pub const RADIUS: u64 = 1;
pub const DIRECTION: u64 = 2;
pub const ACCEPT: u64 = 3;
pub const AUX: u64 = 4;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64, substream: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ index) ^ substream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn stream(master: u64, index: u64, substream: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index, substream))
}

/// Uniform on `(0, 1]`, safe for logarithms.
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    rng.sample::<f64, _>(Exp1) / rate
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn rademacher<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}
