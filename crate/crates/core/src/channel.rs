//! Quasi-static Rayleigh fading and receiver noise with reproducible,
//! counter-based seeding.
//!
//! Every Monte-Carlo trial owns the stream `(master_seed, trial_index)`:
//! trials are reproducible independently of execution order and worker
//! count, and disjoint streams never share generator state.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rand_distr::StandardNormal;

use crate::numerics::{C64, CMat, CVec};

/// Addressable random stream: one per Monte-Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl Stream {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self {
            master_seed,
            trial_index,
        }
    }

    /// Generator for this stream. Calling twice yields identical sequences.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.trial_index);
        rng
    }
}

/// One circularly-symmetric complex Gaussian sample with unit variance:
/// real and imaginary parts are independent `N(0, 1/2)`.
pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(
        re * std::f64::consts::FRAC_1_SQRT_2,
        im * std::f64::consts::FRAC_1_SQRT_2,
    )
}

fn gaussian_matrix(m: usize, n: usize, rng: &mut impl Rng) -> CMat {
    let entries: Vec<C64> = (0..m * n).map(|_| complex_gaussian(rng)).collect();
    CMat::from_vec(m, n, entries)
}

/// The four `M x N` links of one quasi-static block: `h` matrices connect
/// user 1, `g` matrices connect user 2, indices name the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h1: CMat,
    pub g1: CMat,
    pub h2: CMat,
    pub g2: CMat,
}

/// Receiver noise for one vectorized block, i.i.d. unit-variance entries.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBlock {
    pub n: CVec,
}

/// Draws all four links of one block. Deterministic given the generator
/// state; consumes exactly `4 * m * n` complex samples.
pub fn draw_channel(m: usize, n: usize, rng: &mut impl Rng) -> ChannelRealization {
    ChannelRealization {
        h1: gaussian_matrix(m, n, rng),
        g1: gaussian_matrix(m, n, rng),
        h2: gaussian_matrix(m, n, rng),
        g2: gaussian_matrix(m, n, rng),
    }
}

/// Draws a length-`tn` noise vector.
pub fn draw_noise(tn: usize, rng: &mut impl Rng) -> NoiseBlock {
    let entries: Vec<C64> = (0..tn).map(|_| complex_gaussian(rng)).collect();
    NoiseBlock {
        n: CVec::from_vec(entries),
    }
}
