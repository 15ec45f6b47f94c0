//! Space-time block codes for the two-user MIMO interference channel.
//!
//! This crate builds Toeplitz space-time block codes for two users sharing a
//! quasi-static Rayleigh channel, cancels the inter-user interference with a
//! group zero-forcing receiver, verifies the full-rank diversity criterion by
//! exhaustive enumeration over the error alphabet, and estimates diversity
//! orders from Monte-Carlo bit-error-rate sweeps.
//!
//! The modules follow the signal chain:
//!
//! * [`numerics`] — complex dense-matrix primitives (Kronecker products, SVD,
//!   numeric rank, orthogonal-complement projectors).
//! * [`modulation`] — Gray-labeled square QAM with unit average energy.
//! * [`codebook`] — rotation matrices, the Toeplitz codewords for both users,
//!   a non-Toeplitz multilayer comparison code, and the lifted (equivalent)
//!   channel matrices that tie codeword structure to the vectorized system.
//! * [`channel`] — reproducible quasi-static Rayleigh fading and noise.
//! * [`receiver`] — group zero-forcing cancellation, exhaustive maximum
//!   likelihood decoding, and an MMSE-regularized canceller.
//! * [`analysis`] — full-rank criterion checks, diversity-constant
//!   estimation, pairwise-error-probability bounds and slope fitting.
//! * [`simulator`] — Monte-Carlo BER sweep engine with CSV emission.

pub mod analysis;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod modulation;
pub mod numerics;
pub mod receiver;
pub mod simulator;

pub use error::{Error, Result};
