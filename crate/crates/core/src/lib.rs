//! QBER estimation for QKD post-processing without sacrificing sifted key.
//!
//! The hybrid estimator flips a random subset of the sifted key, wraps it in
//! level-`m` random noise and sends the result in the clear; the receiver
//! estimates the channel QBER from its own key and the noisy key alone. The
//! crate also carries the sample-and-discard baseline, an eavesdropper model
//! and a deterministic Monte Carlo harness comparing the two.
//!
//! Randomness is simulation-grade only (see [`bits::RngStream`]).

pub mod adversary;
pub mod bit_flip;
pub mod bits;
pub mod channel;
pub mod error;
pub mod harness;
pub mod hybrid;
pub mod noisy_key;
pub mod traditional;

pub use bits::{BitString, RngStream};
pub use error::{Error, Result};

/// An estimate as computed, and the same value clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovered {
    pub raw: f64,
    pub clamped: f64,
}

impl Recovered {
    pub fn new(raw: f64) -> Self {
        Recovered {
            raw,
            clamped: raw.clamp(0.0, 1.0),
        }
    }
}
