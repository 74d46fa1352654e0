//! Sample-and-discard baseline: reveal a random subset, count mismatches,
//! throw the revealed bits away.

use serde::Serialize;

use crate::bits::{choose_positions, BitString, RngStream};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TraditionalResult {
    pub sample_fraction: f64,
    pub sample_size: usize,
    pub mismatches: usize,
    pub qber_est: f64,
    pub remaining_alice: BitString,
    pub remaining_bob: BitString,
}

/// JSON view printed by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraditionalSummary {
    pub qber_est: f64,
    pub sample_size: usize,
    pub remaining_len: usize,
}

impl TraditionalResult {
    pub fn summary(&self) -> TraditionalSummary {
        TraditionalSummary {
            qber_est: self.qber_est,
            sample_size: self.sample_size,
            remaining_len: self.remaining_alice.len(),
        }
    }
}

pub fn sample_size(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) + 0.5).floor() as usize
}

pub fn traditional_estimate(
    alice: &BitString,
    bob: &BitString,
    fraction: f64,
    rng: &mut RngStream,
) -> Result<TraditionalResult> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch {
            left: alice.len(),
            right: bob.len(),
        });
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidProbability {
            name: "fraction",
            value: fraction,
            range: "(0, 1]",
        });
    }
    let n = alice.len();
    let size = sample_size(fraction, n);
    if size == 0 {
        return Err(Error::EmptySample { fraction, n });
    }
    let positions = choose_positions(rng, n, size)?;

    let mismatches = positions
        .iter()
        .filter(|&&i| alice.bit(i) != bob.bit(i))
        .count();

    let mut revealed = vec![false; n];
    for &i in &positions {
        revealed[i] = true;
    }
    let keep = |key: &BitString| -> BitString {
        (0..n).filter(|&i| !revealed[i]).map(|i| key.bit(i)).collect()
    };

    Ok(TraditionalResult {
        sample_fraction: fraction,
        sample_size: size,
        mismatches,
        qber_est: mismatches as f64 / size as f64,
        remaining_alice: keep(alice),
        remaining_bob: keep(bob),
    })
}
