//! Deliberate bit flipping of the sifted key and the algebra that undoes
//! its effect on the observed error rate.

use crate::bits::{choose_positions, BitString, RngStream};
use crate::error::{Error, Result};
use crate::Recovered;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipParams {
    pub p_flip: f64,
    /// Number of bits actually flipped, `round(p_flip * n)`.
    pub k: usize,
}

impl FlipParams {
    pub fn for_length(p_flip: f64, n: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&p_flip) {
            return Err(Error::InvalidProbability {
                name: "p_flip",
                value: p_flip,
                range: "[0, 1)",
            });
        }
        Ok(FlipParams {
            p_flip,
            k: flip_count(p_flip, n),
        })
    }

    /// Realized flip ratio `k / n`.
    pub fn realized_ratio(&self, n: usize) -> f64 {
        self.k as f64 / n as f64
    }
}

/// `round(p_flip * n)`, halves rounded up.
pub fn flip_count(p_flip: f64, n: usize) -> usize {
    ((p_flip * n as f64) + 0.5).floor() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flipped {
    pub flipped: BitString,
    pub flip_positions: Vec<usize>,
    pub params: FlipParams,
}

/// Inverts exactly `round(p_flip * n)` uniformly chosen bits of `key`.
pub fn flip_bits(key: &BitString, p_flip: f64, rng: &mut RngStream) -> Result<Flipped> {
    let params = FlipParams::for_length(p_flip, key.len())?;
    let flip_positions = choose_positions(rng, key.len(), params.k)?;
    let flipped = apply_flips(key, &flip_positions)?;
    Ok(Flipped {
        flipped,
        flip_positions,
        params,
    })
}

/// Inverts `key` at each of `positions`.
pub fn apply_flips(key: &BitString, positions: &[usize]) -> Result<BitString> {
    let mut out = key.clone();
    for &p in positions {
        out.flip(p)?;
    }
    Ok(out)
}

/// Error probability seen after flipping: `p_flip(1-p_error) + (1-p_flip)p_error`.
pub fn forward_error(p_error: f64, p_flip: f64) -> f64 {
    p_flip * (1.0 - p_error) + (1.0 - p_flip) * p_error
}

/// Recovers the pre-flip QBER: `(qber_flip - p_flip) / (1 - 2 p_flip)`.
pub fn invert_qber(qber_flip: f64, p_flip: f64) -> Result<Recovered> {
    let denom = 1.0 - 2.0 * p_flip;
    if denom == 0.0 {
        return Err(Error::UnrecoverableFlipRate(p_flip));
    }
    Ok(Recovered::new((qber_flip - p_flip) / denom))
}
