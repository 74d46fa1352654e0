//! Level-`m` noisy keys.
//!
//! Each sifted bit `key[i]` is hidden among the `m` noise bits of its N-block
//! (`noise[i*m .. (i+1)*m]`) at a secret slot in `0..=m`, giving an NK-block
//! of `m + 1` bits. Bob compares his own bit against every bit of the
//! matching NK-block, which never requires the slot.

use crate::bits::{random_bits, uniform_inclusive, BitString, RngStream};
use crate::error::{Error, Result};
use crate::Recovered;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoisyKey {
    bits: BitString,
    n: usize,
    m: u32,
}

/// Alice's private side of a [`NoisyKey`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrapSecret {
    pub insert_positions: Vec<usize>,
    pub noise: BitString,
}

/// Bob's comparison count against a noisy key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyBer {
    pub error_count: usize,
    pub ber_noisy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyEstimate {
    pub error_count: usize,
    pub ber_noisy: f64,
    pub qber_sifted_raw: f64,
    pub qber_sifted: f64,
}

impl NoisyKey {
    /// Wraps already-built NK-block bits, e.g. from a decoded message.
    pub fn from_parts(bits: BitString, n: usize, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroNoiseLevel);
        }
        let expected = n
            .checked_mul(m as usize + 1)
            .ok_or_else(|| Error::DimensionMismatch(format!("n = {n}, m = {m} overflows")))?;
        if bits.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "noisy key has {} bits, expected n*(m+1) = {expected}",
                bits.len()
            )));
        }
        Ok(NoisyKey { bits, n, m })
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn into_bits(self) -> BitString {
        self.bits
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn block_len(&self) -> usize {
        self.m as usize + 1
    }

    /// NK-block `i`, positions `[i*(m+1), (i+1)*(m+1))`.
    pub fn block(&self, i: usize) -> Result<BitString> {
        let w = self.block_len();
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n,
            });
        }
        self.bits.slice(i * w, (i + 1) * w)
    }

    /// Number of ones in NK-block `i`; `i < n`.
    pub(crate) fn block_ones(&self, i: usize) -> usize {
        let w = self.block_len();
        (i * w..(i + 1) * w).filter(|&j| self.bits.bit(j)).count()
    }
}

/// Builds a level-`m` noisy key around `key`.
///
/// Draws the `n*m` noise bits first, then one uniform slot in `0..=m` per
/// sifted bit.
pub fn wrap(key: &BitString, m: u32, rng: &mut RngStream) -> Result<(NoisyKey, WrapSecret)> {
    if m == 0 {
        return Err(Error::ZeroNoiseLevel);
    }
    if key.is_empty() {
        return Err(Error::EmptyKey);
    }
    let n = key.len();
    let noise = random_bits(rng, n * m as usize);
    let insert_positions: Vec<usize> = (0..n).map(|_| uniform_inclusive(rng, m as usize)).collect();
    let nk = assemble(key, &noise, &insert_positions, m)?;
    Ok((
        nk,
        WrapSecret {
            insert_positions,
            noise,
        },
    ))
}

/// Deterministic core of [`wrap`]: interleave `key` into `noise` at the given slots.
pub fn assemble(
    key: &BitString,
    noise: &BitString,
    insert_positions: &[usize],
    m: u32,
) -> Result<NoisyKey> {
    if m == 0 {
        return Err(Error::ZeroNoiseLevel);
    }
    let n = key.len();
    let m_us = m as usize;
    check_dims(n, m_us, insert_positions, noise)?;
    let bits = (0..n)
        .flat_map(|i| {
            let slot = insert_positions[i];
            (0..=m_us).map(move |j| {
                if j < slot {
                    noise.bit(i * m_us + j)
                } else if j == slot {
                    key.bit(i)
                } else {
                    noise.bit(i * m_us + j - 1)
                }
            })
        })
        .collect();
    Ok(NoisyKey { bits, n, m })
}

fn check_dims(n: usize, m: usize, insert_positions: &[usize], noise: &BitString) -> Result<()> {
    if insert_positions.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} insert positions for {n} key bits",
            insert_positions.len()
        )));
    }
    if let Some(&bad) = insert_positions.iter().find(|&&p| p > m) {
        return Err(Error::DimensionMismatch(format!(
            "insert position {bad} exceeds noise level {m}"
        )));
    }
    if noise.len() != n * m {
        return Err(Error::DimensionMismatch(format!(
            "noise has {} bits, expected n*m = {}",
            noise.len(),
            n * m
        )));
    }
    Ok(())
}

/// Alice-side inverse of [`wrap`]: pulls the embedded key back out.
pub fn unwrap(nk: &NoisyKey, secret: &WrapSecret) -> Result<BitString> {
    check_dims(nk.n, nk.m as usize, &secret.insert_positions, &secret.noise)?;
    let w = nk.block_len();
    Ok(secret
        .insert_positions
        .iter()
        .enumerate()
        .map(|(i, &slot)| nk.bits.bit(i * w + slot))
        .collect())
}

/// The noise bits of `nk` once the embedded bits are removed.
pub fn strip_noise(nk: &NoisyKey, insert_positions: &[usize]) -> Result<BitString> {
    let m = nk.m as usize;
    if insert_positions.len() != nk.n || insert_positions.iter().any(|&p| p > m) {
        return Err(Error::DimensionMismatch(
            "insert positions do not match noisy key".into(),
        ));
    }
    let w = nk.block_len();
    Ok(insert_positions
        .iter()
        .enumerate()
        .flat_map(|(i, &slot)| (0..w).filter(move |&j| j != slot).map(move |j| i * w + j))
        .map(|j| nk.bits.bit(j))
        .collect())
}

/// Bob's mismatch count between each of his bits and every bit of the
/// corresponding NK-block. Uses public data only.
pub fn estimate_ber_noisy(nk: &NoisyKey, bob_key: &BitString) -> Result<NoisyBer> {
    if bob_key.len() != nk.n {
        return Err(Error::LengthMismatch {
            left: bob_key.len(),
            right: nk.n,
        });
    }
    let w = nk.block_len();
    let error_count: usize = (0..nk.n)
        .map(|i| {
            let ones = nk.block_ones(i);
            if bob_key.bit(i) {
                w - ones
            } else {
                ones
            }
        })
        .sum();
    Ok(NoisyBer {
        error_count,
        ber_noisy: error_count as f64 / (nk.n * w) as f64,
    })
}

/// `(m+1)*ber_noisy - m*ber_noise`, raw and clamped to `[0, 1]`.
pub fn recover_qber_sifted(ber_noisy: f64, m: u32, ber_noise: f64) -> Recovered {
    let m = m as f64;
    Recovered::new((m + 1.0) * ber_noisy - m * ber_noise)
}

/// Full single-stage estimate: comparison count plus recovered QBER.
pub fn estimate(nk: &NoisyKey, bob_key: &BitString, ber_noise: f64) -> Result<NoisyEstimate> {
    let NoisyBer {
        error_count,
        ber_noisy,
    } = estimate_ber_noisy(nk, bob_key)?;
    let q = recover_qber_sifted(ber_noisy, nk.m, ber_noise);
    Ok(NoisyEstimate {
        error_count,
        ber_noisy,
        qber_sifted_raw: q.raw,
        qber_sifted: q.clamped,
    })
}

/// Mismatch ratio between each key bit and the `m` bits of its N-block.
///
/// With the embedded key this is Alice's stand-in for `BER_noise`; with
/// Bob's key it is the true `BER_noise` of the decomposition.
pub fn alice_ber_noise_proxy(key: &BitString, noise: &BitString, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::ZeroNoiseLevel);
    }
    let m = m as usize;
    if noise.len() != key.len() * m {
        return Err(Error::LengthMismatch {
            left: noise.len(),
            right: key.len() * m,
        });
    }
    if key.is_empty() {
        return Err(Error::EmptyKey);
    }
    let mismatches = (0..noise.len())
        .filter(|&j| noise.bit(j) != key.bit(j / m))
        .count();
    Ok(mismatches as f64 / noise.len() as f64)
}
