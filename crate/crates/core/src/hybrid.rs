//! Flip-then-wrap estimator and the message Alice sends to Bob.
//!
//! Alice flips `k = round(p_flip * n)` random bits of her sifted key, wraps
//! the result in level-`m` noise and sends the noisy key. Bob recovers
//! `QBER_flip` from the noisy-key comparison, then undoes the flipping using
//! the realized ratio `k / n`.
//!
//! # Wire format
//!
//! All integers are unsigned little-endian.
//!
//! | field            | size | notes                                  |
//! |------------------|------|----------------------------------------|
//! | magic            | 4    | `b"NKY1"`                              |
//! | version          | 1    | `1`                                    |
//! | n                | 4    | sifted key length                      |
//! | m                | 2    | noise level                            |
//! | flip_count       | 4    | `k`                                    |
//! | ber_noise_ppm    | 4    | `0xFFFF_FFFF` when absent              |
//! | payload_bit_len  | 4    | must equal `n * (m + 1)`               |
//! | payload          | ⌈len/8⌉ | MSB-first, zero padded             |

use serde::{Deserialize, Serialize};

use crate::adversary::p_leaked;
use crate::bit_flip::{flip_bits, invert_qber};
use crate::bits::{BitString, RngStream};
use crate::error::{Error, Result};
use crate::noisy_key::{alice_ber_noise_proxy, estimate_ber_noisy, wrap, NoisyKey, WrapSecret};

pub const MAGIC: [u8; 4] = *b"NKY1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 23;
const PPM_ABSENT: u32 = u32::MAX;

/// Which value Bob plugs in for `BER_noise`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BerNoiseMode {
    /// Alice measures her embedded key against the noise and sends the ratio.
    AliceProxy,
    /// Fixed 1/2.
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridParams {
    pub m: u32,
    pub p_flip: f64,
    pub mode: BerNoiseMode,
    /// Require `p_flip > 2^-m`.
    pub strict_security: bool,
}

impl HybridParams {
    pub fn new(m: u32, p_flip: f64, mode: BerNoiseMode) -> Self {
        HybridParams {
            m,
            p_flip,
            mode,
            strict_security: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::ZeroNoiseLevel);
        }
        if self.m > u16::MAX as u32 {
            return Err(Error::Config(format!("noise level {} exceeds u16", self.m)));
        }
        if !(0.0..0.5).contains(&self.p_flip) {
            return Err(Error::InvalidProbability {
                name: "p_flip",
                value: self.p_flip,
                range: "[0, 0.5)",
            });
        }
        if self.strict_security {
            let leaked = p_leaked(self.m);
            if self.p_flip <= leaked {
                return Err(Error::SecurityViolation {
                    p_flip: self.p_flip,
                    p_leaked: leaked,
                    m: self.m,
                });
            }
        }
        Ok(())
    }
}

/// The noisy flipped key plus its public header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoisyKeyMessage {
    n: u32,
    m: u16,
    flip_count: u32,
    ber_noise_ppm: Option<u32>,
    payload: BitString,
}

impl NoisyKeyMessage {
    pub fn new(
        n: usize,
        m: u32,
        flip_count: usize,
        ber_noise_ppm: Option<u32>,
        payload: BitString,
    ) -> Result<Self> {
        let n32 = u32::try_from(n)
            .map_err(|_| Error::InconsistentLength(format!("n = {n} does not fit u32")))?;
        let m16 = u16::try_from(m)
            .map_err(|_| Error::InconsistentLength(format!("m = {m} does not fit u16")))?;
        if m == 0 {
            return Err(Error::InconsistentLength("noise level 0".into()));
        }
        if flip_count > n {
            return Err(Error::InconsistentLength(format!(
                "flip_count {flip_count} exceeds n = {n}"
            )));
        }
        if let Some(ppm) = ber_noise_ppm {
            if ppm > 1_000_000 {
                return Err(Error::InconsistentLength(format!(
                    "ber_noise_ppm {ppm} exceeds 1000000"
                )));
            }
        }
        let expected = n as u64 * (m as u64 + 1);
        if expected > u32::MAX as u64 || payload.len() as u64 != expected {
            return Err(Error::InconsistentLength(format!(
                "payload has {} bits, expected n*(m+1) = {expected}",
                payload.len()
            )));
        }
        Ok(NoisyKeyMessage {
            n: n32,
            m: m16,
            flip_count: flip_count as u32,
            ber_noise_ppm,
            payload,
        })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn m(&self) -> u32 {
        self.m as u32
    }

    pub fn flip_count(&self) -> usize {
        self.flip_count as usize
    }

    pub fn ber_noise_ppm(&self) -> Option<u32> {
        self.ber_noise_ppm
    }

    pub fn payload(&self) -> &BitString {
        &self.payload
    }

    pub fn payload_bits(&self) -> usize {
        self.payload.len()
    }

    pub fn noisy_key(&self) -> NoisyKey {
        NoisyKey::from_parts(self.payload.clone(), self.n(), self.m())
            .expect("message dimensions validated on construction")
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.as_bytes().len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.extend_from_slice(&self.flip_count.to_le_bytes());
        out.extend_from_slice(&self.ber_noise_ppm.unwrap_or(PPM_ABSENT).to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(self.payload.as_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let need = |needed: usize| {
            if bytes.len() < needed {
                Err(Error::Truncated {
                    needed,
                    have: bytes.len(),
                })
            } else {
                Ok(())
            }
        };
        need(4)?;
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic(magic));
        }
        need(5)?;
        if bytes[4] != VERSION {
            return Err(Error::UnsupportedVersion(bytes[4]));
        }
        need(HEADER_LEN)?;
        let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let n = u32_at(5);
        let m = u16::from_le_bytes([bytes[9], bytes[10]]);
        let flip_count = u32_at(11);
        let ppm = u32_at(15);
        let payload_bit_len = u32_at(19);

        let expected = n as u64 * (m as u64 + 1);
        if payload_bit_len as u64 != expected {
            return Err(Error::InconsistentLength(format!(
                "payload_bit_len {payload_bit_len} but n*(m+1) = {expected}"
            )));
        }
        let payload_bytes = (payload_bit_len as usize).div_ceil(8);
        need(HEADER_LEN + payload_bytes)?;
        if bytes.len() > HEADER_LEN + payload_bytes {
            return Err(Error::InconsistentLength(format!(
                "{} trailing bytes after payload",
                bytes.len() - HEADER_LEN - payload_bytes
            )));
        }
        let payload = BitString::from_bytes(
            bytes[HEADER_LEN..].to_vec(),
            payload_bit_len as usize,
        )
        .map_err(|_| Error::InconsistentLength("non-zero payload padding".into()))?;
        let ppm = (ppm != PPM_ABSENT).then_some(ppm);
        NoisyKeyMessage::new(n as usize, m as u32, flip_count as usize, ppm, payload)
    }
}

/// Everything Alice produces: the public message and what she keeps.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub message: NoisyKeyMessage,
    pub secret: WrapSecret,
    pub flip_positions: Vec<usize>,
    /// The flipped key that sits inside the noisy key.
    pub embedded_key: BitString,
}

/// Flip, wrap and package `key` for transmission.
pub fn alice_prepare(key: &BitString, params: &HybridParams, rng: &mut RngStream) -> Result<Prepared> {
    params.validate()?;
    if key.is_empty() {
        return Err(Error::EmptyKey);
    }
    let flipped = flip_bits(key, params.p_flip, rng)?;
    let (nk, secret) = wrap(&flipped.flipped, params.m, rng)?;
    let ppm = match params.mode {
        BerNoiseMode::AliceProxy => {
            let proxy = alice_ber_noise_proxy(&flipped.flipped, &secret.noise, params.m)?;
            Some((proxy * 1e6).round() as u32)
        }
        BerNoiseMode::Half => None,
    };
    let message = NoisyKeyMessage::new(
        key.len(),
        params.m,
        flipped.params.k,
        ppm,
        nk.into_bits(),
    )?;
    Ok(Prepared {
        message,
        secret,
        flip_positions: flipped.flip_positions,
        embedded_key: flipped.flipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationOutcome {
    pub ber_noisy: f64,
    pub qber_flip_raw: f64,
    pub qber_flip: f64,
    pub qber_raw: f64,
    pub qber_est: f64,
}

/// Bob's side: noisy-key comparison, then flip inversion with `k / n`.
///
/// `mode_override` picks the `BER_noise` source; by default the proxy is used
/// when the message carries one and 1/2 otherwise.
pub fn bob_estimate(
    msg: &NoisyKeyMessage,
    bob_key: &BitString,
    mode_override: Option<BerNoiseMode>,
) -> Result<EstimationOutcome> {
    let ber_noise = match (mode_override, msg.ber_noise_ppm) {
        (Some(BerNoiseMode::Half), _) | (None, None) => 0.5,
        (Some(BerNoiseMode::AliceProxy), None) => return Err(Error::MissingNoiseProxy),
        (_, Some(ppm)) => ppm as f64 / 1e6,
    };
    estimate_with_ber_noise(msg, bob_key, ber_noise)
}

/// [`bob_estimate`] with an explicit `BER_noise` value.
pub fn estimate_with_ber_noise(
    msg: &NoisyKeyMessage,
    bob_key: &BitString,
    ber_noise: f64,
) -> Result<EstimationOutcome> {
    if bob_key.len() != msg.n() {
        return Err(Error::LengthMismatch {
            left: bob_key.len(),
            right: msg.n(),
        });
    }
    let nk = msg.noisy_key();
    let ber_noisy = estimate_ber_noisy(&nk, bob_key)?.ber_noisy;
    let m = msg.m() as f64;
    let qber_flip_raw = (m + 1.0) * ber_noisy - m * ber_noise;
    let realized = msg.flip_count() as f64 / msg.n() as f64;
    // The unclamped flip estimate goes into the inversion.
    let q = invert_qber(qber_flip_raw, realized)?;
    Ok(EstimationOutcome {
        ber_noisy,
        qber_flip_raw,
        qber_flip: qber_flip_raw.clamp(0.0, 1.0),
        qber_raw: q.raw,
        qber_est: q.clamped,
    })
}
