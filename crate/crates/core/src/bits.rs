//! Packed bit strings, seeded random streams and the Hamming primitives
//! everything else is built on.
//!
//! Bit `i` of a [`BitString`] lives in byte `i / 8`, most-significant bit
//! first. Padding bits in the final byte are always zero, so byte-wise
//! comparisons and popcounts are exact.
//!
//! Randomness comes from [`RngStream`], a ChaCha12 generator keyed by a
//! 64-bit master seed and a 64-bit stream id. It is meant for reproducible
//! simulation and is **not** a source of key material.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            bytes: vec![0; len.div_ceil(8)],
            len,
        }
    }

    /// Builds from packed MSB-first bytes. Fails if `bytes` does not hold
    /// exactly `len` bits or if padding bits are set.
    pub fn from_bytes(bytes: Vec<u8>, len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::LengthMismatch {
                left: bytes.len(),
                right: len.div_ceil(8),
            });
        }
        let s = BitString { bytes, len };
        if s.padding_mask() & s.bytes.last().copied().unwrap_or(0) != 0 {
            return Err(Error::KeyFormat("non-zero padding bits".into()));
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, index: usize) -> Result<bool> {
        if index >= self.len {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len,
            });
        }
        Ok(self.bit(index))
    }

    pub fn set(&mut self, index: usize, value: bool) -> Result<()> {
        if index >= self.len {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len,
            });
        }
        self.put(index, value);
        Ok(())
    }

    pub fn flip(&mut self, index: usize) -> Result<()> {
        if index >= self.len {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len,
            });
        }
        self.bytes[index / 8] ^= 0x80 >> (index % 8);
        Ok(())
    }

    // Callers guarantee index < len.
    #[inline]
    pub(crate) fn bit(&self, index: usize) -> bool {
        debug_assert!(index < self.len);
        self.bytes[index / 8] & (0x80 >> (index % 8)) != 0
    }

    #[inline]
    fn put(&mut self, index: usize, value: bool) {
        let mask = 0x80 >> (index % 8);
        if value {
            self.bytes[index / 8] |= mask;
        } else {
            self.bytes[index / 8] &= !mask;
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Copy of the bits in `range`.
    pub fn slice(&self, start: usize, end: usize) -> Result<BitString> {
        if start > end || end > self.len {
            return Err(Error::IndexOutOfRange {
                index: end,
                len: self.len,
            });
        }
        Ok((start..end).map(|i| self.bit(i)).collect())
    }

    fn padding_mask(&self) -> u8 {
        match self.len % 8 {
            0 => 0,
            used => 0xFF >> used,
        }
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut s = BitString::default();
        for bit in iter {
            if s.len % 8 == 0 {
                s.bytes.push(0);
            }
            s.len += 1;
            s.put(s.len - 1, bit);
        }
        s
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Parses a string of `'0'`/`'1'` characters.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::KeyFormat(format!(
                    "unexpected character {other:?} at position {i}"
                ))),
            })
            .collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}; \"{}\")", self.len, self)
    }
}

/// Reads a key file: `'0'`/`'1'` characters with an optional trailing newline.
pub fn read_key_file(path: impl AsRef<Path>) -> Result<BitString> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let body = text
        .strip_suffix("\r\n")
        .or_else(|| text.strip_suffix('\n'))
        .unwrap_or(&text);
    body.parse().map_err(|e| match e {
        Error::KeyFormat(msg) => Error::KeyFormat(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_key_file(path: impl AsRef<Path>, key: &BitString) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format!("{key}\n")).map_err(|e| Error::io(path, e))
}

/// A deterministic random stream identified by `(master_seed, stream_id)`.
///
/// Backed by ChaCha12: the master seed is expanded to a 256-bit key with
/// `SeedableRng::seed_from_u64` and `stream_id` selects the ChaCha stream,
/// so distinct ids give independent sequences under the same seed. Not
/// cryptographically appropriate for real key generation.
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        RngStream {
            master_seed,
            stream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Position in the underlying keystream, in 32-bit words.
    pub fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

impl fmt::Debug for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RngStream")
            .field("master_seed", &self.master_seed)
            .field("stream_id", &self.stream_id)
            .field("word_pos", &self.word_pos())
            .finish()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// `n` independent fair bits.
pub fn random_bits(rng: &mut RngStream, n: usize) -> BitString {
    let mut bytes = vec![0u8; n.div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    if n % 8 != 0 {
        if let Some(last) = bytes.last_mut() {
            *last &= !(0xFF >> (n % 8));
        }
    }
    BitString { bytes, len: n }
}

/// Number of positions where `a` and `b` differ.
pub fn hamming(a: &BitString, b: &BitString) -> Result<usize> {
    if a.len != b.len {
        return Err(Error::LengthMismatch {
            left: a.len,
            right: b.len,
        });
    }
    Ok(a.bytes
        .iter()
        .zip(&b.bytes)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

/// Uniformly random `k`-subset of `0..n`, ascending.
pub fn choose_positions(rng: &mut RngStream, n: usize, k: usize) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::SubsetTooLarge { k, n });
    }
    let mut picked = index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Uniform draw from `0..=upper`.
pub(crate) fn uniform_inclusive(rng: &mut RngStream, upper: usize) -> usize {
    rng.random_range(0..=upper)
}
