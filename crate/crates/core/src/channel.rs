//! Binary symmetric channel between Alice's and Bob's sifted keys.

use rand::Rng;

use crate::bits::{BitString, RngStream};
use crate::error::{check_probability, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscChannel {
    qber: f64,
}

/// Bob's key plus the ground-truth error positions of one channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub bob_key: BitString,
    pub flipped_positions: Vec<usize>,
}

impl BscChannel {
    pub fn new(qber: f64) -> Result<Self> {
        check_probability("qber", qber)?;
        Ok(BscChannel { qber })
    }

    pub fn qber(&self) -> f64 {
        self.qber
    }

    /// Flips each bit of `alice_key` independently with probability `qber`.
    pub fn transmit(&self, alice_key: &BitString, rng: &mut RngStream) -> Transmission {
        let mut bob_key = alice_key.clone();
        let mut flipped_positions = Vec::new();
        for i in 0..alice_key.len() {
            if rng.random_bool(self.qber) {
                bob_key.flip(i).expect("index within key");
                flipped_positions.push(i);
            }
        }
        Transmission {
            bob_key,
            flipped_positions,
        }
    }
}
