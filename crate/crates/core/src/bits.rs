//! Bit vectors used for messages and codewords. One bit per `u8`, values 0/1.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A user message of `B` bits.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Message(Vec<u8>);

impl Message {
    pub fn from_bits(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Message(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Message(vec![0; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Message((0..len).map(|_| rng.random::<bool>() as u8).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Joins a pattern selector prefix and a payload.
    pub fn join(prefix: &[u8], payload: &[u8]) -> Self {
        let mut bits = Vec::with_capacity(prefix.len() + payload.len());
        bits.extend_from_slice(prefix);
        bits.extend_from_slice(payload);
        Message(bits)
    }
}

impl fmt::Debug for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Message(")?;
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

/// Big-endian integer value of a bit slice.
pub fn to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Big-endian `width`-bit representation of `value`.
pub fn from_index(value: usize, width: usize) -> Vec<u8> {
    (0..width).rev().map(|s| ((value >> s) & 1) as u8).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        assert_eq!(to_index(&[0, 1, 0, 1]), 5);
        assert_eq!(from_index(5, 4), vec![0, 1, 0, 1]);
        assert_eq!(to_index(&[]), 0);
        for v in 0..64 {
            assert_eq!(to_index(&from_index(v, 6)), v);
        }
    }
}
