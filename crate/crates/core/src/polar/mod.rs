//! CRC-aided polar coding.
//!
//! Bit-channel reliabilities follow the 5G NR polar sequence restricted to the
//! block length. The transform is `x = u · F^{⊗m}` with `F = [[1, 0], [1, 1]]`
//! and no bit-reversal permutation. Decoder inputs are LLRs with positive
//! values favouring bit 0, matching the BPSK map `0 → +√P`, `1 → −√P`.

mod crc;
mod scl;
mod sequence;

pub use crc::Crc;
pub use scl::SclDecoder;

use crate::error::{Error, Result};
use sequence::NR_POLAR_SEQUENCE;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolarCode {
    len: usize,
    /// Information length including CRC.
    k: usize,
    frozen: Vec<bool>,
    frozen_set: Vec<usize>,
    info_positions: Vec<usize>,
    crc: Crc,
}

/// Bit-channel indices below `len` in ascending reliability.
pub fn reliability_order(len: usize) -> Vec<usize> {
    NR_POLAR_SEQUENCE
        .iter()
        .map(|&i| i as usize)
        .filter(|&i| i < len)
        .collect()
}

impl PolarCode {
    /// Freezes the `len - k` least reliable bit channels.
    pub fn construct(len: usize, k: usize, crc: Crc) -> Result<Self> {
        if !len.is_power_of_two() || len > NR_POLAR_SEQUENCE.len() {
            return Err(Error::InvalidCode(format!(
                "block length {len} must be a power of two not above 1024"
            )));
        }
        if k > len {
            return Err(Error::InvalidCode(format!("k = {k} exceeds block length {len}")));
        }
        if k < crc.width() {
            return Err(Error::InvalidCode(format!(
                "k = {k} cannot hold a {}-bit CRC",
                crc.width()
            )));
        }
        let order = reliability_order(len);
        let mut frozen = vec![false; len];
        for &i in &order[..len - k] {
            frozen[i] = true;
        }
        let frozen_set: Vec<usize> = (0..len).filter(|&i| frozen[i]).collect();
        let info_positions: Vec<usize> = (0..len).filter(|&i| !frozen[i]).collect();
        Ok(PolarCode {
            len,
            k,
            frozen,
            frozen_set,
            info_positions,
            crc,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Payload bits carried in front of the CRC.
    pub fn payload_len(&self) -> usize {
        self.k - self.crc.width()
    }

    pub fn crc(&self) -> Crc {
        self.crc
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen_set
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn frozen_set_json(&self) -> String {
        serde_json::to_string(&self.frozen_set).expect("index list serializes")
    }

    pub fn crc_append(&self, payload: &[u8]) -> Vec<u8> {
        assert_eq!(payload.len(), self.payload_len(), "payload length");
        self.crc.append(payload)
    }

    /// Places `info` (length `k`) on the information positions and applies
    /// the polar transform.
    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        assert_eq!(info.len(), self.k, "information length");
        let mut x = vec![0u8; self.len];
        for (&pos, &bit) in self.info_positions.iter().zip(info) {
            x[pos] = bit;
        }
        polar_transform(&mut x);
        x
    }

    /// `encode(crc_append(payload))`.
    pub fn encode_payload(&self, payload: &[u8]) -> Vec<u8> {
        self.encode(&self.crc_append(payload))
    }
}

/// In-place `x ← x · F^{⊗m}`; the transform is an involution.
pub fn polar_transform(x: &mut [u8]) {
    let n = x.len();
    let mut half = 1;
    while half < n {
        for block in x.chunks_mut(2 * half) {
            let (a, b) = block.split_at_mut(half);
            for (ai, bi) in a.iter_mut().zip(b.iter()) {
                *ai ^= *bi;
            }
        }
        half *= 2;
    }
}
