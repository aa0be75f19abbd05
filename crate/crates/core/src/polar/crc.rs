//! Bitwise CRC over 0/1 bit slices, MSB-first, zero initial value and zero
//! final xor. A zero-init CRC of a message followed by its checksum is zero.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crc {
    width: usize,
    /// Generator polynomial without the leading `x^width` term.
    poly: u32,
}

impl Crc {
    /// CRC-16 with the CCITT polynomial `x^16 + x^12 + x^5 + 1`.
    pub const CCITT16: Crc = Crc {
        width: 16,
        poly: 0x1021,
    };
    /// 5G NR CRC6.
    pub const NR6: Crc = Crc { width: 6, poly: 0x21 };
    /// 5G NR CRC11.
    pub const NR11: Crc = Crc { width: 11, poly: 0x621 };
    /// 5G NR CRC24C.
    pub const NR24C: Crc = Crc {
        width: 24,
        poly: 0xB2_B117,
    };

    /// Custom generator; `poly` omits the leading `x^width` term.
    pub fn new(width: usize, poly: u32) -> Crc {
        assert!((1..=32).contains(&width), "CRC width must be in 1..=32");
        Crc { width, poly }
    }

    pub fn for_length(width: usize) -> Result<Crc> {
        match width {
            6 => Ok(Crc::NR6),
            11 => Ok(Crc::NR11),
            16 => Ok(Crc::CCITT16),
            24 => Ok(Crc::NR24C),
            w => Err(Error::InvalidCode(format!("no CRC polynomial for length {w}"))),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Register value after shifting in `bits`.
    pub fn checksum(&self, bits: &[u8]) -> u32 {
        let top = 1u32 << (self.width - 1);
        let mask = if self.width == 32 {
            u32::MAX
        } else {
            (1u32 << self.width) - 1
        };
        let mut reg = 0u32;
        for &b in bits {
            let feedback = ((reg & top) != 0) as u32 ^ (b as u32 & 1);
            reg = (reg << 1) & mask;
            if feedback != 0 {
                reg ^= self.poly;
            }
        }
        reg
    }

    /// `msg ‖ crc(msg)`.
    pub fn append(&self, msg: &[u8]) -> Vec<u8> {
        let c = self.checksum(msg);
        let mut out = Vec::with_capacity(msg.len() + self.width);
        out.extend_from_slice(msg);
        out.extend((0..self.width).rev().map(|s| ((c >> s) & 1) as u8));
        out
    }

    pub fn check(&self, bits: &[u8]) -> bool {
        bits.len() >= self.width && self.checksum(bits) == 0
    }
}
