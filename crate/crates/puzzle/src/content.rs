//! Bit-addressable byte strings: challenged content and the true strings
//! read from it.
//!
//! Bits are packed eight per byte, MSB-first within a byte, so bit `i`
//! lives at `bytes[i / 8] >> (7 - i % 8) & 1`. All serialized bit strings
//! use this convention; trailing pad bits of the last byte are zero.

use rand::Rng;

use crate::error::{Error, Result};

/// A packed bit string of known length.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitString {
    pub fn zeros(bit_len: u64) -> Self {
        BitString {
            bytes: vec![0u8; Self::byte_len(bit_len)],
            bit_len,
        }
    }

    /// Wraps packed bytes. The byte count must be `ceil(bit_len / 8)`;
    /// pad bits in the last byte are forced to zero so equal strings
    /// compare equal bytewise.
    pub fn from_bytes(mut bytes: Vec<u8>, bit_len: u64) -> Result<Self> {
        if bytes.len() != Self::byte_len(bit_len) {
            return Err(Error::format(
                "bit string",
                format!(
                    "{} bits need {} bytes, got {}",
                    bit_len,
                    Self::byte_len(bit_len),
                    bytes.len()
                ),
            ));
        }
        let tail = (bit_len % 8) as u32;
        if tail != 0 {
            if let Some(last) = bytes.last_mut() {
                *last &= 0xffu8 << (8 - tail);
            }
        }
        Ok(BitString { bytes, bit_len })
    }

    /// Parses a string of '0'/'1' characters. Handy for fixed vectors.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let mut out = Self::zeros(s.len() as u64);
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => out.set(i as u64, true),
                other => {
                    return Err(Error::format(
                        "bit string",
                        format!("unexpected character {other:?}"),
                    ))
                }
            }
        }
        Ok(out)
    }

    pub fn random(rng: &mut impl Rng, bit_len: u64) -> Self {
        let mut bytes = vec![0u8; Self::byte_len(bit_len)];
        rng.fill(&mut bytes[..]);
        let tail = (bit_len % 8) as u32;
        if tail != 0 {
            if let Some(last) = bytes.last_mut() {
                *last &= 0xffu8 << (8 - tail);
            }
        }
        BitString { bytes, bit_len }
    }

    fn byte_len(bit_len: u64) -> usize {
        bit_len.div_ceil(8) as usize
    }

    pub fn len_bits(&self) -> u64 {
        self.bit_len
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, idx: u64) -> Option<bool> {
        if idx >= self.bit_len {
            return None;
        }
        let byte = self.bytes[(idx / 8) as usize];
        Some((byte >> (7 - idx % 8)) & 1 == 1)
    }

    pub fn set(&mut self, idx: u64, value: bool) {
        assert!(idx < self.bit_len, "bit index out of range");
        let mask = 1u8 << (7 - idx % 8);
        let byte = &mut self.bytes[(idx / 8) as usize];
        if value {
            *byte |= mask;
        } else {
            *byte &= !mask;
        }
    }
}

impl std::fmt::Debug for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitString({} bits, ", self.bit_len)?;
        let shown = self.bit_len.min(64);
        for i in 0..shown {
            write!(f, "{}", u8::from(self.get(i).unwrap()))?;
        }
        if shown < self.bit_len {
            write!(f, "…")?;
        }
        write!(f, ")")
    }
}

/// The challenged content: `N` bits addressed by 0-based index.
#[derive(Clone, PartialEq, Eq)]
pub struct Content {
    bits: BitString,
}

impl Content {
    pub fn new(bits: BitString) -> Self {
        Content { bits }
    }

    /// Loads content from raw packed bytes, `bit_len` taken from the
    /// puzzle parameters.
    pub fn from_bytes(bytes: Vec<u8>, bit_len: u64) -> Result<Self> {
        Ok(Content {
            bits: BitString::from_bytes(bytes, bit_len)?,
        })
    }

    pub fn random(rng: &mut impl Rng, bit_len: u64) -> Self {
        Content {
            bits: BitString::random(rng, bit_len),
        }
    }

    pub fn len_bits(&self) -> u64 {
        self.bits.len_bits()
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.bits.as_bytes()
    }

    pub fn bit(&self, index: u64) -> Result<bool> {
        self.bits.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.bits.len_bits(),
        })
    }
}

impl std::fmt::Debug for Content {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Content({} bits)", self.bits.len_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn msb_first_packing() {
        // 0x35 = 0b00110101
        let c = Content::from_bytes(vec![0x35], 8).unwrap();
        let expect = [false, false, true, true, false, true, false, true];
        for (i, &b) in expect.iter().enumerate() {
            assert_eq!(c.bit(i as u64).unwrap(), b, "bit {i}");
        }
    }

    #[test]
    fn out_of_range_bit_is_an_error() {
        let c = Content::from_bytes(vec![0x35], 8).unwrap();
        assert!(matches!(
            c.bit(8),
            Err(Error::IndexOutOfRange { index: 8, len: 8 })
        ));
    }

    #[test]
    fn byte_length_must_match() {
        assert!(Content::from_bytes(vec![0u8; 2], 8).is_err());
        assert!(Content::from_bytes(vec![0u8; 1], 9).is_err());
        assert!(Content::from_bytes(vec![0u8; 2], 9).is_ok());
    }

    #[test]
    fn pad_bits_are_masked() {
        let b = BitString::from_bytes(vec![0xff], 5).unwrap();
        assert_eq!(b.as_bytes(), &[0b1111_1000]);
        assert_eq!(b.len_bits(), 5);
    }

    #[test]
    fn from_bit_str_roundtrip() {
        let b = BitString::from_bit_str("1110").unwrap();
        assert_eq!(b.len_bits(), 4);
        assert_eq!(b.as_bytes(), &[0b1110_0000]);
        assert!(BitString::from_bit_str("10x1").is_err());
    }

    #[test]
    fn random_is_seed_deterministic_and_pad_clean() {
        let a = BitString::random(&mut ChaCha20Rng::seed_from_u64(9), 13);
        let b = BitString::random(&mut ChaCha20Rng::seed_from_u64(9), 13);
        assert_eq!(a, b);
        assert_eq!(a.as_bytes()[1] & 0b0000_0111, 0);
    }

    #[test]
    fn set_then_get() {
        let mut b = BitString::zeros(17);
        b.set(0, true);
        b.set(16, true);
        b.set(9, true);
        b.set(9, false);
        assert_eq!(b.get(0), Some(true));
        assert_eq!(b.get(9), Some(false));
        assert_eq!(b.get(16), Some(true));
        assert_eq!(b.get(17), None);
    }
}
