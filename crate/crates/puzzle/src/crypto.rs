//! Keyed primitives behind the puzzle: the two index-set PRF families and
//! the hint/answer hash functions.
//!
//! Everything is built on SHA-256 with one-byte domain-separation tags, so
//! any two functions see disjoint, prefix-free input encodings:
//!
//! * `hash_h`:  `0x01 ‖ k1 ‖ j (BE32) ‖ n (BE32) ‖ s packed MSB-first`
//! * `hash_a`:  `0x02 ‖ n (BE32) ‖ s packed MSB-first`
//! * `prf_f1`:  `k1 ‖ 0x03 ‖ j (BE32)`
//! * `prf_f2`:  `k2 ‖ 0x04 ‖ i (BE32) ‖ block (BE32)`, 64-bit draws with
//!   rejection sampling before the final `mod N`, which removes modulo bias.
//!
//! Keys and digests are κ/8 bytes; κ is configurable between 160 and 256
//! bits (the output size of the underlying hash) in multiples of 8. All
//! operations are pure, reentrant, and byte-stable across platforms.

use rand::Rng;
use sha2::{Digest as _, Sha256};

use crate::content::BitString;
use crate::error::{Error, Result};

pub const TAG_HINT: u8 = 0x01;
pub const TAG_ANSWER: u8 = 0x02;
pub const TAG_SET_KEY: u8 = 0x03;
pub const TAG_INDEX: u8 = 0x04;

pub const MIN_KAPPA_BITS: u32 = 160;
pub const MAX_KAPPA_BITS: u32 = 256;

/// Checks a security-parameter value: a multiple of 8 in `[160, 256]`.
pub fn validate_kappa(kappa_bits: u32) -> Result<()> {
    if !kappa_bits.is_multiple_of(8) {
        return Err(Error::InvalidParams(format!(
            "kappa must be a multiple of 8, got {kappa_bits}"
        )));
    }
    if !(MIN_KAPPA_BITS..=MAX_KAPPA_BITS).contains(&kappa_bits) {
        return Err(Error::InvalidParams(format!(
            "kappa must be in [{MIN_KAPPA_BITS}, {MAX_KAPPA_BITS}] bits, got {kappa_bits}"
        )));
    }
    Ok(())
}

fn truncated(full: [u8; 32], kappa_bits: u32) -> Vec<u8> {
    full[..(kappa_bits / 8) as usize].to_vec()
}

/// A κ-bit PRF key.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Key(Vec<u8>);

/// A κ-bit hash output.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Digest(Vec<u8>);

macro_rules! octet_string {
    ($ty:ident, $what:literal) => {
        impl $ty {
            pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
                validate_kappa(bytes.len() as u32 * 8)?;
                Ok($ty(bytes))
            }

            pub fn as_bytes(&self) -> &[u8] {
                &self.0
            }

            pub fn kappa_bits(&self) -> u32 {
                self.0.len() as u32 * 8
            }

            pub fn to_hex(&self) -> String {
                self.0.iter().map(|b| format!("{b:02x}")).collect()
            }

            pub fn from_hex(s: &str) -> Result<Self> {
                if s.len() % 2 != 0 {
                    return Err(Error::format($what, "odd hex length"));
                }
                let bytes = (0..s.len() / 2)
                    .map(|i| {
                        u8::from_str_radix(&s[2 * i..2 * i + 2], 16)
                            .map_err(|e| Error::format($what, e.to_string()))
                    })
                    .collect::<Result<Vec<u8>>>()?;
                Self::from_bytes(bytes)
            }
        }

        impl std::fmt::Debug for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, concat!($what, "({})"), self.to_hex())
            }
        }
    };
}

octet_string!(Key, "Key");
octet_string!(Digest, "Digest");

impl Key {
    /// Draws a fresh uniformly random κ-bit key.
    pub fn random(rng: &mut impl Rng, kappa_bits: u32) -> Result<Self> {
        validate_kappa(kappa_bits)?;
        let mut bytes = vec![0u8; (kappa_bits / 8) as usize];
        rng.fill(&mut bytes[..]);
        Ok(Key(bytes))
    }
}

impl Digest {
    /// The all-zero digest, used as the "unsolved" sentinel on the wire.
    pub fn zero(kappa_bits: u32) -> Result<Self> {
        validate_kappa(kappa_bits)?;
        Ok(Digest(vec![0u8; (kappa_bits / 8) as usize]))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }
}

/// Family f1: derives the per-set PRF key for set ordinal `j` (1-based).
///
/// The output key inherits the κ of `k1`.
pub fn prf_f1(k1: &Key, j: u32) -> Result<Key> {
    if j == 0 {
        return Err(Error::OneBased {
            what: "set ordinal",
        });
    }
    let mut h = Sha256::new();
    h.update(k1.as_bytes());
    h.update([TAG_SET_KEY]);
    h.update(j.to_be_bytes());
    Ok(Key(truncated(h.finalize().into(), k1.kappa_bits())))
}

/// Family f2: the 1-based position `i`'s content index, uniform over
/// `[0, content_bits)`.
pub fn prf_f2(k2: &Key, i: u32, content_bits: u64) -> Result<u64> {
    if i == 0 {
        return Err(Error::OneBased {
            what: "index position",
        });
    }
    if content_bits == 0 {
        return Err(Error::InvalidParams("content has zero bits".into()));
    }
    // Accept x only below the largest multiple of N that fits in 64 bits.
    let remainder = ((u64::MAX % content_bits) + 1) % content_bits;
    let mut block = 0u32;
    loop {
        let mut h = Sha256::new();
        h.update(k2.as_bytes());
        h.update([TAG_INDEX]);
        h.update(i.to_be_bytes());
        h.update(block.to_be_bytes());
        let out: [u8; 32] = h.finalize().into();
        for chunk in out.chunks_exact(8) {
            let x = u64::from_be_bytes(chunk.try_into().unwrap());
            if remainder == 0 || x <= u64::MAX - remainder {
                return Ok(x % content_bits);
            }
        }
        block = block
            .checked_add(1)
            .expect("rejection sampling exhausted the counter space");
    }
}

/// The hint hash `H(k1, j, s)`, binding the digest to the key, the set
/// ordinal, and the true string jointly.
pub fn hash_h(k1: &Key, j: u32, s: &BitString) -> Result<Digest> {
    if j == 0 {
        return Err(Error::OneBased {
            what: "set ordinal",
        });
    }
    let mut h = Sha256::new();
    h.update([TAG_HINT]);
    h.update(k1.as_bytes());
    h.update(j.to_be_bytes());
    h.update((s.len_bits() as u32).to_be_bytes());
    h.update(s.as_bytes());
    Ok(Digest(truncated(h.finalize().into(), k1.kappa_bits())))
}

/// The answer hash `A(s)`, a plain collision-resistant digest of the true
/// string, used to keep responses κ bits instead of n.
pub fn hash_a(s: &BitString, kappa_bits: u32) -> Result<Digest> {
    validate_kappa(kappa_bits)?;
    let mut h = Sha256::new();
    h.update([TAG_ANSWER]);
    h.update((s.len_bits() as u32).to_be_bytes());
    h.update(s.as_bytes());
    Ok(Digest(truncated(h.finalize().into(), kappa_bits)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn zero_key() -> Key {
        Key::from_bytes(vec![0u8; 32]).unwrap()
    }

    #[test]
    fn kappa_validation() {
        assert!(validate_kappa(256).is_ok());
        assert!(validate_kappa(160).is_ok());
        assert!(validate_kappa(152).is_err());
        assert!(validate_kappa(264).is_err());
        assert!(validate_kappa(161).is_err());
        assert!(Key::from_bytes(vec![0u8; 19]).is_err());
    }

    #[test]
    fn f1_deterministic_and_separated() {
        let k = zero_key();
        assert_eq!(prf_f1(&k, 1).unwrap(), prf_f1(&k, 1).unwrap());
        assert_ne!(prf_f1(&k, 1).unwrap(), prf_f1(&k, 2).unwrap());
        assert!(matches!(prf_f1(&k, 0), Err(Error::OneBased { .. })));
    }

    #[test]
    fn f1_respects_kappa() {
        let k = Key::from_bytes(vec![7u8; 20]).unwrap();
        let derived = prf_f1(&k, 3).unwrap();
        assert_eq!(derived.kappa_bits(), 160);
    }

    #[test]
    fn f2_deterministic_and_in_range() {
        let k2 = prf_f1(&zero_key(), 1).unwrap();
        assert_eq!(prf_f2(&k2, 5, 1000).unwrap(), prf_f2(&k2, 5, 1000).unwrap());
        assert!(matches!(prf_f2(&k2, 0, 10), Err(Error::OneBased { .. })));
        assert!(prf_f2(&k2, 1, 0).is_err());
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..200 {
            let k = Key::random(&mut rng, 256).unwrap();
            let n = rng.gen_range(1..=1u64 << 40);
            let i = rng.gen_range(1..=1000u32);
            assert!(prf_f2(&k, i, n).unwrap() < n);
        }
    }

    #[test]
    fn f2_single_element_range() {
        let k2 = prf_f1(&zero_key(), 2).unwrap();
        for i in 1..=32 {
            assert_eq!(prf_f2(&k2, i, 1).unwrap(), 0);
        }
    }

    #[test]
    fn f2_frequencies_near_uniform() {
        // 1e5 draws over 8 cells: per-cell sigma = sqrt(1e5 * 1/8 * 7/8).
        let k2 = prf_f1(&zero_key(), 1).unwrap();
        let draws = 100_000u32;
        let mut counts = [0u64; 8];
        for i in 1..=draws {
            counts[prf_f2(&k2, i, 8).unwrap() as usize] += 1;
        }
        let mean = draws as f64 / 8.0;
        let sigma = (draws as f64 * (1.0 / 8.0) * (7.0 / 8.0)).sqrt();
        for (cell, &c) in counts.iter().enumerate() {
            let dev = (c as f64 - mean).abs();
            assert!(
                dev <= 5.0 * sigma,
                "cell {cell}: count {c} deviates {dev:.1} (> 5 sigma = {:.1})",
                5.0 * sigma
            );
        }
    }

    #[test]
    fn hash_h_binds_all_inputs() {
        let k = zero_key();
        let s = BitString::from_bit_str("10110100").unwrap();
        let base = hash_h(&k, 1, &s).unwrap();
        assert_eq!(base, hash_h(&k, 1, &s).unwrap());

        let mut flipped = s.clone();
        flipped.set(4, true);
        assert_ne!(base, hash_h(&k, 1, &flipped).unwrap());
        assert_ne!(base, hash_h(&k, 2, &s).unwrap());

        let other_key = Key::from_bytes(vec![1u8; 32]).unwrap();
        assert_ne!(base, hash_h(&other_key, 1, &s).unwrap());
    }

    #[test]
    fn hash_a_is_domain_separated_from_hash_h() {
        let k = zero_key();
        let s = BitString::from_bit_str("10110100").unwrap();
        let a = hash_a(&s, 256).unwrap();
        assert_eq!(a, hash_a(&s, 256).unwrap());
        assert_ne!(a, hash_h(&k, 1, &s).unwrap());
    }

    #[test]
    fn digest_zero_sentinel() {
        let z = Digest::zero(256).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.as_bytes().len(), 32);
        let s = BitString::zeros(16);
        assert!(!hash_a(&s, 256).unwrap().is_zero());
    }

    #[test]
    fn hex_roundtrip() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let k = Key::random(&mut rng, 200).unwrap();
        assert_eq!(Key::from_hex(&k.to_hex()).unwrap(), k);
        assert!(Digest::from_hex("0g").is_err());
    }
}
