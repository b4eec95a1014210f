//! Puzzle construction: parameters, index-set expansion, generation,
//! honest solving, and answer verification.
//!
//! A puzzle is just a key and a hint. Index sets are regenerated from the
//! key on demand, so nothing but the key and the κ-bit hint ever needs to
//! be stored or transmitted.

use rand::Rng;

use crate::content::{BitString, Content};
use crate::crypto::{self, Digest, Key};
use crate::error::{Error, Result};

/// The public parameter tuple `(N, n, L, m, θ, κ)` defining a puzzle family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PuzzleParams {
    /// N: content size in bits.
    pub content_bits: u64,
    /// n: indices per index set.
    pub indices_per_set: u32,
    /// L: index sets per puzzle.
    pub sets_per_puzzle: u32,
    /// m: puzzles per challenge.
    pub puzzles_per_challenge: u32,
    /// θ: solving threshold in milliseconds.
    pub theta_ms: u64,
    /// κ: security parameter in bits.
    pub kappa_bits: u32,
}

pub const PARAMS_ENCODED_LEN: usize = 48;
pub const PUZZLE_FORMAT_VERSION: u8 = 1;

impl PuzzleParams {
    pub fn validate(&self) -> Result<()> {
        if self.content_bits == 0 {
            return Err(Error::InvalidParams("content_bits must be >= 1".into()));
        }
        if self.indices_per_set == 0 {
            return Err(Error::InvalidParams("indices_per_set must be >= 1".into()));
        }
        if self.sets_per_puzzle == 0 {
            return Err(Error::InvalidParams("sets_per_puzzle must be >= 1".into()));
        }
        if self.puzzles_per_challenge == 0 {
            return Err(Error::InvalidParams(
                "puzzles_per_challenge must be >= 1".into(),
            ));
        }
        if self.theta_ms == 0 {
            return Err(Error::InvalidParams("theta_ms must be positive".into()));
        }
        crypto::validate_kappa(self.kappa_bits)
    }

    pub fn kappa_bytes(&self) -> usize {
        (self.kappa_bits / 8) as usize
    }

    pub fn theta(&self) -> std::time::Duration {
        std::time::Duration::from_millis(self.theta_ms)
    }

    /// Six 8-byte big-endian fields: N, n, L, m, θ, κ.
    pub fn encode(&self) -> [u8; PARAMS_ENCODED_LEN] {
        let mut out = [0u8; PARAMS_ENCODED_LEN];
        let fields = [
            self.content_bits,
            self.indices_per_set as u64,
            self.sets_per_puzzle as u64,
            self.puzzles_per_challenge as u64,
            self.theta_ms,
            self.kappa_bits as u64,
        ];
        for (slot, field) in out.chunks_exact_mut(8).zip(fields) {
            slot.copy_from_slice(&field.to_be_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != PARAMS_ENCODED_LEN {
            return Err(Error::format(
                "puzzle parameters",
                format!("expected {PARAMS_ENCODED_LEN} bytes, got {}", bytes.len()),
            ));
        }
        let mut fields = [0u64; 6];
        for (field, chunk) in fields.iter_mut().zip(bytes.chunks_exact(8)) {
            *field = u64::from_be_bytes(chunk.try_into().unwrap());
        }
        let narrow = |v: u64, what: &'static str| -> Result<u32> {
            u32::try_from(v)
                .map_err(|_| Error::format("puzzle parameters", format!("{what} too large")))
        };
        let params = PuzzleParams {
            content_bits: fields[0],
            indices_per_set: narrow(fields[1], "indices_per_set")?,
            sets_per_puzzle: narrow(fields[2], "sets_per_puzzle")?,
            puzzles_per_challenge: narrow(fields[3], "puzzles_per_challenge")?,
            theta_ms: fields[4],
            kappa_bits: narrow(fields[5], "kappa_bits")?,
        };
        params.validate()?;
        Ok(params)
    }
}

/// One expanded index set: ordinal `j` and its `n` content indices, in
/// order, repeats allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    pub ordinal: u32,
    pub indices: Vec<u64>,
}

/// A challenge instance: everything the prover receives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Puzzle {
    pub params: PuzzleParams,
    pub key: Key,
    pub hint: Digest,
}

/// The verifier-private counterpart of a [`Puzzle`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PuzzleSecret {
    /// j*: which set hashes to the hint.
    pub answer_ordinal: u32,
    /// A(s_{j*}): the digest a correct response must equal.
    pub answer: Digest,
}

/// A prover's answer to one puzzle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub answer: Digest,
}

/// Expands index set `j` of the puzzle keyed by `k1`:
/// `indices[i-1] = f2(f1(k1, j), i, N)` for `i = 1..=n`.
pub fn index_set(params: &PuzzleParams, k1: &Key, j: u32) -> Result<IndexSet> {
    if j == 0 || j > params.sets_per_puzzle {
        return Err(Error::OrdinalOutOfRange {
            ordinal: j,
            max: params.sets_per_puzzle,
        });
    }
    let k2 = crypto::prf_f1(k1, j)?;
    let indices = (1..=params.indices_per_set)
        .map(|i| crypto::prf_f2(&k2, i, params.content_bits))
        .collect::<Result<Vec<u64>>>()?;
    Ok(IndexSet {
        ordinal: j,
        indices,
    })
}

/// Reads the content bits at the set's indices, in order.
pub fn true_string(content: &Content, iset: &IndexSet) -> Result<BitString> {
    let mut s = BitString::zeros(iset.indices.len() as u64);
    for (pos, &idx) in iset.indices.iter().enumerate() {
        if content.bit(idx)? {
            s.set(pos as u64, true);
        }
    }
    Ok(s)
}

/// Generates one puzzle over `content`: fresh key, uniform secret ordinal,
/// hint over the answer set's true string. Only the answer index set is
/// ever expanded.
pub fn generate_puzzle(
    params: &PuzzleParams,
    content: &Content,
    rng: &mut impl Rng,
) -> Result<(Puzzle, PuzzleSecret)> {
    params.validate()?;
    if content.len_bits() != params.content_bits {
        return Err(Error::ContentSize {
            expected: params.content_bits,
            actual: content.len_bits(),
        });
    }
    let key = Key::random(rng, params.kappa_bits)?;
    let answer_ordinal = rng.gen_range(1..=params.sets_per_puzzle);
    let iset = index_set(params, &key, answer_ordinal)?;
    let s = true_string(content, &iset)?;
    let hint = crypto::hash_h(&key, answer_ordinal, &s)?;
    let answer = crypto::hash_a(&s, params.kappa_bits)?;
    Ok((
        Puzzle {
            params: *params,
            key,
            hint,
        },
        PuzzleSecret {
            answer_ordinal,
            answer,
        },
    ))
}

/// Which order the solver tries set ordinals in.
#[derive(Clone, Debug, Default)]
pub enum SolveOrder {
    /// 1, 2, …, L — the honest prover's order.
    #[default]
    Sequential,
    /// An explicit sequence of ordinals to try.
    Explicit(Vec<u32>),
}

/// Solves a puzzle with full content: hashes index sets in `order` until
/// one matches the hint, then answers with `A` of that set's true string.
///
/// Returns the solution and the number of `H` evaluations spent. Errors
/// with [`Error::MalformedPuzzle`] if no tried set confirms.
pub fn solve(puzzle: &Puzzle, content: &Content, order: SolveOrder) -> Result<(Solution, u64)> {
    if content.len_bits() != puzzle.params.content_bits {
        return Err(Error::ContentSize {
            expected: puzzle.params.content_bits,
            actual: content.len_bits(),
        });
    }
    let ordinals: Vec<u32> = match order {
        SolveOrder::Sequential => (1..=puzzle.params.sets_per_puzzle).collect(),
        SolveOrder::Explicit(v) => v,
    };
    let mut queries = 0u64;
    for j in ordinals {
        let iset = index_set(&puzzle.params, &puzzle.key, j)?;
        let s = true_string(content, &iset)?;
        let digest = crypto::hash_h(&puzzle.key, j, &s)?;
        queries += 1;
        if digest == puzzle.hint {
            let answer = crypto::hash_a(&s, puzzle.params.kappa_bits)?;
            return Ok((Solution { answer }, queries));
        }
    }
    Err(Error::MalformedPuzzle)
}

/// Accepts a solution iff its answer digest equals the secret's, byte for
/// byte.
pub fn verify(secret: &PuzzleSecret, submitted: &Solution) -> bool {
    secret.answer == submitted.answer
}

impl Puzzle {
    /// `version ‖ params (48 bytes) ‖ k1 ‖ hint` — exactly
    /// `1 + 48 + 2·κ/8` bytes; no index set is ever serialized.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + PARAMS_ENCODED_LEN + 2 * self.params.kappa_bytes());
        out.push(PUZZLE_FORMAT_VERSION);
        out.extend_from_slice(&self.params.encode());
        out.extend_from_slice(self.key.as_bytes());
        out.extend_from_slice(self.hint.as_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 1 + PARAMS_ENCODED_LEN {
            return Err(Error::format("puzzle", "truncated"));
        }
        if bytes[0] != PUZZLE_FORMAT_VERSION {
            return Err(Error::format(
                "puzzle",
                format!("unsupported format version {}", bytes[0]),
            ));
        }
        let params = PuzzleParams::decode(&bytes[1..1 + PARAMS_ENCODED_LEN])?;
        let kb = params.kappa_bytes();
        let rest = &bytes[1 + PARAMS_ENCODED_LEN..];
        if rest.len() != 2 * kb {
            return Err(Error::format(
                "puzzle",
                format!("expected {} trailing bytes, got {}", 2 * kb, rest.len()),
            ));
        }
        Ok(Puzzle {
            params,
            key: Key::from_bytes(rest[..kb].to_vec())?,
            hint: Digest::from_bytes(rest[kb..].to_vec())?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    pub(crate) fn small_params() -> PuzzleParams {
        PuzzleParams {
            content_bits: 1 << 10,
            indices_per_set: 16,
            sets_per_puzzle: 8,
            puzzles_per_challenge: 2,
            theta_ms: 1_000,
            kappa_bits: 256,
        }
    }

    #[test]
    fn params_validation_rejects_each_bad_field() {
        let good = small_params();
        assert!(good.validate().is_ok());
        for bad in [
            PuzzleParams {
                content_bits: 0,
                ..good
            },
            PuzzleParams {
                indices_per_set: 0,
                ..good
            },
            PuzzleParams {
                sets_per_puzzle: 0,
                ..good
            },
            PuzzleParams {
                puzzles_per_challenge: 0,
                ..good
            },
            PuzzleParams {
                theta_ms: 0,
                ..good
            },
            PuzzleParams {
                kappa_bits: 152,
                ..good
            },
            PuzzleParams {
                kappa_bits: 300,
                ..good
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?} should not validate");
        }
    }

    #[test]
    fn params_encode_decode_roundtrip() {
        let p = small_params();
        assert_eq!(PuzzleParams::decode(&p.encode()).unwrap(), p);
        assert!(PuzzleParams::decode(&[0u8; 47]).is_err());
    }

    // The worked example: content 00110101, three four-index sets.
    #[test]
    fn true_string_fixed_vectors() {
        let content = Content::from_bytes(vec![0b0011_0101], 8).unwrap();
        let cases: [(&[u64], &str); 3] = [
            (&[5, 3, 7, 0], "1110"),
            (&[1, 2, 6, 3], "0101"),
            (&[2, 3, 5, 3], "1111"),
        ];
        for (indices, expect) in cases {
            let iset = IndexSet {
                ordinal: 1,
                indices: indices.to_vec(),
            };
            assert_eq!(
                true_string(&content, &iset).unwrap(),
                BitString::from_bit_str(expect).unwrap()
            );
        }
    }

    #[test]
    fn true_string_index_out_of_range() {
        let content = Content::from_bytes(vec![0b0011_0101], 8).unwrap();
        let iset = IndexSet {
            ordinal: 1,
            indices: vec![3, 8],
        };
        assert!(matches!(
            true_string(&content, &iset),
            Err(Error::IndexOutOfRange { index: 8, .. })
        ));
    }

    #[test]
    fn index_set_is_deterministic_and_in_range() {
        let params = small_params();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..100 {
            let k1 = Key::random(&mut rng, 256).unwrap();
            let j = rand::Rng::gen_range(&mut rng, 1..=params.sets_per_puzzle);
            let a = index_set(&params, &k1, j).unwrap();
            let b = index_set(&params, &k1, j).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.indices.len(), params.indices_per_set as usize);
            assert!(a.indices.iter().all(|&i| i < params.content_bits));
        }
    }

    #[test]
    fn index_sets_differ_across_ordinals() {
        // n = 16 over N = 1024: a collision of whole lists is negligible.
        let params = small_params();
        let k1 = Key::from_bytes(vec![0x42; 32]).unwrap();
        let base = index_set(&params, &k1, 1).unwrap();
        for j in 2..=params.sets_per_puzzle {
            assert_ne!(base.indices, index_set(&params, &k1, j).unwrap().indices);
        }
    }

    #[test]
    fn index_set_ordinal_bounds() {
        let params = small_params();
        let k1 = Key::from_bytes(vec![0x42; 32]).unwrap();
        assert!(matches!(
            index_set(&params, &k1, 0),
            Err(Error::OrdinalOutOfRange { ordinal: 0, .. })
        ));
        assert!(matches!(
            index_set(&params, &k1, 9),
            Err(Error::OrdinalOutOfRange { ordinal: 9, max: 8 })
        ));
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let params = small_params();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let content = Content::random(&mut rng, params.content_bits);
        let a = generate_puzzle(&params, &content, &mut ChaCha20Rng::seed_from_u64(17)).unwrap();
        let b = generate_puzzle(&params, &content, &mut ChaCha20Rng::seed_from_u64(17)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generation_rejects_wrong_content_size() {
        let params = small_params();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let content = Content::random(&mut rng, params.content_bits - 8);
        assert!(matches!(
            generate_puzzle(&params, &content, &mut rng),
            Err(Error::ContentSize { .. })
        ));
    }

    #[test]
    fn single_set_forces_first_ordinal() {
        let params = PuzzleParams {
            sets_per_puzzle: 1,
            ..small_params()
        };
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let content = Content::random(&mut rng, params.content_bits);
        for _ in 0..32 {
            let (_, secret) = generate_puzzle(&params, &content, &mut rng).unwrap();
            assert_eq!(secret.answer_ordinal, 1);
        }
    }

    #[test]
    fn answer_ordinal_is_uniform() {
        // 1e4 draws over L = 4; 5-sigma band around 2500.
        let params = PuzzleParams {
            sets_per_puzzle: 4,
            indices_per_set: 4,
            content_bits: 64,
            ..small_params()
        };
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let content = Content::random(&mut rng, params.content_bits);
        let mut counts = [0u64; 4];
        let draws = 10_000;
        for _ in 0..draws {
            let (_, secret) = generate_puzzle(&params, &content, &mut rng).unwrap();
            counts[(secret.answer_ordinal - 1) as usize] += 1;
        }
        let mean = draws as f64 / 4.0;
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        for (j, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - mean).abs() <= 5.0 * sigma,
                "ordinal {} count {c} outside 5 sigma of {mean}",
                j + 1
            );
        }
    }

    #[test]
    fn solve_then_verify_roundtrip() {
        let params = small_params();
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        let content = Content::random(&mut rng, params.content_bits);
        for _ in 0..50 {
            let (puzzle, secret) = generate_puzzle(&params, &content, &mut rng).unwrap();
            let (solution, queries) = solve(&puzzle, &content, SolveOrder::Sequential).unwrap();
            assert!(verify(&secret, &solution));
            assert_eq!(queries, secret.answer_ordinal as u64);
        }
    }

    #[test]
    fn first_set_hit_costs_one_query() {
        let params = small_params();
        let mut rng = ChaCha20Rng::seed_from_u64(43);
        let content = Content::random(&mut rng, params.content_bits);
        loop {
            let (puzzle, secret) = generate_puzzle(&params, &content, &mut rng).unwrap();
            if secret.answer_ordinal != 1 {
                continue;
            }
            let (_, queries) = solve(&puzzle, &content, SolveOrder::Sequential).unwrap();
            assert_eq!(queries, 1);
            break;
        }
    }

    #[test]
    fn explicit_order_changes_query_count() {
        let params = small_params();
        let mut rng = ChaCha20Rng::seed_from_u64(47);
        let content = Content::random(&mut rng, params.content_bits);
        let (puzzle, secret) = generate_puzzle(&params, &content, &mut rng).unwrap();
        let order: Vec<u32> = (1..=params.sets_per_puzzle).rev().collect();
        let position = order
            .iter()
            .position(|&j| j == secret.answer_ordinal)
            .unwrap() as u64;
        let (solution, queries) = solve(&puzzle, &content, SolveOrder::Explicit(order)).unwrap();
        assert!(verify(&secret, &solution));
        assert_eq!(queries, position + 1);
    }

    #[test]
    fn corrupt_hint_is_malformed() {
        let params = small_params();
        let mut rng = ChaCha20Rng::seed_from_u64(53);
        let content = Content::random(&mut rng, params.content_bits);
        let (mut puzzle, _) = generate_puzzle(&params, &content, &mut rng).unwrap();
        let mut hint = puzzle.hint.as_bytes().to_vec();
        hint[0] ^= 0xff;
        puzzle.hint = Digest::from_bytes(hint).unwrap();
        assert!(matches!(
            solve(&puzzle, &content, SolveOrder::Sequential),
            Err(Error::MalformedPuzzle)
        ));
    }

    #[test]
    fn wrong_answer_rejected() {
        let params = small_params();
        let mut rng = ChaCha20Rng::seed_from_u64(59);
        let content = Content::random(&mut rng, params.content_bits);
        let (_, secret) = generate_puzzle(&params, &content, &mut rng).unwrap();
        let wrong = Solution {
            answer: Digest::zero(params.kappa_bits).unwrap(),
        };
        assert!(!verify(&secret, &wrong));
    }

    #[test]
    fn cross_puzzle_answers_never_verify() {
        // 1e3 pairs over the same content; answers must not transfer.
        let params = small_params();
        let mut rng = ChaCha20Rng::seed_from_u64(61);
        let content = Content::random(&mut rng, params.content_bits);
        let mut accepted = 0;
        for _ in 0..1_000 {
            let (puzzle_a, _) = generate_puzzle(&params, &content, &mut rng).unwrap();
            let (_, secret_b) = generate_puzzle(&params, &content, &mut rng).unwrap();
            let (solution_a, _) = solve(&puzzle_a, &content, SolveOrder::Sequential).unwrap();
            if verify(&secret_b, &solution_a) {
                accepted += 1;
            }
        }
        assert_eq!(accepted, 0);
    }

    #[test]
    fn puzzle_serialization_is_exact_and_regenerates_sets() {
        let params = small_params();
        let mut rng = ChaCha20Rng::seed_from_u64(67);
        let content = Content::random(&mut rng, params.content_bits);
        let (puzzle, _) = generate_puzzle(&params, &content, &mut rng).unwrap();
        let bytes = puzzle.encode();
        assert_eq!(
            bytes.len(),
            1 + PARAMS_ENCODED_LEN + 2 * params.kappa_bytes()
        );
        let back = Puzzle::decode(&bytes).unwrap();
        assert_eq!(back, puzzle);
        for j in 1..=params.sets_per_puzzle {
            assert_eq!(
                index_set(&back.params, &back.key, j).unwrap(),
                index_set(&puzzle.params, &puzzle.key, j).unwrap()
            );
        }
        assert!(Puzzle::decode(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong_version = bytes;
        wrong_version[0] = 9;
        assert!(Puzzle::decode(&wrong_version).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn solve_verify_roundtrip_property(
            seed in any::<u64>(),
            n_bits in 16u64..512,
            n in 1u32..24,
            sets in 1u32..12,
        ) {
            let params = PuzzleParams {
                content_bits: n_bits,
                indices_per_set: n,
                sets_per_puzzle: sets,
                puzzles_per_challenge: 1,
                theta_ms: 1_000,
                kappa_bits: 256,
            };
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let content = Content::random(&mut rng, n_bits);
            let (puzzle, secret) = generate_puzzle(&params, &content, &mut rng).unwrap();
            let (solution, queries) = solve(&puzzle, &content, SolveOrder::Sequential).unwrap();
            prop_assert!(verify(&secret, &solution));
            prop_assert!(queries >= 1 && queries <= sets as u64);
            let decoded = Puzzle::decode(&puzzle.encode()).unwrap();
            prop_assert_eq!(decoded, puzzle);
        }
    }
}
