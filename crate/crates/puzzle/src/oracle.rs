//! The instrumented experiment environment: a content oracle with
//! per-adversary accounting and a hash oracle that answers only informed
//! queries, enforces per-adversary budgets, and caps hash queries per
//! puzzle.
//!
//! Content queries are always answered and deduplicated per adversary, so
//! an adversary's download cost is the number of *unique* indices it
//! queried. A hash query is informed for adversary `v` when at most `V`
//! distinct indices of the queried set are missing from `v`'s own
//! downloads; what other adversaries downloaded never counts. Refused
//! uninformed queries still consume budget (the budget models hash
//! computation time, and a rational algorithm never issues them); refusals
//! due to an exhausted budget or a saturated puzzle do not.

use std::collections::HashMap;

use crate::content::Content;
use crate::crypto::Digest;
use crate::error::{Error, Result};
use crate::puzzle::{self, IndexSet, Puzzle, PuzzleParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdversaryId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PuzzleId(pub u32);

/// Oracle knobs: the informedness slack `V` and the per-adversary hash
/// budget `q_H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OmegaConfig {
    /// V: a hash query is informed with at most this many bits missing.
    pub slack_bits: u32,
    /// q_H: hash queries answered per adversary.
    pub hash_budget: u64,
}

impl OmegaConfig {
    pub fn validate(&self, params: &PuzzleParams) -> Result<()> {
        if self.slack_bits == 0 || self.slack_bits >= params.indices_per_set {
            return Err(Error::InvalidParams(format!(
                "slack must satisfy 0 < V < n, got V={} n={}",
                self.slack_bits, params.indices_per_set
            )));
        }
        if self.hash_budget < params.sets_per_puzzle as u64 {
            return Err(Error::InvalidParams(format!(
                "hash budget {} below sets per puzzle {}; honest provers could not solve",
                self.hash_budget, params.sets_per_puzzle
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Informedness {
    Informed,
    Uninformed,
}

/// Dense per-adversary set of queried content indices.
#[derive(Clone)]
struct IndexBitSet {
    words: Vec<u64>,
    len: u64,
    count: u64,
}

impl IndexBitSet {
    fn new(len: u64) -> Self {
        IndexBitSet {
            words: vec![0u64; len.div_ceil(64) as usize],
            len,
            count: 0,
        }
    }

    fn contains(&self, idx: u64) -> bool {
        self.words[(idx / 64) as usize] >> (idx % 64) & 1 == 1
    }

    fn insert(&mut self, idx: u64) {
        let word = &mut self.words[(idx / 64) as usize];
        let mask = 1u64 << (idx % 64);
        if *word & mask == 0 {
            *word |= mask;
            self.count += 1;
        }
    }

    fn fill(&mut self) {
        self.words.fill(!0u64);
        self.count = self.len;
    }
}

#[derive(Clone)]
struct AdversaryStats {
    downloaded: IndexBitSet,
    hash_queries: u64,
    puzzles_confirmed: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum MemoReply {
    Refused,
    Answered(Digest),
}

/// Per-adversary counters plus the first-reply memo for repeated queries.
pub struct OracleStats {
    adversaries: Vec<AdversaryStats>,
    puzzle_queries: Vec<u64>,
    puzzle_confirmed: Vec<bool>,
    memo: HashMap<(u32, u32, u32), MemoReply>,
}

impl OracleStats {
    fn new(adversaries: u32, puzzles: u32, content_bits: u64) -> Self {
        OracleStats {
            adversaries: (0..adversaries)
                .map(|_| AdversaryStats {
                    downloaded: IndexBitSet::new(content_bits),
                    hash_queries: 0,
                    puzzles_confirmed: 0,
                })
                .collect(),
            puzzle_queries: vec![0; puzzles as usize],
            puzzle_confirmed: vec![false; puzzles as usize],
            memo: HashMap::new(),
        }
    }

    pub fn adversary_count(&self) -> u32 {
        self.adversaries.len() as u32
    }

    /// Unique content indices adversary `v` has queried.
    pub fn content_bits_downloaded(&self, v: AdversaryId) -> u64 {
        self.adversaries[v.0 as usize].downloaded.count
    }

    /// Hash queries charged against `v`'s budget.
    pub fn hash_queries(&self, v: AdversaryId) -> u64 {
        self.adversaries[v.0 as usize].hash_queries
    }

    pub fn puzzles_confirmed(&self, v: AdversaryId) -> u32 {
        self.adversaries[v.0 as usize].puzzles_confirmed
    }

    /// Sum of unique downloads over all adversaries; overlaps between
    /// adversaries count once per adversary.
    pub fn total_unique_bits(&self) -> u64 {
        self.adversaries.iter().map(|a| a.downloaded.count).sum()
    }

    pub fn total_hash_queries(&self) -> u64 {
        self.adversaries.iter().map(|a| a.hash_queries).sum()
    }

    /// Distinct missing indices of `iset` from `v`'s downloads, compared
    /// against the slack: informed iff no more than `slack_bits` missing.
    pub fn classify(&self, v: AdversaryId, iset: &IndexSet, slack_bits: u32) -> Informedness {
        let downloaded = &self.adversaries[v.0 as usize].downloaded;
        if downloaded.count == downloaded.len {
            return Informedness::Informed;
        }
        let mut missing: Vec<u64> = iset
            .indices
            .iter()
            .copied()
            .filter(|&i| !downloaded.contains(i))
            .collect();
        missing.sort_unstable();
        missing.dedup();
        if missing.len() as u64 <= slack_bits as u64 {
            Informedness::Informed
        } else {
            Informedness::Uninformed
        }
    }

    /// One CSV row per adversary:
    /// `adversary_id,content_bits,hash_queries,puzzles_confirmed`.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(
            w,
            "adversary_id,content_bits,hash_queries,puzzles_confirmed"
        )?;
        for (id, a) in self.adversaries.iter().enumerate() {
            writeln!(
                w,
                "{id},{},{},{}",
                a.downloaded.count, a.hash_queries, a.puzzles_confirmed
            )?;
        }
        Ok(())
    }
}

/// The experiment oracle: owns the puzzles under attack, answers content
/// and hash queries, and keeps all accounting in [`OracleStats`].
pub struct Omega<'c> {
    params: PuzzleParams,
    config: OmegaConfig,
    content: &'c Content,
    puzzles: Vec<Puzzle>,
    stats: OracleStats,
}

impl<'c> Omega<'c> {
    pub fn new(
        config: OmegaConfig,
        content: &'c Content,
        puzzles: Vec<Puzzle>,
        adversaries: u32,
    ) -> Result<Self> {
        let params = puzzles
            .first()
            .ok_or_else(|| Error::InvalidParams("at least one puzzle required".into()))?
            .params;
        params.validate()?;
        config.validate(&params)?;
        if content.len_bits() != params.content_bits {
            return Err(Error::ContentSize {
                expected: params.content_bits,
                actual: content.len_bits(),
            });
        }
        if puzzles.iter().any(|p| p.params != params) {
            return Err(Error::InvalidParams(
                "all puzzles must share parameters".into(),
            ));
        }
        if adversaries == 0 {
            return Err(Error::InvalidParams("need at least one adversary".into()));
        }
        let stats = OracleStats::new(adversaries, puzzles.len() as u32, params.content_bits);
        Ok(Omega {
            params,
            config,
            content,
            puzzles,
            stats,
        })
    }

    pub fn params(&self) -> &PuzzleParams {
        &self.params
    }

    pub fn config(&self) -> &OmegaConfig {
        &self.config
    }

    pub fn puzzle_count(&self) -> u32 {
        self.puzzles.len() as u32
    }

    pub fn adversary_count(&self) -> u32 {
        self.stats.adversary_count()
    }

    pub fn puzzle(&self, p: PuzzleId) -> &Puzzle {
        &self.puzzles[p.0 as usize]
    }

    pub fn stats(&self) -> &OracleStats {
        &self.stats
    }

    fn check_adversary(&self, v: AdversaryId) -> Result<()> {
        if v.0 >= self.stats.adversary_count() {
            return Err(Error::InvalidParams(format!(
                "adversary {} out of range [0, {})",
                v.0,
                self.stats.adversary_count()
            )));
        }
        Ok(())
    }

    /// Answers the content bit at `index` and records the query against
    /// `v`'s unique-index count. Repeats are free.
    pub fn content_query(&mut self, v: AdversaryId, index: u64) -> Result<bool> {
        self.check_adversary(v)?;
        let bit = self.content.bit(index)?;
        self.stats.adversaries[v.0 as usize]
            .downloaded
            .insert(index);
        Ok(bit)
    }

    /// Queries every content index for `v` in one sweep. Equivalent to
    /// `content_query(v, i)` for all `i`.
    pub fn download_all(&mut self, v: AdversaryId) -> Result<()> {
        self.check_adversary(v)?;
        self.stats.adversaries[v.0 as usize].downloaded.fill();
        Ok(())
    }

    /// A hash query for set `j` of puzzle `p`, issued by `v`.
    ///
    /// Returns `Ok(None)` — the empty reply — when the query is uninformed
    /// for `v`, when `v`'s budget is spent, or when the puzzle already
    /// absorbed its cap of charged queries. Repeats of an earlier query
    /// replay the first reply free of charge.
    pub fn hash_query(&mut self, v: AdversaryId, p: PuzzleId, j: u32) -> Result<Option<Digest>> {
        self.check_adversary(v)?;
        if p.0 as usize >= self.puzzles.len() {
            return Err(Error::InvalidParams(format!(
                "puzzle {} out of range [0, {})",
                p.0,
                self.puzzles.len()
            )));
        }
        if j == 0 || j > self.params.sets_per_puzzle {
            return Err(Error::OrdinalOutOfRange {
                ordinal: j,
                max: self.params.sets_per_puzzle,
            });
        }

        if let Some(reply) = self.stats.memo.get(&(v.0, p.0, j)) {
            return Ok(match reply {
                MemoReply::Refused => None,
                MemoReply::Answered(d) => Some(d.clone()),
            });
        }
        if self.stats.adversaries[v.0 as usize].hash_queries >= self.config.hash_budget {
            return Ok(None);
        }
        if self.stats.puzzle_queries[p.0 as usize] >= self.params.sets_per_puzzle as u64 {
            return Ok(None);
        }

        self.stats.adversaries[v.0 as usize].hash_queries += 1;
        self.stats.puzzle_queries[p.0 as usize] += 1;

        let puzzle = &self.puzzles[p.0 as usize];
        let iset = puzzle::index_set(&self.params, &puzzle.key, j)?;
        if self.stats.classify(v, &iset, self.config.slack_bits) == Informedness::Uninformed {
            self.stats.memo.insert((v.0, p.0, j), MemoReply::Refused);
            return Ok(None);
        }

        let s = puzzle::true_string(self.content, &iset)?;
        let digest = crate::crypto::hash_h(&puzzle.key, j, &s)?;
        if digest == puzzle.hint {
            self.stats.puzzle_confirmed[p.0 as usize] = true;
            self.stats.adversaries[v.0 as usize].puzzles_confirmed += 1;
        }
        self.stats
            .memo
            .insert((v.0, p.0, j), MemoReply::Answered(digest.clone()));
        Ok(Some(digest))
    }

    /// Whether `digest` equals puzzle `p`'s hint.
    pub fn is_confirm(&self, p: PuzzleId, digest: &Digest) -> bool {
        self.puzzles[p.0 as usize].hint == *digest
    }

    /// Whether some adversary has confirmed puzzle `p`.
    pub fn confirmed(&self, p: PuzzleId) -> bool {
        self.stats.puzzle_confirmed[p.0 as usize]
    }

    pub fn confirmed_count(&self) -> u32 {
        self.stats.puzzle_confirmed.iter().filter(|&&c| c).count() as u32
    }

    pub fn all_confirmed(&self) -> bool {
        self.stats.puzzle_confirmed.iter().all(|&c| c)
    }
}
