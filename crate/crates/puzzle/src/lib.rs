//! Bandwidth puzzles: a hash-based challenge–response scheme that ties the
//! ability to solve a puzzle to having downloaded the challenged content,
//! plus the analysis machinery to compare adversary strategies against the
//! lower bound on their average download cost.
//!
//! * [`crypto`] — the PRF families and hash functions.
//! * [`content`] — bit-addressable content and bit strings.
//! * [`puzzle`] — puzzle generation, solving, verification.
//! * [`oracle`] — the instrumented content/hash oracle with per-adversary
//!   accounting and informedness-gated replies.
//! * [`sim`] — executable adversary strategies measured against the oracle.
//! * [`bounds`] — closed-form bound evaluation and parameter checking.
//! * [`proto`] — the verifier/prover wire protocol with threshold timing.
//! * [`bench`] — local hash/PRF throughput measurement.

pub mod bench;
pub mod bounds;
pub mod content;
pub mod crypto;
pub mod error;
pub mod oracle;
#[cfg(feature = "test-oracles")]
pub mod oracles;
pub mod proto;
pub mod puzzle;
pub mod sim;

pub use content::{BitString, Content};
pub use crypto::{Digest, Key};
pub use error::{Error, Result};
pub use puzzle::{Puzzle, PuzzleParams, PuzzleSecret, Solution, SolveOrder};
