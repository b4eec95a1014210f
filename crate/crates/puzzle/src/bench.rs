//! Local throughput measurement: how fast this machine evaluates the hint
//! hash on n-bit inputs and draws PRF indices, and what hash budget that
//! implies for a threshold θ.
//!
//! Published reference figures exist for SHA-1/AES on older hardware (for
//! example 202165 SHA-1 calls per second on a 3 GHz "pc3000" class
//! machine at 10^4-bit inputs); they are reported alongside the local
//! measurement for orientation, never asserted.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::content::BitString;
use crate::crypto::{self, Key};
use crate::error::Result;
use crate::puzzle::PuzzleParams;

/// Reference throughput rows: (machine, cpu, sha1 calls/s at 10^4-bit
/// input, aes calls/s at 128-bit blocks).
pub const REFERENCE_RATES: [(&str, &str, u64, u64); 4] = [
    ("pc3000", "3.0GHz 64-bit", 202_165, 4_059_157),
    ("pc2000", "2.0GHz", 71_016, 2_605_490),
    ("pc850", "850MHz", 39_151, 1_086_667),
    ("pc600", "600MHz", 29_064, 789_624),
];

/// Measured rates and the feasibility conclusions they imply.
#[derive(Clone, Debug)]
pub struct BenchReport {
    /// H evaluations per second on n-bit inputs.
    pub hash_calls_per_sec: f64,
    /// f2 index draws per second.
    pub prf_calls_per_sec: f64,
    /// θ in seconds, from the parameters.
    pub theta_secs: f64,
    /// hash_calls_per_sec × θ: the hash budget θ affords.
    pub derived_q_h: f64,
    pub feasibility: Feasibility,
}

/// The three workload conclusions for the measured machine at the given
/// `(N, n, θ)`.
#[derive(Clone, Debug)]
pub struct Feasibility {
    /// Smallest challenge workload (hash queries) such that the hashed
    /// bits reach twice the content: `ceil(2N/n)`.
    pub required_queries: u64,
    /// Whether even hashing alone cannot reach 1e6 queries within θ.
    pub million_queries_unreachable: bool,
    /// Whether the required workload fits in θ once index generation is
    /// optimized away (hash-rate limited).
    pub workload_fits_theta: bool,
    /// Wall-clock estimate for the required workload including
    /// unoptimized index generation, in seconds.
    pub solve_time_secs: f64,
    /// Whether that estimate is on the order of seconds yet within θ.
    pub solve_time_order_of_seconds: bool,
}

/// Recomputes the conclusions from raw rates; [`measure`] uses this and
/// callers can re-derive it to audit a report.
pub fn evaluate_feasibility(
    params: &PuzzleParams,
    hash_calls_per_sec: f64,
    prf_calls_per_sec: f64,
) -> Feasibility {
    let theta_secs = params.theta_ms as f64 / 1_000.0;
    let n = params.content_bits as f64;
    let set = params.indices_per_set as f64;
    let required_queries = (2.0 * n / set).ceil() as u64;
    let derived_q_h = hash_calls_per_sec * theta_secs;
    let per_query_full = 1.0 / hash_calls_per_sec + set / prf_calls_per_sec;
    let solve_time_secs = required_queries as f64 * per_query_full;
    Feasibility {
        required_queries,
        million_queries_unreachable: derived_q_h < 1e6,
        workload_fits_theta: required_queries as f64 <= derived_q_h,
        solve_time_secs,
        solve_time_order_of_seconds: solve_time_secs >= 0.5 && solve_time_secs <= theta_secs,
    }
}

/// Measures single-threaded H and f2 throughput at the parameter's input
/// sizes. The warmup period is excluded from the timed window.
pub fn measure(params: &PuzzleParams, duration: Duration, warmup: Duration) -> Result<BenchReport> {
    params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(0x62656e63);
    let key = Key::random(&mut rng, params.kappa_bits)?;
    let input = BitString::random(&mut rng, params.indices_per_set as u64);
    let half = duration / 2;

    let hash_calls_per_sec = {
        let mut j = 1u32;
        let mut run = |window: Duration| -> Result<f64> {
            let start = Instant::now();
            let mut calls = 0u64;
            while start.elapsed() < window {
                // Batch between clock reads; vary j to avoid a fixed input.
                for _ in 0..64 {
                    std::hint::black_box(crypto::hash_h(&key, j, &input)?);
                    j = j % 1_000_000 + 1;
                    calls += 1;
                }
            }
            Ok(calls as f64 / start.elapsed().as_secs_f64())
        };
        run(warmup)?;
        run(half)?
    };

    let prf_calls_per_sec = {
        let k2 = crypto::prf_f1(&key, 1)?;
        let mut i = 1u32;
        let mut run = |window: Duration| -> Result<f64> {
            let start = Instant::now();
            let mut calls = 0u64;
            while start.elapsed() < window {
                for _ in 0..256 {
                    std::hint::black_box(crypto::prf_f2(&k2, i, params.content_bits)?);
                    i = i % 1_000_000 + 1;
                    calls += 1;
                }
            }
            Ok(calls as f64 / start.elapsed().as_secs_f64())
        };
        run(warmup)?;
        run(half)?
    };

    let theta_secs = params.theta_ms as f64 / 1_000.0;
    Ok(BenchReport {
        hash_calls_per_sec,
        prf_calls_per_sec,
        theta_secs,
        derived_q_h: hash_calls_per_sec * theta_secs,
        feasibility: evaluate_feasibility(params, hash_calls_per_sec, prf_calls_per_sec),
    })
}
