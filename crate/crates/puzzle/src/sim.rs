//! Executable adversary strategies run against the oracle environment,
//! measuring unique bits downloaded against puzzle-solving success.
//!
//! Each trial generates `P = A·m` fresh puzzles, flips one coalition-wide
//! coin with the configured attempt probability, hands the oracle to the
//! strategy, and records what the oracle accounted. Trials are independent
//! and run in parallel with per-trial seeds derived from the master seed,
//! so results are reproducible regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use sha2::{Digest as _, Sha256};

use crate::content::Content;
use crate::error::{Error, Result};
use crate::oracle::{AdversaryId, Omega, OmegaConfig, PuzzleId};
use crate::puzzle::{generate_puzzle, PuzzleParams};

/// A full experiment: puzzle family, coalition size, oracle knobs,
/// attempt probability, and repetition count.
#[derive(Clone, Copy, Debug)]
pub struct ExperimentConfig {
    pub params: PuzzleParams,
    /// A: number of adversaries.
    pub adversaries: u32,
    pub omega: OmegaConfig,
    /// sigma: probability the coalition attempts a trial at all.
    pub attempt_probability: f64,
    pub trials: u32,
    pub seed: u64,
}

impl ExperimentConfig {
    /// P = A·m.
    pub fn puzzles(&self) -> u32 {
        self.adversaries * self.params.puzzles_per_challenge
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.omega.validate(&self.params)?;
        if self.adversaries == 0 {
            return Err(Error::InvalidParams("need at least one adversary".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParams("need at least one trial".into()));
        }
        if !(0.0..=1.0).contains(&self.attempt_probability) {
            return Err(Error::InvalidParams(format!(
                "attempt probability must be in [0, 1], got {}",
                self.attempt_probability
            )));
        }
        Ok(())
    }
}

/// What one trial produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: u32,
    pub attempted: bool,
    pub solved_all: bool,
    pub bits_total: u64,
    pub hash_total: u64,
    pub confirmed: u32,
}

/// Aggregated experiment outcome with the per-trial records retained.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    /// Fraction of trials where every puzzle was solved.
    pub success_rate: f64,
    /// Mean unique content bits downloaded per trial, summed over
    /// adversaries.
    pub avg_bits: f64,
    /// Mean hash queries per trial, summed over adversaries.
    pub avg_hash_queries: f64,
    pub trials: Vec<TrialRecord>,
}

impl ExperimentResult {
    fn from_trials(trials: Vec<TrialRecord>) -> Self {
        let count = trials.len() as f64;
        let solved = trials.iter().filter(|t| t.solved_all).count() as f64;
        let bits: f64 = trials.iter().map(|t| t.bits_total as f64).sum();
        let hash: f64 = trials.iter().map(|t| t.hash_total as f64).sum();
        ExperimentResult {
            success_rate: solved / count,
            avg_bits: bits / count,
            avg_hash_queries: hash / count,
            trials,
        }
    }

    /// Standard error of `avg_bits` over the trials.
    pub fn bits_std_error(&self) -> f64 {
        let n = self.trials.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let var = self
            .trials
            .iter()
            .map(|t| {
                let d = t.bits_total as f64 - self.avg_bits;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    }

    /// `trial,attempted,solved_all,bits_total,hash_total` rows.
    pub fn write_trials_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "trial,attempted,solved_all,bits_total,hash_total")?;
        for t in &self.trials {
            writeln!(
                w,
                "{},{},{},{},{}",
                t.trial, t.attempted as u8, t.solved_all as u8, t.bits_total, t.hash_total
            )?;
        }
        Ok(())
    }

    /// Flat `key=value` summary lines.
    pub fn summary_text(&self) -> String {
        format!(
            "trials={}\nsuccess_rate={}\navg_bits={}\navg_hash_queries={}\nbits_std_error={}\n",
            self.trials.len(),
            self.success_rate,
            self.avg_bits,
            self.avg_hash_queries,
            self.bits_std_error()
        )
    }
}

fn trial_rng(seed: u64, trial: u32) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"bandwidth-puzzle/trial");
    h.update(seed.to_be_bytes());
    h.update(trial.to_be_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

/// Solves puzzles `[first, last)` for adversary `v` by sequential hash
/// queries, abandoning the block when the oracle stops answering.
///
/// Returns `false` if the budget or a puzzle cap cut the block short.
pub fn solve_block(env: &mut Omega, v: AdversaryId, first: u32, last: u32) -> Result<bool> {
    'puzzles: for p in first..last {
        for j in 1..=env.params().sets_per_puzzle {
            match env.hash_query(v, PuzzleId(p), j)? {
                Some(d) if env.is_confirm(PuzzleId(p), &d) => continue 'puzzles,
                Some(_) => continue,
                None => return Ok(false),
            }
        }
    }
    Ok(true)
}

/// Every adversary downloads the whole content, then solves its own `m`
/// puzzles within its own budget.
pub fn honest_strategy(env: &mut Omega, _rng: &mut ChaCha20Rng) -> Result<()> {
    let per = env.params().puzzles_per_challenge;
    for v in 0..env.adversary_count() {
        env.download_all(AdversaryId(v))?;
        solve_block(env, AdversaryId(v), v * per, (v + 1) * per)?;
    }
    Ok(())
}

/// How many coalition members the simple strategy elects:
/// `ceil(P (L+1) / (2 q_H))`.
pub fn simple_collusion_members(config: &ExperimentConfig) -> u64 {
    let p = config.puzzles() as u128;
    let l = config.params.sets_per_puzzle as u128;
    let q = config.omega.hash_budget as u128;
    (p * (l + 1)).div_ceil(2 * q) as u64
}

/// The simple coalition strategy body: the elected members download the
/// entire content and split the puzzles into contiguous blocks, each
/// member spending its own hash budget on its block.
pub fn simple_collusion_strategy(
    env: &mut Omega,
    members: u32,
    _rng: &mut ChaCha20Rng,
) -> Result<()> {
    let puzzles = env.puzzle_count();
    for w in 0..members {
        let v = AdversaryId(w);
        env.download_all(v)?;
        let first = (w as u64 * puzzles as u64 / members as u64) as u32;
        let last = ((w as u64 + 1) * puzzles as u64 / members as u64) as u32;
        solve_block(env, v, first, last)?;
    }
    Ok(())
}

/// Runs `strategy` once per trial under the experiment's measurement
/// contract. The coalition coin is flipped by the harness; unattempted
/// trials download nothing and fail.
pub fn run_custom<S>(
    config: &ExperimentConfig,
    content: &Content,
    strategy: S,
) -> Result<ExperimentResult>
where
    S: Fn(&mut Omega, &mut ChaCha20Rng) -> Result<()> + Sync,
{
    run_with(config, content, true, &strategy)
}

/// Honest provers: full content for everyone, sigma ignored.
pub fn run_honest(config: &ExperimentConfig, content: &Content) -> Result<ExperimentResult> {
    run_with(config, content, false, &honest_strategy)
}

/// The simple coalition strategy. Errors before running if the member
/// count exceeds the coalition size.
pub fn run_simple_collusion(
    config: &ExperimentConfig,
    content: &Content,
) -> Result<ExperimentResult> {
    let members = simple_collusion_members(config);
    if members > config.adversaries as u64 {
        return Err(Error::Infeasible(format!(
            "simple strategy selects {members} members but only {} adversaries exist",
            config.adversaries
        )));
    }
    let members = members as u32;
    run_with(
        config,
        content,
        true,
        &move |env: &mut Omega, rng: &mut ChaCha20Rng| simple_collusion_strategy(env, members, rng),
    )
}

fn run_with<S>(
    config: &ExperimentConfig,
    content: &Content,
    respect_coin: bool,
    strategy: &S,
) -> Result<ExperimentResult>
where
    S: Fn(&mut Omega, &mut ChaCha20Rng) -> Result<()> + Sync,
{
    config.validate()?;
    if content.len_bits() != config.params.content_bits {
        return Err(Error::ContentSize {
            expected: config.params.content_bits,
            actual: content.len_bits(),
        });
    }
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, content, respect_coin, strategy, trial))
        .collect::<Result<Vec<TrialRecord>>>()?;
    Ok(ExperimentResult::from_trials(trials))
}

fn run_trial<S>(
    config: &ExperimentConfig,
    content: &Content,
    respect_coin: bool,
    strategy: &S,
    trial: u32,
) -> Result<TrialRecord>
where
    S: Fn(&mut Omega, &mut ChaCha20Rng) -> Result<()>,
{
    let mut rng = trial_rng(config.seed, trial);
    let attempted = !respect_coin || rng.gen::<f64>() < config.attempt_probability;
    if !attempted {
        return Ok(TrialRecord {
            trial,
            attempted: false,
            solved_all: false,
            bits_total: 0,
            hash_total: 0,
            confirmed: 0,
        });
    }
    let puzzles = (0..config.puzzles())
        .map(|_| Ok(generate_puzzle(&config.params, content, &mut rng)?.0))
        .collect::<Result<Vec<_>>>()?;
    let mut env = Omega::new(config.omega, content, puzzles, config.adversaries)?;
    strategy(&mut env, &mut rng)?;
    Ok(TrialRecord {
        trial,
        attempted: true,
        solved_all: env.all_confirmed(),
        bits_total: env.stats().total_unique_bits(),
        hash_total: env.stats().total_hash_queries(),
        confirmed: env.confirmed_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            params: PuzzleParams {
                content_bits: 4_096,
                indices_per_set: 16,
                sets_per_puzzle: 10,
                puzzles_per_challenge: 1,
                theta_ms: 1_000,
                kappa_bits: 256,
            },
            adversaries: 1,
            omega: OmegaConfig {
                slack_bits: 4,
                hash_budget: 10,
            },
            attempt_probability: 1.0,
            trials: 40,
            seed: 7,
        }
    }

    fn content_for(config: &ExperimentConfig, seed: u64) -> Content {
        Content::random(
            &mut ChaCha20Rng::seed_from_u64(seed),
            config.params.content_bits,
        )
    }

    #[test]
    fn honest_succeeds_when_budget_covers_worst_case() {
        let config = small_config();
        let content = content_for(&config, 1);
        let result = run_honest(&config, &content).unwrap();
        assert_eq!(result.success_rate, 1.0);
        assert_eq!(result.avg_bits, config.params.content_bits as f64);
    }

    #[test]
    fn honest_ignores_attempt_probability() {
        let mut config = small_config();
        let content = content_for(&config, 2);
        config.attempt_probability = 0.0;
        let a = run_honest(&config, &content).unwrap();
        config.attempt_probability = 1.0;
        let b = run_honest(&config, &content).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.success_rate, 1.0);
    }

    #[test]
    fn honest_reports_partial_success_on_tight_budget() {
        let mut config = small_config();
        // Four puzzles per prover, mean work 4 * 5.5 = 22 > 12.
        config.params.puzzles_per_challenge = 4;
        config.omega.hash_budget = 12;
        let content = content_for(&config, 3);
        let result = run_honest(&config, &content).unwrap();
        assert!(result.success_rate < 1.0);
        assert!(result.trials.iter().all(|t| t.attempted));
    }

    #[test]
    fn honest_mean_queries_near_half_sets() {
        let mut config = small_config();
        config.params.sets_per_puzzle = 9;
        config.omega.hash_budget = 45; // covers the worst case m * L
        config.adversaries = 2;
        config.params.puzzles_per_challenge = 5;
        config.trials = 200;
        let content = content_for(&config, 4);
        let result = run_honest(&config, &content).unwrap();
        assert_eq!(result.success_rate, 1.0);
        let per_puzzle = result.avg_hash_queries / config.puzzles() as f64;
        assert!(
            (per_puzzle - 5.0).abs() < 0.2,
            "mean queries per puzzle {per_puzzle}"
        );
    }

    #[test]
    fn simple_collusion_zero_sigma_downloads_nothing() {
        let mut config = small_config();
        config.adversaries = 4;
        config.attempt_probability = 0.0;
        let content = content_for(&config, 5);
        let result = run_simple_collusion(&config, &content).unwrap();
        assert_eq!(result.success_rate, 0.0);
        assert_eq!(result.avg_bits, 0.0);
        assert!(result.trials.iter().all(|t| !t.attempted));
    }

    #[test]
    fn simple_collusion_bits_match_member_count() {
        // P = 200, L = 99, q_H = 1000: 10 members, 1e6 bits per attempt.
        let config = ExperimentConfig {
            params: PuzzleParams {
                content_bits: 100_000,
                indices_per_set: 16,
                sets_per_puzzle: 99,
                puzzles_per_challenge: 1,
                theta_ms: 1_000,
                kappa_bits: 256,
            },
            adversaries: 200,
            omega: OmegaConfig {
                slack_bits: 4,
                hash_budget: 1_000,
            },
            attempt_probability: 1.0,
            trials: 4,
            seed: 11,
        };
        assert_eq!(simple_collusion_members(&config), 10);
        let content = content_for(&config, 6);
        let result = run_simple_collusion(&config, &content).unwrap();
        assert_eq!(result.avg_bits, 1e6);
        let formula = crate::bounds::simple_strategy_cost(1.0, 1e5, 200.0, 99.0, 1000.0);
        assert_eq!(result.avg_bits, formula);
    }

    #[test]
    fn simple_collusion_infeasible_member_count_is_an_error() {
        // P (L+1) / (2 q_H) = 4 * 100 / 198 -> 3 members > 2 adversaries.
        let mut config = small_config();
        config.adversaries = 2;
        config.params.puzzles_per_challenge = 2;
        config.params.sets_per_puzzle = 99;
        config.omega.hash_budget = 99;
        assert_eq!(simple_collusion_members(&config), 3);
        let content = content_for(&config, 7);
        assert!(matches!(
            run_simple_collusion(&config, &content),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn run_custom_replays_simple_collusion_exactly() {
        let mut config = small_config();
        config.adversaries = 8;
        config.params.puzzles_per_challenge = 2;
        config.omega.hash_budget = 40;
        config.attempt_probability = 0.7;
        let content = content_for(&config, 8);
        let via_runner = run_simple_collusion(&config, &content).unwrap();
        let members = simple_collusion_members(&config) as u32;
        let via_custom = run_custom(&config, &content, |env, rng| {
            simple_collusion_strategy(env, members, rng)
        })
        .unwrap();
        assert_eq!(via_runner, via_custom);
    }

    #[test]
    fn run_custom_giving_up_records_nothing() {
        let config = small_config();
        let content = content_for(&config, 9);
        let result = run_custom(&config, &content, |_env, _rng| Ok(())).unwrap();
        assert_eq!(result.avg_bits, 0.0);
        assert_eq!(result.success_rate, 0.0);
    }

    #[test]
    fn greedy_strategy_downloads_everything_per_adversary() {
        let mut config = small_config();
        config.adversaries = 3;
        config.params.puzzles_per_challenge = 2;
        config.omega.hash_budget = 20;
        let content = content_for(&config, 10);
        let result = run_custom(&config, &content, honest_strategy).unwrap();
        assert_eq!(
            result.avg_bits,
            (config.adversaries as u64 * config.params.content_bits) as f64
        );
        assert_eq!(result.success_rate, 1.0);
    }

    #[test]
    fn simple_collusion_bits_track_formula_when_rounding_is_mild() {
        // P (L+1) / (2 q_H) = 9.9 -> 10 members: the ceiling costs 1.01%,
        // inside the 3% band, over 200 trials.
        let config = ExperimentConfig {
            params: PuzzleParams {
                content_bits: 20_000,
                indices_per_set: 16,
                sets_per_puzzle: 99,
                puzzles_per_challenge: 1,
                theta_ms: 1_000,
                kappa_bits: 256,
            },
            adversaries: 198,
            omega: OmegaConfig {
                slack_bits: 4,
                hash_budget: 1_000,
            },
            attempt_probability: 1.0,
            trials: 200,
            seed: 15,
        };
        assert_eq!(simple_collusion_members(&config), 10);
        let content = content_for(&config, 15);
        let result = run_simple_collusion(&config, &content).unwrap();
        let formula = crate::bounds::simple_strategy_cost(1.0, 2e4, 198.0, 99.0, 1_000.0);
        assert!(
            (result.avg_bits - formula).abs() <= 0.03 * formula,
            "avg_bits {} vs formula {formula}",
            result.avg_bits
        );
    }

    #[test]
    fn identical_seeds_reproduce_identical_results() {
        let mut config = small_config();
        config.adversaries = 4;
        config.attempt_probability = 0.5;
        let content = content_for(&config, 11);
        let a = run_simple_collusion(&config, &content).unwrap();
        let b = run_simple_collusion(&config, &content).unwrap();
        assert_eq!(a, b);
        config.seed += 1;
        let c = run_simple_collusion(&config, &content).unwrap();
        assert_ne!(a.trials, c.trials);
    }

    #[test]
    fn success_rises_with_puzzles_at_fixed_member_ratio() {
        // Ratio P(L+1)/(2 q_H) fixed at 2.5125: the member count stays 3
        // while the per-member slack grows with P.
        let mut rates = Vec::new();
        for (m, q) in [(4u32, 4_000u64), (8, 8_000), (16, 16_000)] {
            let config = ExperimentConfig {
                params: PuzzleParams {
                    content_bits: 10_000,
                    indices_per_set: 50,
                    sets_per_puzzle: 200,
                    puzzles_per_challenge: m,
                    theta_ms: 1_000,
                    kappa_bits: 256,
                },
                adversaries: 25,
                omega: OmegaConfig {
                    slack_bits: 20,
                    hash_budget: q,
                },
                attempt_probability: 1.0,
                trials: 40,
                seed: 13,
            };
            assert_eq!(simple_collusion_members(&config), 3);
            let content = content_for(&config, 12);
            rates.push(
                run_simple_collusion(&config, &content)
                    .unwrap()
                    .success_rate,
            );
        }
        assert!(
            rates[0] <= rates[1] + 0.05 && rates[1] <= rates[2] + 0.05,
            "{rates:?}"
        );
        assert!(rates[2] > rates[0] - 0.05 && rates[2] >= 0.9, "{rates:?}");
    }

    #[test]
    fn trials_csv_and_summary_shape() {
        let config = small_config();
        let content = content_for(&config, 14);
        let result = run_honest(&config, &content).unwrap();
        let mut out = Vec::new();
        result.write_trials_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("trial,attempted,solved_all,bits_total,hash_total\n"));
        assert_eq!(text.lines().count(), 1 + config.trials as usize);
        let summary = result.summary_text();
        assert!(summary.contains("success_rate=1"));
        assert!(summary.contains("avg_bits=4096"));
    }
}
