//! Closed-form evaluation of the download lower bounds and the parameter
//! conditions under which they are tight.
//!
//! The chain is: an adversary coalition solving puzzles with a given
//! probability must make a floor number of informed hash queries
//! ([`informed_query_floor`]); informed queries force unique content
//! indices ([`unique_floor_single`], [`multi_unique_min`],
//! [`multi_unique_avg_floor`], all resting on the coupon-collector tail of
//! [`coupon_tail`] and the two-point linear-program optimum of
//! [`lp_closed_form`]); assembling the pieces gives [`single_bound`] and
//! [`multi_bound`], which [`check_parameters`] certifies as dominated by
//! their leading term. Every closed form here is checked against an
//! independent brute-force oracle in the tests.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

/// `N(1 − (1 − 1/N)^c)`: expected unique indices among `c` uniform draws
/// with repetition from `N`. Evaluated via `log1p`/`expm1` so it stays
/// accurate when `1/N` underflows a plain subtraction.
pub fn expected_unique(content_bits: f64, draws: f64) -> f64 {
    if draws <= 0.0 {
        return 0.0;
    }
    // N(1 - exp(c ln(1-1/N)))
    -content_bits * (draws * (-1.0 / content_bits).ln_1p()).exp_m1()
}

/// A coupon-collector lower-tail bound: `Pr[Y <= mu]` for the unique count
/// `Y` among `c` draws, with `mu` set a `(1-delta)` fraction below the mean.
#[derive(Clone, Copy, Debug)]
pub struct CouponTail {
    /// The threshold `mu = (1-delta) N (1 - (1-1/N)^c)`.
    pub mu: f64,
    /// The standardized deviation; the bound needs `eta > 0`.
    pub eta: f64,
    /// `min(1, e^{-eta^2/2} / (sqrt(2 pi) eta))`, or 1 when vacuous.
    pub tail: f64,
    /// Natural log of `tail` (0 when vacuous); safe for union bounds that
    /// would underflow.
    pub log_tail: f64,
    /// False when `eta <= 0` and the bound says nothing.
    pub valid: bool,
}

impl CouponTail {
    fn vacuous(mu: f64, eta: f64) -> Self {
        CouponTail {
            mu,
            eta,
            tail: 1.0,
            log_tail: 0.0,
            valid: false,
        }
    }
}

/// Tail bound on the unique-index count falling `delta` below its mean.
pub fn coupon_tail(content_bits: f64, draws: f64, deviation: f64) -> Result<CouponTail> {
    if !(0.0 < deviation && deviation < 1.0) {
        return Err(Error::InvalidParams(format!(
            "deviation must be in (0, 1), got {deviation}"
        )));
    }
    if content_bits < 1.0 {
        return Err(Error::InvalidParams(
            "content_bits must be at least 1".into(),
        ));
    }
    let mu = (1.0 - deviation) * expected_unique(content_bits, draws);
    if draws <= 0.0 || mu <= 0.0 {
        return Ok(CouponTail::vacuous(mu, f64::INFINITY));
    }
    let n = content_bits;
    // N ln(N/(N-mu)) and N^2 (1/(N-mu) - 1/N) = N mu/(N-mu), kept in
    // subtraction-free forms.
    let log_term = -n * (-mu / n).ln_1p();
    let denom = n * (mu / (n * (n - mu))).sqrt();
    let eta = (draws - log_term) / denom;
    if !eta.is_finite() || eta <= 0.0 {
        return Ok(CouponTail::vacuous(mu, eta));
    }
    let log_tail = -eta * eta / 2.0 - ((2.0 * PI).sqrt() * eta).ln();
    let log_tail = log_tail.min(0.0);
    Ok(CouponTail {
        mu,
        eta,
        tail: log_tail.exp(),
        log_tail,
        valid: true,
    })
}

/// Union bound over every choice of `sets` index sets out of a universe of
/// `universe` sets: the [`coupon_tail`] of `sets * set_size` draws times
/// `universe^sets`, combined in log space.
pub fn union_tail(
    content_bits: f64,
    set_size: f64,
    sets: f64,
    deviation: f64,
    universe: f64,
) -> Result<CouponTail> {
    if universe < 1.0 {
        return Err(Error::InvalidParams(format!(
            "universe must be at least 1, got {universe}"
        )));
    }
    let base = coupon_tail(content_bits, sets * set_size, deviation)?;
    if !base.valid {
        return Ok(base);
    }
    let log_tail = (base.log_tail + sets * universe.ln()).min(0.0);
    Ok(CouponTail {
        tail: log_tail.exp(),
        log_tail,
        ..base
    })
}

fn two_pow_neg(bits: u32) -> f64 {
    (-(bits as f64) * LN_2).exp()
}

/// Minimum average number of informed hash queries any oracle-environment
/// algorithm confirming with probability `omega_advantage` must make:
/// `max(0, (epsilon - 2^-V)(L+1)/2)`.
pub fn informed_query_floor(omega_advantage: f64, slack_bits: u32, sets_per_puzzle: u32) -> f64 {
    let effective = omega_advantage - two_pow_neg(slack_bits);
    (effective * (sets_per_puzzle as f64 + 1.0) / 2.0).max(0.0)
}

/// Optimal value of: maximize `sum P_i e^{-i d}` over distributions on
/// `{0..L}` with total mass `gamma` and mean `beta`. The optimum puts all
/// mass on the endpoints, giving `gamma - (1 - e^{-L d}) beta / L`.
pub fn lp_closed_form(sets_per_puzzle: u32, decay: f64, mean_sets: f64, mass: f64) -> Result<f64> {
    let l = sets_per_puzzle as f64;
    if sets_per_puzzle == 0 {
        return Err(Error::InvalidParams("L must be at least 1".into()));
    }
    if decay.is_nan() || decay < 0.0 {
        return Err(Error::InvalidParams(format!(
            "decay must be nonnegative, got {decay}"
        )));
    }
    if !(0.0..=1.0).contains(&mass) {
        return Err(Error::InvalidParams(format!(
            "mass must be in [0, 1], got {mass}"
        )));
    }
    if !(0.0 <= mean_sets && mean_sets <= mass * l) {
        return Err(Error::InvalidParams(format!(
            "mean {mean_sets} outside [0, {}]",
            mass * l
        )));
    }
    Ok(mass - (-(-(l * decay)).exp_m1()) * mean_sets / l)
}

/// Single-adversary unique-index floor: with `beta` index sets hashed on
/// average, at least `(1-delta) N (1 - e^{-L n / N}) beta / L` unique
/// indices are involved.
pub fn unique_floor_single(
    mean_sets: f64,
    content_bits: f64,
    set_size: f64,
    sets_per_puzzle: f64,
    deviation: f64,
) -> f64 {
    let decay = sets_per_puzzle * set_size / content_bits;
    (1.0 - deviation) * content_bits * (-(-decay).exp_m1()) * mean_sets / sets_per_puzzle
}

/// Multi-adversary unique-index floor for exactly `informed_queries`
/// informed queries split across adversaries, each capped at `hash_budget`:
/// the minimum is the saturated split, `t` full adversaries plus one
/// remainder, `t = floor(T / q_H)`.
pub fn multi_unique_min(
    informed_queries: f64,
    hash_budget: f64,
    content_bits: f64,
    set_size: f64,
    deviation: f64,
) -> f64 {
    if informed_queries <= 0.0 {
        return 0.0;
    }
    let d = set_size / content_bits;
    let t = (informed_queries / hash_budget).floor();
    let remainder = informed_queries - hash_budget * t;
    (1.0 - deviation)
        * content_bits
        * (t * (-(-hash_budget * d).exp_m1()) + (-(-remainder * d).exp_m1()))
}

/// Multi-adversary unique-index floor when the *average* number of
/// informed queries is `mean_queries`:
/// `(1-delta) N beta (1 - e^{-q_H n / N}) / q_H`.
pub fn multi_unique_avg_floor(
    mean_queries: f64,
    hash_budget: f64,
    content_bits: f64,
    set_size: f64,
    deviation: f64,
) -> f64 {
    let d = set_size / content_bits;
    (1.0 - deviation) * content_bits * mean_queries * (-(-hash_budget * d).exp_m1()) / hash_budget
}

/// Cost of the simple coalition strategy: `sigma N P (L+1) / (2 q_H)`
/// bits downloaded on average.
pub fn simple_strategy_cost(
    sigma: f64,
    content_bits: f64,
    puzzles: f64,
    sets_per_puzzle: f64,
    hash_budget: f64,
) -> f64 {
    sigma * content_bits * puzzles * (sets_per_puzzle + 1.0) / (2.0 * hash_budget)
}

/// Everything the bound formulas consume.
#[derive(Clone, Copy, Debug)]
pub struct BoundInputs {
    /// N: content size in bits.
    pub content_bits: u64,
    /// n: indices per index set.
    pub indices_per_set: u32,
    /// L: index sets per puzzle.
    pub sets_per_puzzle: u32,
    /// m: puzzles per challenged prover.
    pub puzzles_per_challenge: u32,
    /// q_H: hash-query budget per adversary.
    pub hash_budget: u64,
    /// V: informedness slack in bits.
    pub slack_bits: u32,
    /// delta: unique-index deviation fraction, in (0, 1).
    pub deviation: f64,
    /// sigma: target solving probability in the real environment.
    pub target_advantage: f64,
    /// epsilon: solving probability in the oracle environment.
    pub omega_advantage: f64,
    /// A: number of adversaries.
    pub adversaries: u64,
}

impl BoundInputs {
    /// P = A·m: the total number of puzzles in play.
    pub fn puzzles(&self) -> u64 {
        self.adversaries * self.puzzles_per_challenge as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.content_bits == 0
            || self.indices_per_set == 0
            || self.sets_per_puzzle == 0
            || self.puzzles_per_challenge == 0
            || self.hash_budget == 0
            || self.adversaries == 0
        {
            return Err(Error::InvalidParams("all counts must be positive".into()));
        }
        if !(0.0 < self.deviation && self.deviation < 1.0) {
            return Err(Error::InvalidParams(format!(
                "deviation must be in (0, 1), got {}",
                self.deviation
            )));
        }
        for (name, v) in [
            ("sigma", self.target_advantage),
            ("epsilon", self.omega_advantage),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be in [0, 1], got {v}"
                )));
            }
        }
        if self.slack_bits == 0 || self.slack_bits >= self.indices_per_set {
            return Err(Error::InvalidParams(format!(
                "slack bits must satisfy 0 < V < n, got V={} n={}",
                self.slack_bits, self.indices_per_set
            )));
        }
        Ok(())
    }
}

/// One evaluated lower bound, split into its leading term and the named
/// deductions, with the clamped total.
#[derive(Clone, Debug)]
pub struct BoundResult {
    /// The unique-index floor before deductions, in bits.
    pub dominant_term: f64,
    /// Named deductions, in bits.
    pub penalty_terms: Vec<(&'static str, f64)>,
    /// `dominant - penalties`, possibly negative.
    pub raw_total: f64,
    /// `max(0, raw_total)`; a vacuous bound clamps to zero.
    pub total: f64,
}

impl BoundResult {
    fn assemble(dominant_term: f64, penalty_terms: Vec<(&'static str, f64)>) -> Self {
        let raw_total = dominant_term - penalty_terms.iter().map(|(_, v)| v).sum::<f64>();
        BoundResult {
            dominant_term,
            penalty_terms,
            raw_total,
            total: raw_total.max(0.0),
        }
    }

    pub fn penalty_sum(&self) -> f64 {
        self.penalty_terms.iter().map(|(_, v)| v).sum()
    }
}

/// Lower bound on the average bits one adversary must download to solve
/// one puzzle with probability `sigma`.
pub fn single_bound(inputs: &BoundInputs) -> BoundResult {
    let n = inputs.content_bits as f64;
    let set = inputs.indices_per_set as f64;
    let l = inputs.sets_per_puzzle as f64;
    let q = inputs.hash_budget as f64;
    let v = inputs.slack_bits;

    let advantage = (inputs.target_advantage - (q + 1.0) * two_pow_neg(v)).max(0.0);
    let query_floor = advantage * (l + 1.0) / 2.0;
    let dominant = unique_floor_single(query_floor, n, set, l, inputs.deviation);
    BoundResult::assemble(
        dominant,
        vec![
            ("set_slack", l * (v as f64 - 1.0)),
            ("simulation_overhead", l * set * q * two_pow_neg(v)),
            ("confirm_completion", v as f64),
        ],
    )
}

/// Lower bound on the average bits `A` adversaries must download in total
/// to solve all `P = A·m` puzzles with probability `sigma`.
pub fn multi_bound(inputs: &BoundInputs) -> BoundResult {
    let n = inputs.content_bits as f64;
    let set = inputs.indices_per_set as f64;
    let l = inputs.sets_per_puzzle as f64;
    let q = inputs.hash_budget as f64;
    let v = inputs.slack_bits;
    let p = inputs.puzzles() as f64;
    let a = inputs.adversaries as f64;

    let advantage = (inputs.target_advantage - (q + 1.0) * two_pow_neg(v)).max(0.0);
    let query_floor = p * advantage * (l + 1.0) / 2.0;
    let dominant = multi_unique_avg_floor(query_floor, q, n, set, inputs.deviation);
    BoundResult::assemble(
        dominant,
        vec![
            ("set_slack", p * l * (v as f64 - 1.0)),
            ("simulation_overhead", p * l * set * a * q * two_pow_neg(v)),
            ("confirm_completion", v as f64 * p),
        ],
    )
}

/// One named pass/fail check with a human-readable detail line.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// The tightness conditions and published parameter ranges, each reported
/// individually.
#[derive(Clone, Debug)]
pub struct ParamReport {
    pub conditions: Vec<Check>,
    pub ranges: Vec<Check>,
}

impl ParamReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().chain(&self.ranges).all(|c| c.pass)
    }
}

/// Scans the union tail over every set count `s >= 1`, returning the worst
/// (largest) log tail, where it occurs, and whether every scanned point was
/// a valid bound.
pub fn union_tail_sup(
    content_bits: f64,
    set_size: f64,
    deviation: f64,
    universe: f64,
) -> Result<(f64, u64, bool)> {
    let mut worst = f64::NEG_INFINITY;
    let mut worst_s = 0u64;
    let mut all_valid = true;
    let mut s = 1u64;
    loop {
        let tail = union_tail(content_bits, set_size, s as f64, deviation, universe)?;
        if !tail.valid {
            all_valid = false;
        }
        if tail.log_tail > worst {
            worst = tail.log_tail;
            worst_s = s;
        }
        // Past a few multiples of N the exponent shrinks quadratically in s
        // while the union factor only grows linearly; stop once deep under.
        let saturated = s as f64 * set_size > 8.0 * content_bits;
        let deep_under = tail.log_tail < worst - 200.0;
        if (saturated && (deep_under || !tail.valid)) || deep_under || s > 2_000_000 {
            break;
        }
        s += 1;
    }
    Ok((worst, worst_s, all_valid))
}

const UNION_TAIL_TARGET: f64 = 1e-12;

/// Evaluates the five tightness conditions and the five published
/// parameter ranges. "Much larger/smaller" conditions use a factor of 100.
pub fn check_parameters(inputs: &BoundInputs) -> Result<ParamReport> {
    inputs.validate()?;
    let n = inputs.content_bits as f64;
    let set = inputs.indices_per_set as f64;
    let l = inputs.sets_per_puzzle as f64;
    let m = inputs.puzzles_per_challenge as f64;
    let q = inputs.hash_budget as f64;
    let v = inputs.slack_bits as f64;
    let a = inputs.adversaries as f64;
    let universe = inputs.puzzles() as f64 * l;

    let (worst_log, worst_s, all_valid) =
        union_tail_sup(n, set, inputs.deviation, universe.max(1.0))?;
    let worst_log10 = worst_log / std::f64::consts::LN_10;
    let cond1_pass = inputs.deviation <= 0.1 && all_valid && worst_log < UNION_TAIL_TARGET.ln();
    let cond1 = Check {
        name: "deviation_tail_negligible",
        pass: cond1_pass,
        detail: format!(
            "delta={}, worst union tail 1e{:.1} at s={worst_s} (universe {universe:.3e}), target < 1e-12{}",
            inputs.deviation,
            worst_log10,
            if all_valid { "" } else { "; tail vacuous for some s" }
        ),
    };

    let exponent = q * set / n;
    let cond2 = Check {
        name: "unsaturated_exponent_small",
        pass: exponent >= 4.0,
        detail: format!(
            "e^(-q_H n / N) = e^(-{exponent:.3}), requires exponent >= 4 (q_H n >= 4 N)"
        ),
    };

    // log2 comparisons keep 2^V out of overflow range.
    let log2_aq = (a * q).log2();
    let cond3 = Check {
        name: "slack_dwarfs_budget",
        pass: v >= (100.0 * a * q).log2(),
        detail: format!(
            "2^V vs 100 A q_H: V={v}, log2(100 A q_H)={:.1}",
            (100.0 * a * q).log2()
        ),
    };
    let cond4 = Check {
        name: "slack_covers_set_budget",
        pass: v >= (set * a * q).log2(),
        detail: format!(
            "2^V vs n A q_H: V={v}, log2(n A q_H)={:.1} (log2(A q_H)={log2_aq:.1})",
            (set * a * q).log2()
        ),
    };
    let cond5 = Check {
        name: "slack_well_below_set_size",
        pass: v <= set / 100.0,
        detail: format!("V={v} vs n/100={}", set / 100.0),
    };

    let ranges = vec![
        Check {
            name: "content_bits_at_least_1e7",
            pass: n >= 1e7,
            detail: format!("N={n:.3e}, requires N >= 1e7"),
        },
        Check {
            name: "set_size_in_1e4_to_1e6",
            pass: (1e4..=1e6).contains(&set),
            detail: format!("n={set:.3e}, requires 1e4 <= n <= 1e6"),
        },
        Check {
            name: "sets_times_puzzles_at_most_1e6",
            pass: l * m <= 1e6,
            detail: format!("L m={:.3e}, requires L m <= 1e6", l * m),
        },
        Check {
            name: "budget_times_set_size_at_least_4n",
            pass: q * set >= 4.0 * n,
            detail: format!("q_H n={:.3e} vs 4N={:.3e}", q * set, 4.0 * n),
        },
        Check {
            name: "budget_at_most_1e6",
            pass: q <= 1e6,
            detail: format!("q_H={q:.3e}, requires q_H <= 1e6"),
        },
    ];

    Ok(ParamReport {
        conditions: vec![cond1, cond2, cond3, cond4, cond5],
        ranges,
    })
}
