//! Independent brute-force oracles backing the closed forms in
//! [`crate::bounds`]. Test-only (enabled by the `test-oracles` feature);
//! nothing here shares code with the implementations it checks.

use rand::Rng;

/// Extremum of a two-constraint linear program by vertex enumeration:
/// extremize `sum costs[i] P_i` over `P_i >= 0` with `sum P_i = mass` and
/// `sum i P_i = mean`. Every vertex has at most two nonzero coordinates.
pub fn lp_two_constraint(costs: &[f64], mass: f64, mean: f64, maximize: bool) -> Option<f64> {
    let eps = 1e-12 * (1.0 + mass.abs() + mean.abs());
    let mut best: Option<f64> = None;
    let mut consider = |value: f64| {
        best = Some(match best {
            None => value,
            Some(b) if maximize => b.max(value),
            Some(b) => b.min(value),
        });
    };
    if mass.abs() <= eps && mean.abs() <= eps {
        consider(0.0);
    }
    for i in 0..costs.len() {
        // Single-point support.
        if (i as f64 * mass - mean).abs() <= eps {
            consider(costs[i] * mass);
        }
        for j in (i + 1)..costs.len() {
            let pj = (mean - i as f64 * mass) / (j - i) as f64;
            let pi = mass - pj;
            if pi >= -eps && pj >= -eps {
                consider(costs[i] * pi.max(0.0) + costs[j] * pj.max(0.0));
            }
        }
    }
    best
}

/// Minimum of `sum_v (1 - e^{-s_v * decay})` over integer loads
/// `0 <= s_v <= budget` for `parts` adversaries with `sum s_v = total`,
/// by exhaustive composition search.
pub fn min_unique_over_partitions(total: u64, budget: u64, parts: u32, decay: f64) -> Option<f64> {
    use std::collections::HashMap;
    fn go(
        remaining: u64,
        parts_left: u32,
        budget: u64,
        decay: f64,
        memo: &mut HashMap<(u64, u32), Option<f64>>,
    ) -> Option<f64> {
        if parts_left == 0 {
            return (remaining == 0).then_some(0.0);
        }
        if let Some(&cached) = memo.get(&(remaining, parts_left)) {
            return cached;
        }
        let mut best: Option<f64> = None;
        for s in 0..=budget.min(remaining) {
            if let Some(rest) = go(remaining - s, parts_left - 1, budget, decay, memo) {
                let here = -(-(s as f64) * decay).exp_m1() + rest;
                best = Some(best.map_or(here, |b: f64| b.min(here)));
            }
        }
        memo.insert((remaining, parts_left), best);
        best
    }
    go(total, parts, budget, decay, &mut HashMap::new())
}

/// Minimum expected number of hash queries over all stopping policies that
/// confirm with probability exactly `confirm_prob`, for a puzzle with
/// `sets` index sets. Works in the survival-mass formulation, which is
/// again a two-constraint LP.
pub fn min_expected_queries(sets: u32, confirm_prob: f64) -> Option<f64> {
    let l = sets as f64;
    if !(0.0..=1.0).contains(&confirm_prob) {
        return None;
    }
    // Mass z_j at "survive exactly j rounds"; cost of z_j is the expected
    // query count it contributes, the confirm probability it contributes
    // is j/L.
    let costs: Vec<f64> = (0..=sets)
        .map(|j| {
            let j = j as f64;
            j * (2.0 * l - j + 1.0) / (2.0 * l)
        })
        .collect();
    lp_two_constraint(&costs, 1.0, l * confirm_prob, false)
}

/// Minimum of the multi-adversary unique-index objective over all query
/// distributions with mean `mean`, on supports `0..=total_sets` with
/// per-adversary budget `budget`. The cost of `i` queries is the saturated
/// partition value.
pub fn min_avg_unique(total_sets: u32, budget: u32, decay: f64, mean: f64) -> Option<f64> {
    let q = budget as u64;
    let costs: Vec<f64> = (0..=total_sets as u64)
        .map(|i| {
            let full = (i / q) as f64;
            let rem = (i % q) as f64;
            full * (-(-(q as f64) * decay).exp_m1()) + (-(-rem * decay).exp_m1())
        })
        .collect();
    lp_two_constraint(&costs, 1.0, mean, false)
}

/// Draws `draws` indices uniformly with repetition from `[0, content_bits)`
/// and counts distinct values.
pub fn sample_unique_count(rng: &mut impl Rng, content_bits: u64, draws: u64) -> u64 {
    let words = content_bits.div_ceil(64) as usize;
    let mut seen = vec![0u64; words];
    let mut unique = 0u64;
    for _ in 0..draws {
        let idx = rng.gen_range(0..content_bits);
        let (w, b) = ((idx / 64) as usize, idx % 64);
        if seen[w] >> b & 1 == 0 {
            seen[w] |= 1 << b;
            unique += 1;
        }
    }
    unique
}
