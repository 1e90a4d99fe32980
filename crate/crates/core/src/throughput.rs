//! Block throughputs of both networks from the stationary battery law.
//!
//! Secondary side. The ST delivers in a block iff the first-slot charge
//! reaches the transmit level (`i + mu + nu >= t`) and the HAP-link harvest
//! level `nu` simultaneously certifies that the ST->HAP hop clears the SINR
//! target. The certification threshold is [`min_level_s`]: the hop SINR is
//! `2 e_t n0 Y_2 / (p_d (n0 + p_d h_dd))` and level `nu >= s` is the
//! smallest level event implying it reaches `gamma0`. Averaging over the
//! stationary law gives the outage [`secondary_outage_prob`] and
//! `R_d = (1 - P_od) r0 / 2`.
//!
//! Primary side. PR always hears the direct PT signal plus the
//! decode-and-forward HAP path; only the relay hop changes with the ST
//! state, so `R_b` splits over the probability [`mid_block_deficit_prob`]
//! that a block stays in harvesting mode (no ST interference). The default
//! evaluation drops the ST interference from the transmitting branch as
//! well, which overshoots `R_b` by the (small) interference mass; the
//! `exact` flag conditions that branch on the ST->PR gain instead.

use crate::analytic::{cdf_combined_sinr, HalfSlotLevels, InterferenceMode};
use crate::markov::{build_transition_matrix, stationary_distribution};
use crate::params::{Scenario, GRID_EPS};
use crate::specfun::reg_lower_gamma_int;
use crate::Result;

/// Smallest harvest level of the HAP link that certifies the ST->HAP hop:
/// `s = ceil(eta p_d gamma0 L (n0 + p_d h_dd) / (4 C e_t))`, with the usual
/// grid slack so an exactly-integer ratio is not pushed up a level. A zero
/// SINR target gives `s = 0` (any level qualifies); an `s` beyond `L` means
/// the certification energy exceeds the battery grid and no level qualifies.
pub fn min_level_s(scenario: &Scenario) -> u64 {
    let cfg = &scenario.config;
    let b = &scenario.battery;
    let raw = cfg.eta * cfg.p_d * cfg.gamma0 * b.levels as f64 * cfg.hap_noise()
        / (4.0 * b.capacity * b.e_t);
    if raw <= 0.0 {
        0
    } else {
        (raw - GRID_EPS).ceil().max(0.0) as u64
    }
}

/// Secondary outage probability: the stationary probability that a block
/// carries no certified ST delivery,
/// `P_od = 1 - sum_i pi_i Pr{ i + mu + nu >= t, nu >= s }`.
pub fn secondary_outage_prob(scenario: &Scenario, pi: &[f64]) -> f64 {
    let b = &scenario.battery;
    let levels = HalfSlotLevels::new(&scenario.links(), b, &scenario.config);
    let p1 = levels.link_probs(1);
    let p2 = levels.link_probs(2);
    let l = b.levels as usize;
    let s = min_level_s(scenario);

    // tail sums of the PT-link levels: tail1[k] = Pr{ mu >= k }
    let mut tail1 = vec![0.0; l + 2];
    for k in (0..=l).rev() {
        tail1[k] = tail1[k + 1] + p1[k];
    }

    let mut delivered = 0.0;
    for (i, &w) in pi.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let mut p = 0.0;
        for nu in 0..=l {
            if (nu as u64) < s {
                continue;
            }
            let need = b.t as usize;
            let have = i + nu;
            let mu_min = need.saturating_sub(have).min(l + 1);
            p += p2[nu] * tail1[mu_min];
        }
        delivered += w * p;
    }
    (1.0 - delivered).clamp(0.0, 1.0)
}

/// Probability that a block stays in harvesting mode: the first-slot charge
/// misses the transmit level, `P_ob = sum_{i < t} pi_i Pr{ mu + nu < t - i }`.
pub fn mid_block_deficit_prob(scenario: &Scenario, pi: &[f64]) -> f64 {
    let b = &scenario.battery;
    let levels = HalfSlotLevels::new(&scenario.links(), b, &scenario.config);
    let p1 = levels.link_probs(1);
    let p2 = levels.link_probs(2);
    let l = b.levels as usize;

    // prefix sums of the PT-link levels: head1[k] = Pr{ mu <= k }
    let mut head1 = vec![0.0; l + 1];
    let mut acc = 0.0;
    for k in 0..=l {
        acc += p1[k];
        head1[k] = acc;
    }

    let t = b.t as usize;
    let mut deficit = 0.0;
    for (i, &w) in pi.iter().enumerate().take(t) {
        if w == 0.0 {
            continue;
        }
        let budget = t - 1 - i; // mu + nu <= budget
        let mut p = 0.0;
        for nu in 0..=budget.min(l) {
            p += p2[nu] * head1[(budget - nu).min(l)];
        }
        deficit += w * p;
    }
    deficit.clamp(0.0, 1.0)
}

/// Secondary block throughput `R_d = (1 - P_od) r0 / 2`.
pub fn secondary_throughput(scenario: &Scenario, pi: &[f64]) -> f64 {
    0.5 * scenario.config.r0() * (1.0 - secondary_outage_prob(scenario, pi))
}

/// Primary block throughput
/// `R_b = (r0 / 2) [ (1 - P_ob)(1 - F_tx(gamma0)) + P_ob (1 - F_h(gamma0)) ]`,
/// where `F_h` is the combined-SINR CDF without ST interference and `F_tx`
/// either ignores the interference too (`exact = false`) or conditions on
/// the ST->PR gain (`exact = true`).
pub fn primary_throughput(scenario: &Scenario, pi: &[f64], exact: bool) -> Result<f64> {
    let cfg = &scenario.config;
    let links = scenario.links();
    let p_ob = mid_block_deficit_prob(scenario, pi);
    let quiet = 1.0 - cdf_combined_sinr(cfg.gamma0, &links, InterferenceMode::Off)?;
    let busy = if exact {
        1.0 - cdf_combined_sinr(cfg.gamma0, &links, InterferenceMode::Exact)?
    } else {
        quiet
    };
    Ok(0.5 * cfg.r0() * ((1.0 - p_ob) * busy + p_ob * quiet))
}

/// Throughputs of the non-cooperative reference system: the PT talks to PR
/// directly (no HAP, no ST, hence no secondary network at all). By default
/// the direct link gets the whole block; `baseline_half_block` restricts it
/// to the same half-block slotting as the cooperative scheme.
pub fn baseline_throughputs(scenario: &Scenario) -> (f64, f64) {
    let cfg = &scenario.config;
    let l6 = scenario.links().get(6).clone();
    let success = 1.0 - reg_lower_gamma_int(l6.m, l6.beta * cfg.gamma0);
    let rate = if cfg.baseline_half_block { 0.5 * cfg.r0() } else { cfg.r0() };
    (rate * success, 0.0)
}

/// Everything the analytical engine reports for one scenario.
#[derive(Debug, Clone)]
pub struct ThroughputReport {
    pub r_d: f64,
    pub r_b: f64,
    pub p_od: f64,
    pub p_ob: f64,
    pub s: u64,
    pub baseline_primary: f64,
    pub baseline_secondary: f64,
}

/// Runs the full analytical pipeline: transition matrix, stationary law,
/// outage probabilities, throughputs.
pub fn analytic_report(scenario: &Scenario, exact: bool) -> Result<ThroughputReport> {
    let v = build_transition_matrix(scenario)?;
    let pi = stationary_distribution(&v)?;
    let p_od = secondary_outage_prob(scenario, &pi);
    let p_ob = mid_block_deficit_prob(scenario, &pi);
    let r_d = secondary_throughput(scenario, &pi);
    let r_b = primary_throughput(scenario, &pi, exact)?;
    let (baseline_primary, baseline_secondary) = baseline_throughputs(scenario);
    Ok(ThroughputReport {
        r_d,
        r_b,
        p_od,
        p_ob,
        s: min_level_s(scenario),
        baseline_primary,
        baseline_secondary,
    })
}
