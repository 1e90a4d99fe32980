//! Block-level Monte Carlo simulation of the relaying network.
//!
//! The simulator shares nothing with the analytical chain except the
//! scenario parameters: it draws the six link gains per block, tracks the
//! ST battery, applies the mode rule, and scores both transmissions from
//! the raw SINRs. Two battery treatments are available:
//!
//! * [`BatteryMode::Continuous`] keeps the battery in joules and compares
//!   energies exactly. This is the physical model; the analytical chain
//!   approaches it as the level count grows.
//! * [`BatteryMode::Discretized`] quantizes each half-slot harvest to
//!   battery levels and applies integer arithmetic, mirroring the chain
//!   state for state, which makes simulated transition frequencies and
//!   level occupancies directly comparable to the matrix and its
//!   stationary law.
//!
//! Replicas run on separate counter-based RNG streams addressed by the
//! replica index, so a multi-threaded run produces bit-identical totals to
//! a sequential one: each replica's counts depend only on `(seed, index)`,
//! and merging sums integers.

use crate::analytic::InterferenceMode;
use crate::fading::{block_sample, RngStream};
use crate::markov::{battery_level_of_energy, discretize_energy, step_battery, BlockMode};
use crate::params::Scenario;
use crate::throughput::min_level_s;
use crate::{Error, Result};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How the simulator tracks the ST battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatteryMode {
    /// Energy in joules, exact threshold comparisons.
    Continuous,
    /// Level arithmetic identical to the analytical chain.
    Discretized,
}

/// Upper bound on recorded trace rows; traces are a debugging aid, not a
/// bulk output format.
pub const TRACE_CAP: usize = 10_000;

#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Total simulated blocks across all replicas.
    pub n_blocks: u64,
    pub seed: u64,
    pub battery_mode: BatteryMode,
    /// Whether the ST's own transmission degrades the HAP->PR hop.
    pub interference: InterferenceMode,
    /// Independent replicas, each on its own RNG stream.
    pub replicas: u32,
    /// Record start-of-block battery level occupancies.
    pub record_histogram: bool,
    /// Record level-to-level transition counts.
    pub record_transitions: bool,
    /// Record a per-block trace (first replica only, capped).
    pub record_trace: bool,
}

impl Default for SimOptions {
    fn default() -> SimOptions {
        SimOptions {
            n_blocks: 1_000_000,
            seed: 1,
            battery_mode: BatteryMode::Continuous,
            interference: InterferenceMode::Exact,
            replicas: 1,
            record_histogram: false,
            record_transitions: false,
            record_trace: false,
        }
    }
}

/// One block of the recorded trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub block: u64,
    pub start_level: u32,
    pub mode: BlockMode,
    pub secondary_ok: bool,
    pub primary_ok: bool,
}

/// Aggregated outcome of a simulation run.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub blocks: u64,
    /// Blocks in which the ST transmitted.
    pub transmit_blocks: u64,
    /// Transmit blocks whose ST->HAP hop cleared the SINR target.
    pub secondary_success: u64,
    /// Blocks whose combined primary SINR cleared the target.
    pub primary_success: u64,
    /// Secondary throughput estimate and its binomial standard error.
    pub r_d: f64,
    pub r_d_stderr: f64,
    /// Primary throughput estimate and its binomial standard error.
    pub r_b: f64,
    pub r_b_stderr: f64,
    /// Estimated secondary outage probability.
    pub p_od: f64,
    /// Estimated probability of a harvesting (no-transmission) block.
    pub p_ob: f64,
    /// Start-of-block battery level counts, length `L + 1`.
    pub histogram: Option<Vec<u64>>,
    /// Row-major `(L + 1)^2` transition counts.
    pub transitions: Option<Vec<u64>>,
    pub trace: Option<Vec<TraceRow>>,
}

impl SimReport {
    /// Battery level frequencies, normalized to a distribution.
    pub fn empirical_battery_distribution(&self) -> Option<Vec<f64>> {
        self.histogram.as_ref().map(|h| {
            let total: u64 = h.iter().sum();
            h.iter().map(|&c| c as f64 / total as f64).collect()
        })
    }
}

struct ReplicaOutcome {
    blocks: u64,
    transmit_blocks: u64,
    secondary_success: u64,
    primary_success: u64,
    histogram: Option<Vec<u64>>,
    transitions: Option<Vec<u64>>,
    trace: Option<Vec<TraceRow>>,
}

fn run_replica(scenario: &Scenario, opts: &SimOptions, index: u32, blocks: u64) -> ReplicaOutcome {
    let cfg = &scenario.config;
    let battery = &scenario.battery;
    let links = scenario.links();
    let mut stream = RngStream::new(opts.seed, index as u64);

    let scale = cfg.eta * cfg.n0 / 2.0;
    // the ST->HAP hop clears gamma0 iff the scaled HAP-link gain reaches
    // y_star; at p_d = 0 that gain is identically zero and y_star is +inf,
    // so the hop (correctly) never succeeds
    let y_star = if cfg.p_d > 0.0 {
        cfg.gamma0 * cfg.p_d * cfg.hap_noise() / (2.0 * battery.e_t * cfg.n0)
    } else {
        f64::INFINITY
    };
    let s = min_level_s(scenario);

    let n_states = battery.levels as usize + 1;
    let mut histogram = opts.record_histogram.then(|| vec![0u64; n_states]);
    let mut transitions = opts.record_transitions.then(|| vec![0u64; n_states * n_states]);
    let mut trace = (opts.record_trace && index == 0).then(Vec::new);

    let mut transmit_blocks = 0u64;
    let mut secondary_success = 0u64;
    let mut primary_success = 0u64;

    let mut energy = 0.0f64; // continuous battery state
    let mut level = 0u32; // discretized battery state

    for block in 0..blocks {
        let y = block_sample(&links, &mut stream);
        let (y1, y2, y3, y4, y5, y6) = (y[0], y[1], y[2], y[3], y[4], y[5]);

        let start_level = match opts.battery_mode {
            BatteryMode::Continuous => battery_level_of_energy(energy, battery),
            BatteryMode::Discretized => level,
        };

        let (mode, secondary_ok) = match opts.battery_mode {
            BatteryMode::Continuous => {
                let h1 = scale * y1;
                let h2 = scale * y2;
                if energy + h1 + h2 >= battery.e_t {
                    energy = (energy + h1 + h2).min(battery.capacity) - battery.e_t;
                    energy = energy.max(0.0);
                    (BlockMode::Transmit, y2 >= y_star)
                } else {
                    energy = (energy + h1 + 2.0 * h2).min(battery.capacity);
                    (BlockMode::Harvest, false)
                }
            }
            BatteryMode::Discretized => {
                let mu = discretize_energy(scale * y1, battery);
                let nu = discretize_energy(scale * y2, battery);
                let decision = step_battery(level, mu + nu, nu, battery);
                level = decision.next_level;
                (decision.mode, decision.mode == BlockMode::Transmit && u64::from(nu) >= s)
            }
        };

        // primary side: direct path plus decode-and-forward relay path,
        // with the relay hop degraded by the ST only while it transmits
        let relay_hop = if mode == BlockMode::Transmit && opts.interference == InterferenceMode::Exact
        {
            y5 / (1.0 + y3)
        } else {
            y5
        };
        let primary_ok = y6 + y4.min(relay_hop) >= cfg.gamma0;

        if mode == BlockMode::Transmit {
            transmit_blocks += 1;
        }
        if secondary_ok {
            secondary_success += 1;
        }
        if primary_ok {
            primary_success += 1;
        }
        if let Some(h) = histogram.as_mut() {
            h[start_level as usize] += 1;
        }
        if let Some(tr) = transitions.as_mut() {
            let end_level = match opts.battery_mode {
                BatteryMode::Continuous => battery_level_of_energy(energy, battery),
                BatteryMode::Discretized => level,
            };
            tr[start_level as usize * n_states + end_level as usize] += 1;
        }
        if let Some(rows) = trace.as_mut() {
            if rows.len() < TRACE_CAP {
                rows.push(TraceRow { block, start_level, mode, secondary_ok, primary_ok });
            }
        }
    }

    ReplicaOutcome {
        blocks,
        transmit_blocks,
        secondary_success,
        primary_success,
        histogram,
        transitions,
        trace,
    }
}

fn replica_sizes(n_blocks: u64, replicas: u32) -> Vec<u64> {
    let r = replicas as u64;
    let base = n_blocks / r;
    let extra = n_blocks % r;
    (0..r).map(|i| base + u64::from(i < extra)).collect()
}

fn merge(outcomes: Vec<ReplicaOutcome>, scenario: &Scenario) -> SimReport {
    let r0 = scenario.config.r0();
    let mut blocks = 0u64;
    let mut transmit_blocks = 0u64;
    let mut secondary_success = 0u64;
    let mut primary_success = 0u64;
    let mut histogram: Option<Vec<u64>> = None;
    let mut transitions: Option<Vec<u64>> = None;
    let mut trace: Option<Vec<TraceRow>> = None;
    for out in outcomes {
        blocks += out.blocks;
        transmit_blocks += out.transmit_blocks;
        secondary_success += out.secondary_success;
        primary_success += out.primary_success;
        for (dst, src) in [(&mut histogram, out.histogram), (&mut transitions, out.transitions)] {
            if let Some(src) = src {
                match dst {
                    Some(acc) => acc.iter_mut().zip(&src).for_each(|(a, b)| *a += b),
                    None => *dst = Some(src),
                }
            }
        }
        if out.trace.is_some() {
            trace = out.trace;
        }
    }

    let n = blocks as f64;
    let p_sec = secondary_success as f64 / n;
    let p_pri = primary_success as f64 / n;
    let binom = |p: f64| (p * (1.0 - p) / n).sqrt();
    SimReport {
        blocks,
        transmit_blocks,
        secondary_success,
        primary_success,
        r_d: 0.5 * r0 * p_sec,
        r_d_stderr: 0.5 * r0 * binom(p_sec),
        r_b: 0.5 * r0 * p_pri,
        r_b_stderr: 0.5 * r0 * binom(p_pri),
        p_od: 1.0 - p_sec,
        p_ob: (blocks - transmit_blocks) as f64 / n,
        histogram,
        transitions,
        trace,
    }
}

fn check_options(opts: &SimOptions) -> Result<()> {
    if opts.n_blocks == 0 {
        return Err(Error::Config("simulation needs at least one block".into()));
    }
    if opts.replicas == 0 {
        return Err(Error::Config("simulation needs at least one replica".into()));
    }
    if u64::from(opts.replicas) > opts.n_blocks {
        return Err(Error::Config(format!(
            "{} replicas cannot share {} blocks",
            opts.replicas, opts.n_blocks
        )));
    }
    Ok(())
}

/// Runs the simulation, spreading replicas across threads when the
/// `parallel` feature is enabled. Results depend only on the scenario and
/// options, never on thread scheduling.
pub fn run_simulation(scenario: &Scenario, opts: &SimOptions) -> Result<SimReport> {
    check_options(opts)?;
    let sizes = replica_sizes(opts.n_blocks, opts.replicas);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<ReplicaOutcome> = sizes
        .into_par_iter()
        .enumerate()
        .map(|(i, n)| run_replica(scenario, opts, i as u32, n))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<ReplicaOutcome> = sizes
        .into_iter()
        .enumerate()
        .map(|(i, n)| run_replica(scenario, opts, i as u32, n))
        .collect();
    Ok(merge(outcomes, scenario))
}

/// Sequential twin of [`run_simulation`], kept unconditionally for direct
/// comparison of the two code paths.
pub fn run_simulation_sequential(scenario: &Scenario, opts: &SimOptions) -> Result<SimReport> {
    check_options(opts)?;
    let outcomes = replica_sizes(opts.n_blocks, opts.replicas)
        .into_iter()
        .enumerate()
        .map(|(i, n)| run_replica(scenario, opts, i as u32, n))
        .collect();
    Ok(merge(outcomes, scenario))
}
