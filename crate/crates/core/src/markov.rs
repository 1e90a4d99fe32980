//! Finite-state battery chain: one state per level, one step per block.
//!
//! A block starting at level `i` observes per-link half-slot harvest levels
//! `mu` (PT) and `nu` (HAP). If `i + mu + nu` reaches the transmit level `t`
//! the ST spends the block transmitting and ends at
//! `min(i + mu + nu, L) - t`; otherwise it keeps harvesting through the
//! second half (the HAP contribution repeats) and ends at
//! `min(i + mu + 2 nu, L)`. Transition probabilities follow from the level
//! distributions in [`crate::analytic::HalfSlotLevels`]: the transmit rows
//! only need the distribution of `sigma = mu + nu` (one convolution shared
//! by all rows), the harvest rows need the joint `(mu, nu)` sum truncated at
//! `mu + nu < t - i`.
//!
//! The stationary distribution comes from a direct linear solve of
//! `(V' - I + B) pi = b`, where `V'` is the transposed transition matrix and
//! `B`, `b` are all ones; that system replaces the rank deficiency of
//! `V' - I` with the normalization constraint. A plain power iteration is
//! kept alongside as an independent cross-check.

use crate::analytic::HalfSlotLevels;
use crate::params::{BatteryModel, Scenario};
use crate::{Error, Result};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maximum |row sum - 1| tolerated when assembling a transition matrix.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Discretizes a *harvest* energy to its battery level: the largest `j` with
/// `eps_j < e`, clamped to `0..=L` (everything at or above capacity folds
/// into `L`). Grid-exact energies belong to the level below, with a relative
/// slack of 1e-9 so that floating-point dust on an exact multiple of `eps_1`
/// cannot promote it.
pub fn discretize_energy(e: f64, battery: &BatteryModel) -> u32 {
    if e <= 0.0 {
        return 0;
    }
    let raw = (e / battery.eps1 - crate::params::GRID_EPS).ceil() - 1.0;
    if raw <= 0.0 {
        0
    } else if raw >= battery.levels as f64 {
        battery.levels
    } else {
        raw as u32
    }
}

/// Maps a *battery state* energy to its chain level: the largest `j` with
/// `eps_j <= e`, clamped to `0..=L`.
///
/// This differs from [`discretize_energy`] only on the grid itself, which is
/// where it matters: clamping at capacity parks the continuous battery
/// exactly on `C`, and each transmission shifts such atoms down by exactly
/// `t` levels when `e_t` is grid-aligned. The chain calls a full battery `L`,
/// so the state map must send `C` to `L` (and `C - k e_t` to `L - k t`), not
/// one level down as the strict harvest rule would.
pub fn battery_level_of_energy(e: f64, battery: &BatteryModel) -> u32 {
    if e <= 0.0 {
        return 0;
    }
    let raw = (e / battery.eps1 + crate::params::GRID_EPS).floor();
    if raw >= battery.levels as f64 {
        battery.levels
    } else {
        raw as u32
    }
}

/// What a block does to the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockMode {
    /// First-slot charge reached `t`: the ST relays and pays `t` levels.
    Transmit,
    /// Charge stayed below `t`: the ST harvests the whole block.
    Harvest,
}

/// Outcome of one block step in level arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockDecision {
    pub mode: BlockMode,
    pub next_level: u32,
}

/// Advances the battery one block. `first_half_levels` is `mu + nu`,
/// `extra_half_levels` the additional HAP-only level `nu` a harvesting block
/// collects in its second half.
pub fn step_battery(
    level: u32,
    first_half_levels: u32,
    extra_half_levels: u32,
    battery: &BatteryModel,
) -> BlockDecision {
    let l = battery.levels;
    let charged = (level + first_half_levels).min(l);
    if charged >= battery.t {
        BlockDecision { mode: BlockMode::Transmit, next_level: charged - battery.t }
    } else {
        BlockDecision {
            mode: BlockMode::Harvest,
            next_level: (level + first_half_levels + extra_half_levels).min(l),
        }
    }
}

/// Row-major stochastic matrix over battery levels `0..=L`.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds from explicit rows, enforcing shape and row sums.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<TransitionMatrix> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Config(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::RowSum { row: i, sum });
            }
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::Config(format!("row {i} has a negative or non-finite entry")));
            }
            data.extend_from_slice(&row);
        }
        Ok(TransitionMatrix { n, data })
    }

    /// Number of states, `L + 1`.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.n..(from + 1) * self.n]
    }
}

/// Distribution of `sigma = mu + nu`, folded into `0..=L`. For every block
/// decision only `min(sigma, L)` matters, so the folding is exact.
fn sigma_pmf(levels: &HalfSlotLevels, l: usize) -> Vec<f64> {
    let p1 = levels.link_probs(1);
    let p2 = levels.link_probs(2);
    let mut q = vec![0.0; l + 1];
    for sigma in 0..l {
        let mut acc = 0.0;
        for nu in 0..=sigma {
            acc += p1[sigma - nu] * p2[nu];
        }
        q[sigma] = acc;
    }
    // everything at or above L, by complement so the pmf sums to exactly 1
    q[l] = (1.0 - q[..l].iter().sum::<f64>()).max(0.0);
    q
}

fn fill_row(
    i: u32,
    battery: &BatteryModel,
    levels: &HalfSlotLevels,
    sigma: &[f64],
) -> Vec<f64> {
    let l = battery.levels;
    let t = battery.t;
    let mut row = vec![0.0; l as usize + 1];
    // transmit: sigma >= t - i, land at min(i + sigma, L) - t
    let sigma_min = t.saturating_sub(i);
    for s in sigma_min..=l {
        let dest = (i + s).min(l) - t;
        row[dest as usize] += sigma[s as usize];
    }
    // harvest: mu + nu <= t - 1 - i, land at min(i + mu + 2 nu, L)
    if i < t {
        let p1 = levels.link_probs(1);
        let p2 = levels.link_probs(2);
        let budget = t - 1 - i;
        for nu in 0..=budget {
            let pv = p2[nu as usize];
            for mu in 0..=(budget - nu) {
                let dest = (i + mu + 2 * nu).min(l);
                row[dest as usize] += p1[mu as usize] * pv;
            }
        }
    }
    row
}

/// Builds the battery transition matrix, one row per starting level. Rows
/// are independent and are filled in parallel when the `parallel` feature is
/// enabled.
pub fn build_transition_matrix(scenario: &Scenario) -> Result<TransitionMatrix> {
    let battery = &scenario.battery;
    let levels = HalfSlotLevels::new(&scenario.links(), battery, &scenario.config);
    let sigma = sigma_pmf(&levels, battery.levels as usize);
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = (0..=battery.levels)
        .into_par_iter()
        .map(|i| fill_row(i, battery, &levels, &sigma))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = (0..=battery.levels)
        .map(|i| fill_row(i, battery, &levels, &sigma))
        .collect();
    TransitionMatrix::from_rows(rows)
}

/// Sequential twin of [`build_transition_matrix`]; exists so the two code
/// paths can be compared directly regardless of enabled features.
pub fn build_transition_matrix_sequential(scenario: &Scenario) -> Result<TransitionMatrix> {
    let battery = &scenario.battery;
    let levels = HalfSlotLevels::new(&scenario.links(), battery, &scenario.config);
    let sigma = sigma_pmf(&levels, battery.levels as usize);
    let rows: Vec<Vec<f64>> =
        (0..=battery.levels).map(|i| fill_row(i, battery, &levels, &sigma)).collect();
    TransitionMatrix::from_rows(rows)
}

/// Stationary distribution by direct linear solve of `(V' - I + B) pi = b`
/// with `B` the all-ones matrix and `b` the all-ones vector.
pub fn stationary_distribution(v: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = v.dim();
    let m = nalgebra::DMatrix::from_fn(n, n, |r, c| {
        let mut x = v.get(c, r) + 1.0;
        if r == c {
            x -= 1.0;
        }
        x
    });
    let b = nalgebra::DVector::from_element(n, 1.0);
    let lu = m.lu();
    let pi = lu
        .solve(&b)
        .ok_or_else(|| Error::Singular("stationary system has no unique solution".into()))?;

    let mut out = vec![0.0; n];
    for (i, &p) in pi.iter().enumerate() {
        if p < -1e-12 {
            return Err(Error::Convergence(format!(
                "stationary solve produced pi[{i}] = {p}, below the roundoff floor"
            )));
        }
        out[i] = p.max(0.0);
    }
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    // pi must actually be invariant, not merely solve the augmented system
    let mut resid = 0.0f64;
    for j in 0..n {
        let mut vj = 0.0;
        for i in 0..n {
            vj += out[i] * v.get(i, j);
        }
        resid = resid.max((vj - out[j]).abs());
    }
    if resid > 1e-10 {
        return Err(Error::Convergence(format!(
            "stationary residual {resid:e} exceeds 1e-10"
        )));
    }
    Ok(out)
}

/// Stationary distribution by power iteration, as an independent check on
/// the linear solve. Converges when consecutive iterates differ by less than
/// `tol` in the max norm.
pub fn power_iteration(v: &TransitionMatrix, tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let n = v.dim();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iters {
        next.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            let p = pi[i];
            if p == 0.0 {
                continue;
            }
            let row = v.row(i);
            for j in 0..n {
                next[j] += p * row[j];
            }
        }
        let total: f64 = next.iter().sum();
        let mut diff = 0.0f64;
        for j in 0..n {
            next[j] /= total;
            diff = diff.max((next[j] - pi[j]).abs());
        }
        std::mem::swap(&mut pi, &mut next);
        if diff < tol {
            return Ok(pi);
        }
    }
    Err(Error::Convergence(format!(
        "power iteration did not reach tol = {tol:e} in {max_iters} iterations"
    )))
}
