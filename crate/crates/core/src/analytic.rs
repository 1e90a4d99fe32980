//! Closed-form distributions: harvested energy per slot/block, discretized
//! harvest levels, and the combined SINR at the primary receiver.
//!
//! Harvest side. During the first half of a block the ST harvests
//! `E = (eta/2) (P_a g_ac + P_d g_cd)`, which in scaled-gain terms is
//! `(eta n0 / 2) (Y_1 + Y_2)` with `Y_i ~ gamma(m_i, rate beta_i)`. If the
//! block ends up without a transmission the HAP contribution repeats in the
//! second half, giving `(eta n0 / 2) (Y_1 + 2 Y_2)`. Both are weighted sums
//! of two independent gammas; their CDF follows from a partial-fraction
//! expansion of the Laplace transform,
//!
//! `F(u) = sum_{mu=1,2} sum_{nu=1..m_mu} A(mu, nu) P(nu, r_mu u)`,
//!
//! where `P` is the regularized lower incomplete gamma, `r_mu` the effective
//! rates, and the `A(mu, nu)` the partial-fraction weights computed by
//! [`weight_a`]. When the two effective rates coincide (symmetric scenarios
//! hit this exactly) the sum is a plain Erlang and a dedicated branch avoids
//! the 0/0 in the weights.
//!
//! SINR side. The PR combines the direct PT signal with the stronger of
//! nothing and the decode-and-forward relay path, giving
//! `gamma_b = gamma_ab + min(gamma_ad, gamma_db)`. With every branch gamma
//! distributed the CDF has a closed form in terms of the beta function and
//! Kummer's `1F1` ([`cdf_combined_sinr`]); the relay-interference-aware
//! variant conditions that closed form on the ST->PR interference gain by
//! numerical quadrature.

use crate::params::{BatteryModel, LinkStats, SystemConfig};
use crate::specfun::{beta_fn, kummer_1f1, reg_lower_gamma_int};
use crate::{Error, Result};

/// Relative gap under which two effective rates are treated as equal and the
/// Erlang branch is taken. Between this and ~1e-5 the partial-fraction
/// weights grow like `(r - r')^-(m1+m2-1)` and lose digits; scenario rates
/// are either well separated or exactly equal, so the cliff is not widened.
pub const RATE_DEGENERACY_TOL: f64 = 1e-9;

fn fact(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Partial-fraction weight `A(mu, nu)` of the two-gamma-sum CDF for the pole
/// at rate `rates[mu]` with multiplicity index `nu` (`1 <= nu <= m_mu`):
///
/// `A = (-1)^(m_mu - nu) r1^m1 r2^m2 Gamma(m_o + m_mu - nu)
///      (r_o - r_mu)^(nu - m1 - m2) / (r_mu^nu Gamma(m_o) (m_mu - nu)!)`
///
/// with `o` the other index. The weights of a valid pair sum to exactly 1
/// (the CDF must normalize), which is the cheapest full-surface check.
pub fn weight_a(mu: usize, nu: u32, shapes: (u32, u32), rates: (f64, f64)) -> f64 {
    assert!(mu == 1 || mu == 2, "mu indexes the pole, 1 or 2");
    let (m_mu, m_o, r_mu, r_o) = if mu == 1 {
        (shapes.0, shapes.1, rates.0, rates.1)
    } else {
        (shapes.1, shapes.0, rates.1, rates.0)
    };
    assert!(nu >= 1 && nu <= m_mu, "nu must lie in 1..=m_mu");
    let sign = if (m_mu - nu) % 2 == 0 { 1.0 } else { -1.0 };
    let gamma_ratio = fact(m_o + m_mu - nu - 1) / fact(m_o - 1);
    let diff_pow = (r_o - r_mu).powi(nu as i32 - (m_o + m_mu) as i32);
    let c = sign * gamma_ratio * diff_pow / fact(m_mu - nu);
    rates.0.powi(shapes.0 as i32) * rates.1.powi(shapes.1 as i32) * c / r_mu.powi(nu as i32)
}

/// Distribution of `coef1 * X1 + coef2 * X2` for independent gammas
/// `X_i ~ (shape_i, rate_i)`, precomputed for repeated CDF evaluation.
#[derive(Debug, Clone)]
pub struct GammaSumSpec {
    shape1: u32,
    /// Effective rate of the first summand, `rate1 / coef1`.
    r1: f64,
    shape2: u32,
    r2: f64,
    form: SumForm,
}

#[derive(Debug, Clone)]
enum SumForm {
    /// Equal effective rates: plain Erlang of the summed shape.
    Erlang { rate: f64 },
    /// Distinct rates: partial-fraction weights, `w1[nu-1]` for pole 1 etc.
    PartialFractions { w1: Vec<f64>, w2: Vec<f64> },
}

impl GammaSumSpec {
    pub fn new(
        shape1: u32,
        rate1: f64,
        coef1: f64,
        shape2: u32,
        rate2: f64,
        coef2: f64,
    ) -> Result<GammaSumSpec> {
        if shape1 < 1 || shape2 < 1 {
            return Err(Error::Config("gamma sum needs integer shapes >= 1".into()));
        }
        for (name, v) in [("rate1", rate1), ("rate2", rate2), ("coef1", coef1), ("coef2", coef2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("gamma sum: {name} must be positive, got {v}")));
            }
        }
        let r1 = rate1 / coef1;
        let r2 = rate2 / coef2;
        let form = if (r1 - r2).abs() <= RATE_DEGENERACY_TOL * r1.max(r2) {
            SumForm::Erlang { rate: 0.5 * (r1 + r2) }
        } else {
            let shapes = (shape1, shape2);
            let rates = (r1, r2);
            let w1 = (1..=shape1).map(|nu| weight_a(1, nu, shapes, rates)).collect();
            let w2 = (1..=shape2).map(|nu| weight_a(2, nu, shapes, rates)).collect();
            SumForm::PartialFractions { w1, w2 }
        };
        Ok(GammaSumSpec { shape1, r1, shape2, r2, form })
    }

    /// CDF of the weighted sum at `u`.
    pub fn cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match &self.form {
            SumForm::Erlang { rate } => reg_lower_gamma_int(self.shape1 + self.shape2, rate * u),
            SumForm::PartialFractions { w1, w2 } => {
                let mut f = 0.0;
                for (i, w) in w1.iter().enumerate() {
                    f += w * reg_lower_gamma_int(i as u32 + 1, self.r1 * u);
                }
                for (i, w) in w2.iter().enumerate() {
                    f += w * reg_lower_gamma_int(i as u32 + 1, self.r2 * u);
                }
                f.clamp(0.0, 1.0)
            }
        }
    }

    /// Density of the weighted sum at `z`; used for cross-checks.
    pub fn density(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 0.0;
        }
        match &self.form {
            SumForm::Erlang { rate } => {
                crate::reference::gamma_density((self.shape1 + self.shape2) as f64, *rate, z)
            }
            SumForm::PartialFractions { w1, w2 } => {
                let mut f = 0.0;
                for (i, w) in w1.iter().enumerate() {
                    let nu = i as u32 + 1;
                    f += w * self.r1.powi(nu as i32) * z.powi(nu as i32 - 1) * (-self.r1 * z).exp()
                        / fact(nu - 1);
                }
                for (i, w) in w2.iter().enumerate() {
                    let nu = i as u32 + 1;
                    f += w * self.r2.powi(nu as i32) * z.powi(nu as i32 - 1) * (-self.r2 * z).exp()
                        / fact(nu - 1);
                }
                f
            }
        }
    }
}

/// Converts an energy `x` to the scaled-gain sum variable `u = 2x/(eta n0)`.
fn energy_to_sum_arg(x: f64, config: &SystemConfig) -> f64 {
    2.0 * x / (config.eta * config.n0)
}

/// CDF of the first-half-block harvested energy
/// `E_I = (eta n0 / 2)(Y_1 + Y_2)` at energy `x`.
pub fn cdf_energy_mode1(x: f64, links: &LinkStats, config: &SystemConfig) -> Result<f64> {
    let (l1, l2) = (links.get(1), links.get(2));
    let spec = GammaSumSpec::new(l1.m, l1.beta, 1.0, l2.m, l2.beta, 1.0)?;
    Ok(spec.cdf(energy_to_sum_arg(x, config)))
}

/// CDF of the full-block harvested energy when no transmission happens,
/// `E_II = (eta n0 / 2)(Y_1 + 2 Y_2)`: same machinery with the HAP rate
/// halved by the doubled coefficient.
pub fn cdf_energy_mode2(x: f64, links: &LinkStats, config: &SystemConfig) -> Result<f64> {
    let (l1, l2) = (links.get(1), links.get(2));
    let spec = GammaSumSpec::new(l1.m, l1.beta, 1.0, l2.m, l2.beta, 2.0)?;
    Ok(spec.cdf(energy_to_sum_arg(x, config)))
}

/// Discretized level distributions of the two per-link half-slot harvests.
///
/// `link_probs(i)[x]` is the probability that the link-`i` half-slot harvest
/// `(eta n0 / 2) Y_i` lands at battery level `x` (energy in
/// `(eps_x, eps_{x+1}]`), with everything at or above the top level folded
/// into `x = L`.
#[derive(Debug, Clone)]
pub struct HalfSlotLevels {
    p1: Vec<f64>,
    p2: Vec<f64>,
}

impl HalfSlotLevels {
    pub fn new(links: &LinkStats, battery: &BatteryModel, config: &SystemConfig) -> HalfSlotLevels {
        HalfSlotLevels {
            p1: level_pmf(links.get(1).m, links.get(1).beta, battery, config),
            p2: level_pmf(links.get(2).m, links.get(2).beta, battery, config),
        }
    }

    /// Level distribution of link 1 or 2; length `L + 1`, sums to 1.
    pub fn link_probs(&self, link_id: u8) -> &[f64] {
        match link_id {
            1 => &self.p1,
            2 => &self.p2,
            other => panic!("half-slot levels exist for links 1 and 2, not {other}"),
        }
    }
}

fn level_pmf(m: u32, beta: f64, battery: &BatteryModel, config: &SystemConfig) -> Vec<f64> {
    let levels = battery.levels as usize;
    // CDF of the harvest at every grid energy: F(eps_x) = P(m, beta * 2 eps_x / (eta n0))
    let mut cdf = Vec::with_capacity(levels + 1);
    for x in 0..=levels {
        let e = battery.level_energy(x as u32);
        cdf.push(reg_lower_gamma_int(m, beta * energy_to_sum_arg(e, config)));
    }
    let mut pmf = Vec::with_capacity(levels + 1);
    for x in 0..levels {
        pmf.push((cdf[x + 1] - cdf[x]).max(0.0));
    }
    pmf.push((1.0 - cdf[levels]).max(0.0));
    pmf
}

/// Probability that the half-slot harvest of `link_id` (1 or 2) discretizes
/// to exactly level `x`; the mass at or above level `L` is folded into
/// `x = L`.
pub fn level_prob(
    link_id: u8,
    x: u32,
    battery: &BatteryModel,
    links: &LinkStats,
    config: &SystemConfig,
) -> Result<f64> {
    if !(link_id == 1 || link_id == 2) {
        return Err(Error::OutOfRange(format!("harvesting links are 1 and 2, got {link_id}")));
    }
    if x > battery.levels {
        return Err(Error::OutOfRange(format!(
            "level {x} outside 0..={}",
            battery.levels
        )));
    }
    let stat = links.get(link_id);
    let lo = reg_lower_gamma_int(stat.m, stat.beta * energy_to_sum_arg(battery.level_energy(x), config));
    if x == battery.levels {
        return Ok((1.0 - lo).max(0.0));
    }
    let hi =
        reg_lower_gamma_int(stat.m, stat.beta * energy_to_sum_arg(battery.level_energy(x + 1), config));
    Ok((hi - lo).max(0.0))
}

/// Probability that a block starting at level `i` stays in harvesting mode
/// (first-slot level deficit) *and* the full-block harvest lands the battery
/// exactly at level `j`.
///
/// The joint event is over the per-link levels `(mu, nu)`:
/// `mu + nu < t - i` (no transmission) and `min(i + mu + 2 nu, L) = j`.
/// `j` above `L` is allowed and yields 0, since a partial charge can never
/// leave the battery beyond its clamped capacity.
pub fn partial_charge_helper(
    i: u32,
    j: u32,
    links: &LinkStats,
    battery: &BatteryModel,
    config: &SystemConfig,
) -> Result<f64> {
    let t = battery.t;
    if i >= t {
        return Err(Error::OutOfRange(format!(
            "partial charge starts below the transmit level, got i = {i} >= t = {t}"
        )));
    }
    if j < t {
        return Err(Error::OutOfRange(format!(
            "partial charge targets are at or above t = {t}, got j = {j}"
        )));
    }
    if j > battery.levels {
        return Ok(0.0);
    }
    let levels = HalfSlotLevels::new(links, battery, config);
    let p1 = levels.link_probs(1);
    let p2 = levels.link_probs(2);
    let budget = t - 1 - i; // mu + nu <= budget
    let mut total = 0.0;
    for nu in 0..=budget {
        for mu in 0..=(budget - nu) {
            let target = (i + mu + 2 * nu).min(battery.levels);
            if target == j {
                total += p1[mu as usize] * p2[nu as usize];
            }
        }
    }
    Ok(total)
}

/// How the relay's interference at PR is handled when evaluating the
/// combined SINR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferenceMode {
    /// Ignore it: the relay SINR is `Y_5` (exact for harvesting blocks, an
    /// approximation for transmission blocks).
    Off,
    /// Condition on the ST->PR gain: the relay SINR is `Y_5 / (1 + Y_3)`.
    Exact,
}

/// CDF of the combined SINR `gamma_b = Y_6 + min(Y_4, gamma_db)` at `x`.
///
/// With interference off, `gamma_db = Y_5` and the closed form is
///
/// `F(x) = P(m6, b6 x) - sum_{a<m4} sum_{b<m5} (b4^a b5^b b6^m6)/(a! b! Gamma(m6))
///         B(m6, a+b+1) x^(a+b+m6) e^(-(b4+b5)x) 1F1(m6; m6+a+b+1; (b4+b5-b6)x)`,
///
/// obtained by convolving the direct-link density with the min-branch
/// survival `Q(m4, b4 z) Q(m5, b5 z)`. With interference on the same form is
/// integrated over the interference gain `w ~ gamma(m3, b3)` with
/// `b5 -> b5 (1 + w)` (composite Simpson; the truncated tail carries less
/// than 1e-12 mass).
pub fn cdf_combined_sinr(x: f64, links: &LinkStats, mode: InterferenceMode) -> Result<f64> {
    match mode {
        InterferenceMode::Off => combined_cdf_off(x, links, 1.0),
        InterferenceMode::Exact => {
            if x <= 0.0 {
                return Ok(0.0);
            }
            let l3 = links.get(3);
            // upper integration bound: gamma(m3, b3) quantile with tail < 1e-12
            let mut z = 1.0f64;
            while 1.0 - reg_lower_gamma_int(l3.m, z) > 1e-12 {
                z *= 1.5;
            }
            let w_hi = z / l3.beta;
            let panels = 800;
            let h = w_hi / panels as f64;
            let f = |w: f64| -> Result<f64> {
                Ok(crate::reference::gamma_density(l3.m as f64, l3.beta, w)
                    * combined_cdf_off(x, links, 1.0 + w)?)
            };
            // composite Simpson over [0, w_hi]
            let mut acc = f(0.0)? + f(w_hi)?;
            for k in 1..panels {
                let w = k as f64 * h;
                acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(w)?;
            }
            Ok((acc * h / 3.0).clamp(0.0, 1.0))
        }
    }
}

/// Interference-off closed form with the relay rate scaled by `b5_scale`
/// (used at 1.0 directly and at `1 + w` under the conditioning integral).
fn combined_cdf_off(x: f64, links: &LinkStats, b5_scale: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let (l4, l5, l6) = (links.get(4), links.get(5), links.get(6));
    let (m4, b4) = (l4.m, l4.beta);
    let (m5, b5) = (l5.m, l5.beta * b5_scale);
    let (m6, b6) = (l6.m, l6.beta);
    let direct = reg_lower_gamma_int(m6, b6 * x);
    if b6 * x > 700.0 && (b4 + b5) * x > 700.0 {
        // both exponential scales exhausted: CDF is 1 to machine precision
        return Ok(1.0);
    }
    let w = (b4 + b5 - b6) * x;
    let decay = (-(b4 + b5) * x).exp();
    let mut sub = 0.0;
    for a in 0..m4 {
        for b in 0..m5 {
            let coef = b4.powi(a as i32) / fact(a) * b5.powi(b as i32) / fact(b)
                * b6.powi(m6 as i32)
                / fact(m6 - 1)
                * beta_fn(m6 as f64, (a + b + 1) as f64).value;
            let hyp = kummer_1f1(m6 as f64, (m6 + a + b + 1) as f64, w)
                .check("combined SINR 1F1")?;
            let term = coef * x.powi((a + b + m6) as i32) * decay * hyp;
            if !term.is_finite() {
                return Err(Error::Convergence(format!(
                    "combined SINR term overflow at x = {x} (a = {a}, b = {b})"
                )));
            }
            sub += term;
        }
    }
    Ok((direct - sub).clamp(0.0, 1.0))
}
