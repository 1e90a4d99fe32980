//! Scenario parameters: transmit powers, geometry, fading orders, battery.
//!
//! The four nodes sit on a line in the order PT (a), ST (c), HAP (d), PR (b),
//! so `d_ad = d_ac + d_cd` and `d_ab = d_ad + d_db`. Six links matter:
//!
//! | id | link      | role                                  |
//! |----|-----------|---------------------------------------|
//! | 1  | PT -> ST  | energy harvested from the primary     |
//! | 2  | HAP -> ST | energy harvested from the access point|
//! | 3  | ST -> PR  | interference of the relay at PR       |
//! | 4  | PT -> HAP | first decode-and-forward hop          |
//! | 5  | HAP -> PR | second decode-and-forward hop         |
//! | 6  | PT -> PR  | direct primary link                   |
//!
//! Fading is Nakagami-m with integer `m`, so the power gain of link `i` is
//! gamma distributed with shape `m_i` and mean `Omega_i`; `Omega_i` folds in
//! transmit power, path loss `d^-alpha` and the relevant noise so that the
//! scaled gain is directly an SNR (links 4, 5, 6), an interference-to-noise
//! ratio (link 3) or a noise-normalized harvest driver (links 1, 2).
//!
//! Powers are watts internally; dBm exists only at the boundary
//! ([`dbm_to_watts`] / [`watts_to_dbm`] and the `"x dBm"` config suffix).
//! The block duration is the time unit (`T = 1`), so power and per-block
//! energy share a scale.

use serde::Deserialize;

use crate::{Error, Result};

/// Relative slack used when snapping ceil() results onto level-grid points,
/// so that thresholds that are exact multiples of the level width do not get
/// pushed up a level by floating-point dust.
pub(crate) const GRID_EPS: f64 = 1e-9;

/// Converts a dBm value to watts: 30 dBm = 1 W.
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

/// Converts watts to dBm. Inverse of [`dbm_to_watts`] for positive powers.
pub fn watts_to_dbm(p_w: f64) -> f64 {
    10.0 * p_w.log10() + 30.0
}

/// Validated system-level parameters. All powers in watts, distances in the
/// common (dimensionless) length unit, `gamma0` linear.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// PT transmit power.
    pub p_a: f64,
    /// HAP transmit power.
    pub p_d: f64,
    /// Power ratio `p_a = k * p_d`, kept for sweeps that move both together.
    pub k: f64,
    /// Energy-harvester conversion efficiency, in (0, 1].
    pub eta: f64,
    /// Noise power at every receiver.
    pub n0: f64,
    /// Residual self-interference gain of the full-duplex HAP.
    pub h_dd: f64,
    /// SINR threshold defining outage, linear scale.
    pub gamma0: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    pub d_ac: f64,
    pub d_cd: f64,
    pub d_db: f64,
    /// PT -> HAP distance; equals `d_ac + d_cd` on the line topology.
    pub d_ad: f64,
    /// PT -> PR distance; equals `d_ad + d_db`.
    pub d_ab: f64,
    /// Nakagami orders for links 1..6.
    pub m: [u32; 6],
    /// Non-cooperative baseline occupies the full block by default; set to
    /// `true` to charge it the same half-block cost as the cooperative modes.
    pub baseline_half_block: bool,
}

impl SystemConfig {
    /// Checks every invariant and fills the derived distances. Consumes a
    /// partially specified config (e.g. `p_a` given via `k`).
    pub fn validate(raw: RawSystemConfig) -> Result<SystemConfig> {
        let (p_a, p_d, k) = resolve_powers(raw.p_a, raw.p_d, raw.k)?;
        for (name, v) in [
            ("p_a", p_a),
            ("p_d", p_d),
            ("n0", raw.n0),
            ("gamma0", raw.gamma0),
            ("alpha", raw.alpha),
            ("d_ac", raw.d_ac),
            ("d_cd", raw.d_cd),
            ("d_db", raw.d_db),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if !(raw.eta > 0.0 && raw.eta <= 1.0) {
            return Err(Error::Config(format!("eta must lie in (0, 1], got {}", raw.eta)));
        }
        if !(raw.h_dd >= 0.0) || !raw.h_dd.is_finite() {
            return Err(Error::Config(format!("h_dd must be >= 0, got {}", raw.h_dd)));
        }
        for (i, &mi) in raw.m.iter().enumerate() {
            if mi < 1 {
                return Err(Error::Config(format!("m[{}] must be a positive integer", i + 1)));
            }
        }
        let d_ad = raw.d_ac + raw.d_cd;
        let d_ab = d_ad + raw.d_db;
        if let Some(given) = raw.d_ad {
            if (given - d_ad).abs() > 1e-9 * d_ad {
                return Err(Error::Config(format!(
                    "inconsistent topology: d_ad = {given} but d_ac + d_cd = {d_ad}"
                )));
            }
        }
        if let Some(given) = raw.d_ab {
            if (given - d_ab).abs() > 1e-9 * d_ab {
                return Err(Error::Config(format!(
                    "inconsistent topology: d_ab = {given} but d_ac + d_cd + d_db = {d_ab}"
                )));
            }
        }
        Ok(SystemConfig {
            p_a,
            p_d,
            k,
            eta: raw.eta,
            n0: raw.n0,
            h_dd: raw.h_dd,
            gamma0: raw.gamma0,
            alpha: raw.alpha,
            d_ac: raw.d_ac,
            d_cd: raw.d_cd,
            d_db: raw.d_db,
            d_ad,
            d_ab,
            m: raw.m,
            baseline_half_block: raw.baseline_half_block,
        })
    }

    /// Target rate `R0 = log2(1 + gamma0)` in bits/s/Hz.
    pub fn r0(&self) -> f64 {
        (1.0 + self.gamma0).log2()
    }

    /// Noise-plus-self-interference power seen by the full-duplex HAP.
    pub fn hap_noise(&self) -> f64 {
        self.n0 + self.p_d * self.h_dd
    }
}

/// Unvalidated input for [`SystemConfig::validate`].
#[derive(Debug, Clone)]
pub struct RawSystemConfig {
    pub p_a: Option<f64>,
    pub p_d: Option<f64>,
    pub k: Option<f64>,
    pub eta: f64,
    pub n0: f64,
    pub h_dd: f64,
    pub gamma0: f64,
    pub alpha: f64,
    pub d_ac: f64,
    pub d_cd: f64,
    pub d_db: f64,
    pub d_ad: Option<f64>,
    pub d_ab: Option<f64>,
    pub m: [u32; 6],
    pub baseline_half_block: bool,
}

fn resolve_powers(p_a: Option<f64>, p_d: Option<f64>, k: Option<f64>) -> Result<(f64, f64, f64)> {
    match (p_a, p_d, k) {
        (Some(a), Some(d), None) => Ok((a, d, a / d)),
        (Some(a), Some(d), Some(k)) => {
            if (a - k * d).abs() > 1e-9 * a.abs().max(k * d) {
                Err(Error::Config(format!("p_a = {a} inconsistent with k * p_d = {}", k * d)))
            } else {
                Ok((a, d, k))
            }
        }
        (None, Some(d), Some(k)) => Ok((k * d, d, k)),
        (Some(a), None, Some(k)) => Ok((a, a / k, k)),
        _ => Err(Error::Config(
            "powers underdetermined: give p_a and p_d, or one of them plus k".into(),
        )),
    }
}

/// Finite battery at the ST, uniformly discretized into `levels + 1` states
/// `eps_j = j * capacity / levels`, `j = 0..=levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryModel {
    /// Capacity `C` (energy units).
    pub capacity: f64,
    /// Number of levels `L`.
    pub levels: u32,
    /// Energy spent per transmission, `0 < e_t <= capacity`.
    pub e_t: f64,
    /// Level width `eps_1 = capacity / levels`.
    pub eps1: f64,
    /// Smallest level index whose energy covers `e_t`:
    /// `t = min { j >= 1 : j * eps_1 >= e_t }`.
    pub t: u32,
}

impl BatteryModel {
    pub fn new(capacity: f64, levels: u32, e_t: f64) -> Result<BatteryModel> {
        if !(capacity > 0.0) || !capacity.is_finite() {
            return Err(Error::Config(format!("capacity must be positive, got {capacity}")));
        }
        if levels < 1 {
            return Err(Error::Config("battery needs at least one level".into()));
        }
        if !(e_t > 0.0) || !e_t.is_finite() {
            return Err(Error::Config(format!("e_t must be positive, got {e_t}")));
        }
        if e_t > capacity {
            return Err(Error::Config(format!(
                "transmission threshold e_t = {e_t} exceeds battery capacity {capacity}"
            )));
        }
        let eps1 = capacity / levels as f64;
        let t = ((e_t * levels as f64 / capacity - GRID_EPS).ceil().max(1.0)) as u32;
        debug_assert!(t >= 1 && t <= levels);
        Ok(BatteryModel { capacity, levels, e_t, eps1, t })
    }

    /// Energy of level `j`.
    pub fn level_energy(&self, j: u32) -> f64 {
        j as f64 * self.eps1
    }
}

/// Per-link fading statistics: the scaled power gain of link `id` is
/// gamma(shape `m`, mean `omega`), with rate `beta = m / omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStat {
    pub id: u8,
    pub m: u32,
    pub omega: f64,
    pub beta: f64,
}

impl LinkStat {
    fn new(id: u8, m: u32, omega: f64) -> LinkStat {
        LinkStat { id, m, omega, beta: m as f64 / omega }
    }
}

/// The six [`LinkStat`]s of a scenario, indexable by 1-based link id.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStats(pub [LinkStat; 6]);

impl LinkStats {
    pub fn get(&self, id: u8) -> &LinkStat {
        assert!((1..=6).contains(&id), "link id {id} outside 1..=6");
        &self.0[id as usize - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = &LinkStat> {
        self.0.iter()
    }
}

/// Computes the six link statistics from the system parameters.
///
/// With `g_i` the unit-mean-at-1m Nakagami power gain (mean `d^-alpha`):
///
/// * `Omega_1 = p_a d_ac^-alpha / n0`        (scaled gain `p_a g_ac / n0`)
/// * `Omega_2 = p_d d_cd^-alpha / n0`        (scaled gain `p_d g_cd / n0`)
/// * `Omega_3 = 2 e_t d_cb^-alpha / n0`      with `d_cb = d_cd + d_db`
/// * `Omega_4 = p_a d_ad^-alpha / (n0 + p_d h_dd)`
/// * `Omega_5 = p_d d_db^-alpha / n0`
/// * `Omega_6 = p_a d_ab^-alpha / n0`
///
/// Link 3 is the interference the ST causes at PR while transmitting with
/// power `2 e_t` (the banked energy spent over half a block), hence its
/// dependence on the battery threshold.
pub fn derive_link_stats(config: &SystemConfig, battery: &BatteryModel) -> LinkStats {
    let pl = |d: f64| d.powf(-config.alpha);
    let d_cb = config.d_cd + config.d_db;
    LinkStats([
        LinkStat::new(1, config.m[0], config.p_a * pl(config.d_ac) / config.n0),
        LinkStat::new(2, config.m[1], config.p_d * pl(config.d_cd) / config.n0),
        LinkStat::new(3, config.m[2], 2.0 * battery.e_t * pl(d_cb) / config.n0),
        LinkStat::new(4, config.m[3], config.p_a * pl(config.d_ad) / config.hap_noise()),
        LinkStat::new(5, config.m[4], config.p_d * pl(config.d_db) / config.n0),
        LinkStat::new(6, config.m[5], config.p_a * pl(config.d_ab) / config.n0),
    ])
}

/// A full scenario: system parameters plus battery.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    pub battery: BatteryModel,
}

impl Scenario {
    pub fn links(&self) -> LinkStats {
        derive_link_stats(&self.config, &self.battery)
    }

    /// Returns a copy with both transmit powers replaced (`k` preserved from
    /// the new values).
    pub fn with_powers(&self, p_a: f64, p_d: f64) -> Scenario {
        let mut s = self.clone();
        s.config.p_a = p_a;
        s.config.p_d = p_d;
        s.config.k = p_a / p_d;
        s
    }

    /// Returns a copy with a new transmission threshold.
    pub fn with_e_t(&self, e_t: f64) -> Result<Scenario> {
        Ok(Scenario {
            config: self.config.clone(),
            battery: BatteryModel::new(self.battery.capacity, self.battery.levels, e_t)?,
        })
    }

    /// Returns a copy with a new level count.
    pub fn with_levels(&self, levels: u32) -> Result<Scenario> {
        Ok(Scenario {
            config: self.config.clone(),
            battery: BatteryModel::new(self.battery.capacity, levels, self.battery.e_t)?,
        })
    }

    /// Power-sweep preset: symmetric powers (`k = 1`), close-in harvesting
    /// geometry, 1000-level battery. The default operating point is 20 dBm;
    /// sweeps replace the powers per point.
    pub fn fig2() -> Scenario {
        Scenario::preset(1000)
    }

    /// Threshold-sweep preset: identical geometry with the coarser 400-level
    /// battery used for threshold sweeps.
    pub fn fig3() -> Scenario {
        Scenario::preset(400)
    }

    fn preset(levels: u32) -> Scenario {
        let config = SystemConfig::validate(RawSystemConfig {
            p_a: None,
            p_d: Some(0.1),
            k: Some(1.0),
            eta: 0.5,
            n0: 1e-5,
            h_dd: 1e-5,
            gamma0: 3.0,
            alpha: 3.0,
            d_ac: 3.0,
            d_cd: 3.0,
            d_db: 14.0,
            d_ad: None,
            d_ab: None,
            m: [3, 3, 3, 1, 1, 1],
            baseline_half_block: false,
        })
        .expect("preset config is valid");
        let battery = BatteryModel::new(5e-3, levels, 2e-3).expect("preset battery is valid");
        Scenario { config, battery }
    }

    /// Parses a scenario from TOML text. Powers accept a bare number (watts)
    /// or a string with an explicit unit: `"20 dBm"`, `"0.1 W"`, `"100 mW"`.
    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let raw: RawScenarioFile = toml::from_str(text)
            .map_err(|e| Error::Config(format!("cannot parse scenario file: {e}")))?;
        raw.into_scenario()
    }

    pub fn from_path(path: &std::path::Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Scenario::from_toml_str(&text)
    }
}

/// Scenario file schema (TOML, `key = value`).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenarioFile {
    p_a: Option<PowerValue>,
    p_d: Option<PowerValue>,
    k: Option<f64>,
    eta: f64,
    n0: PowerValue,
    #[serde(default = "default_h_dd")]
    h_dd: f64,
    #[serde(default = "default_gamma0")]
    gamma0: f64,
    alpha: f64,
    d_ac: f64,
    d_cd: f64,
    d_db: f64,
    d_ad: Option<f64>,
    d_ab: Option<f64>,
    m: Vec<u32>,
    capacity: f64,
    levels: u32,
    e_t: f64,
    #[serde(default)]
    baseline_half_block: bool,
}

fn default_h_dd() -> f64 {
    1e-5
}

fn default_gamma0() -> f64 {
    3.0
}

impl RawScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let m: [u32; 6] = self
            .m
            .as_slice()
            .try_into()
            .map_err(|_| Error::Config(format!("m must list 6 orders, got {}", self.m.len())))?;
        let config = SystemConfig::validate(RawSystemConfig {
            p_a: self.p_a.map(|p| p.watts()).transpose()?,
            p_d: self.p_d.map(|p| p.watts()).transpose()?,
            k: self.k,
            eta: self.eta,
            n0: self.n0.watts()?,
            h_dd: self.h_dd,
            gamma0: self.gamma0,
            alpha: self.alpha,
            d_ac: self.d_ac,
            d_cd: self.d_cd,
            d_db: self.d_db,
            d_ad: self.d_ad,
            d_ab: self.d_ab,
            m,
            baseline_half_block: self.baseline_half_block,
        })?;
        let battery = BatteryModel::new(self.capacity, self.levels, self.e_t)?;
        Ok(Scenario { config, battery })
    }
}

/// A power given either as bare watts or as `"<number> <unit>"` with unit
/// `dBm`, `W` or `mW` (case-insensitive).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PowerValue {
    Watts(f64),
    WithUnit(String),
}

impl PowerValue {
    fn watts(&self) -> Result<f64> {
        match self {
            PowerValue::Watts(w) => Ok(*w),
            PowerValue::WithUnit(s) => parse_power(s),
        }
    }
}

fn parse_power(s: &str) -> Result<f64> {
    let s = s.trim();
    // the unit is the trailing run of letters; the number before it may
    // itself contain an exponent marker, so split from the right
    let split = s
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_alphabetic())
        .last()
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Config(format!("power '{s}' lacks a unit suffix")))?;
    let (num, unit) = s.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse power value in '{s}'")))?;
    match unit.trim().to_ascii_lowercase().as_str() {
        "dbm" => Ok(dbm_to_watts(value)),
        "w" => Ok(value),
        "mw" => Ok(value * 1e-3),
        other => Err(Error::Config(format!("unknown power unit '{other}' in '{s}'"))),
    }
}
