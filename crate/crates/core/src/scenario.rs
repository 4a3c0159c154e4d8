//! Experiment description and its flat TOML document format.
//!
//! Schema version 1. Every key sits at the top level of the document:
//!
//! | key | type | default |
//! |-----|------|---------|
//! | `version` | integer | `1` |
//! | `num_slots` | integer ≥ 0 | required |
//! | `M` | UAV count ≥ 1 | required |
//! | `L` | user count ≥ 1 | required |
//! | `K` | subchannel count ≥ 1 | required |
//! | `J` | power level count ≥ 1 | required |
//! | `radius_m` | float | `500` |
//! | `altitude_m` | float | `100` |
//! | `slot_duration_s` | float | `0.1` |
//! | `speed_mps` | float | `40` |
//! | `start_angles_deg` | list of M floats | random per seed |
//! | `channel` | `"probabilistic"` or `"los"` | `"probabilistic"` |
//! | `los_sampling` | bool | `false` |
//! | `a_env`, `b_env` | float | `9.61`, `0.16` |
//! | `carrier_hz` | float | `2e9` |
//! | `eta_los_db`, `eta_nlos_db` | float | `1`, `20` |
//! | `beta0_db`, `alpha` | float | `-60`, `2` |
//! | `bandwidth_hz` | per-subchannel bandwidth | `75000` |
//! | `max_power_dbm` | float | `23` |
//! | `omega` | cost per mW | `100` |
//! | `sinr_threshold_db` | float | `3` |
//! | `noise_dbm` | float | `-80` |
//! | `discount`, `epsilon` | float | `1`, `0.5` |
//! | `c_alpha`, `phi_alpha` | float | `0.5`, `0.8` |
//! | `clamp_alpha` | bool | `true` |
//! | `seeds` | list of integers | `0..20` |
//!
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{db_to_linear, ChannelModel, LosChannelParams, ProbChannelParams};
use crate::error::{Error, Result};
use crate::learn::LearningConfig;
use crate::radio::{power_levels_from_max, ActionSpace, PowerLevels, RewardParams};
use crate::world::DiskWorld;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED_COUNT: u64 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    pub num_subchannels: usize,
    pub bandwidth_per_subchannel_hz: f64,
    pub num_levels: usize,
    pub max_power_dbm: f64,
    pub power_cost: f64,
    pub sinr_threshold_db: f64,
    pub noise_dbm: f64,
}

impl RadioConfig {
    pub fn power_levels(&self) -> Result<PowerLevels> {
        power_levels_from_max(self.max_power_dbm, self.num_levels)
    }

    /// Noise is carried in milliwatts, the same unit as transmit power.
    pub fn reward_params(&self) -> RewardParams {
        RewardParams {
            bandwidth_per_subchannel_hz: self.bandwidth_per_subchannel_hz,
            power_cost: self.power_cost,
            sinr_threshold_linear: db_to_linear(self.sinr_threshold_db),
            noise_mw: db_to_linear(self.noise_dbm),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetConfig {
    pub num_uavs: usize,
    pub num_users: usize,
    pub speed_mps: f64,
    /// Edge angle of each UAV's start point; drawn per seed when absent.
    pub start_angles_deg: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub world: DiskWorld,
    pub channel: ChannelModel,
    pub radio: RadioConfig,
    pub fleet: FleetConfig,
    pub learning: LearningConfig,
    pub seeds: Vec<u64>,
}

impl Scenario {
    /// Reference parameter set for the given dimensions and horizon.
    pub fn reference_defaults(
        num_uavs: usize,
        num_users: usize,
        k: usize,
        j: usize,
        num_slots: usize,
    ) -> Self {
        Scenario {
            world: DiskWorld {
                radius_m: 500.0,
                uav_altitude_m: 100.0,
                slot_duration_s: 0.1,
                num_slots,
            },
            channel: ChannelModel::Probabilistic {
                params: ProbChannelParams::default(),
                sample_los: false,
            },
            radio: RadioConfig {
                num_subchannels: k,
                bandwidth_per_subchannel_hz: 75e3,
                num_levels: j,
                max_power_dbm: 23.0,
                power_cost: 100.0,
                sinr_threshold_db: 3.0,
                noise_dbm: -80.0,
            },
            fleet: FleetConfig {
                num_uavs,
                num_users,
                speed_mps: 40.0,
                start_angles_deg: None,
            },
            learning: LearningConfig::default(),
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
        }
    }

    pub fn action_space(&self) -> ActionSpace {
        ActionSpace {
            num_users: self.fleet.num_users,
            num_subchannels: self.radio.num_subchannels,
            num_levels: self.radio.num_levels,
        }
    }

    /// The shared learning config, once per UAV.
    pub fn agent_configs(&self) -> Vec<LearningConfig> {
        vec![self.learning; self.fleet.num_uavs]
    }

    pub fn validate(&self) -> Result<()> {
        let keyed = |key: &'static str| move |e: Error| Error::config(key, e.to_string());
        if self.fleet.num_uavs == 0 {
            return Err(Error::config("M", "at least one UAV is required"));
        }
        if self.fleet.num_users == 0 {
            return Err(Error::config("L", "at least one user is required"));
        }
        if self.radio.num_subchannels == 0 {
            return Err(Error::config("K", "at least one subchannel is required"));
        }
        if self.radio.num_levels == 0 {
            return Err(Error::config("J", "at least one power level is required"));
        }
        if !(self.world.radius_m > 0.0) {
            return Err(Error::config("radius_m", "must be positive"));
        }
        if !(self.world.uav_altitude_m > 0.0) {
            return Err(Error::config("altitude_m", "must be positive"));
        }
        if !(self.world.slot_duration_s > 0.0) {
            return Err(Error::config("slot_duration_s", "must be positive"));
        }
        if !(self.fleet.speed_mps >= 0.0 && self.fleet.speed_mps.is_finite()) {
            return Err(Error::config("speed_mps", "must be non-negative"));
        }
        if let Some(angles) = &self.fleet.start_angles_deg {
            if angles.len() != self.fleet.num_uavs {
                return Err(Error::config(
                    "start_angles_deg",
                    format!(
                        "expected {} angles, got {}",
                        self.fleet.num_uavs,
                        angles.len()
                    ),
                ));
            }
            if angles.iter().any(|a| !a.is_finite()) {
                return Err(Error::config("start_angles_deg", "angles must be finite"));
            }
        }
        match &self.channel {
            ChannelModel::Probabilistic { params, .. } => {
                if !(params.a_env > 0.0) {
                    return Err(Error::config("a_env", "must be positive"));
                }
                if !(params.b_env > 0.0) {
                    return Err(Error::config("b_env", "must be positive"));
                }
                if !(params.carrier_hz > 0.0) {
                    return Err(Error::config("carrier_hz", "must be positive"));
                }
                params.validate().map_err(keyed("channel"))?;
            }
            ChannelModel::LineOfSight(params) => {
                if !(params.alpha >= 2.0) {
                    return Err(Error::config(
                        "alpha",
                        "path-loss exponent must be at least 2",
                    ));
                }
                params.validate().map_err(keyed("channel"))?;
            }
        }
        if !(self.radio.bandwidth_per_subchannel_hz > 0.0) {
            return Err(Error::config("bandwidth_hz", "must be positive"));
        }
        if !(self.radio.power_cost >= 0.0) {
            return Err(Error::config("omega", "must be non-negative"));
        }
        if !self.radio.max_power_dbm.is_finite() {
            return Err(Error::config("max_power_dbm", "must be finite"));
        }
        if !self.radio.sinr_threshold_db.is_finite() {
            return Err(Error::config("sinr_threshold_db", "must be finite"));
        }
        if !self.radio.noise_dbm.is_finite() {
            return Err(Error::config("noise_dbm", "must be finite"));
        }
        let l = &self.learning;
        if !(0.0..=1.0).contains(&l.discount) {
            return Err(Error::config("discount", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&l.epsilon) {
            return Err(Error::config("epsilon", "must lie in [0, 1]"));
        }
        if !(l.c_alpha > 0.0) {
            return Err(Error::config("c_alpha", "must be positive"));
        }
        if !(l.phi_alpha > 0.5 && l.phi_alpha <= 1.0) {
            return Err(Error::config("phi_alpha", "must lie in (0.5, 1]"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&ScenarioDoc::from(self)).expect("scenario document serialises")
    }

    /// Hex SHA-256 of the normalised document.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ChannelKind {
    Probabilistic,
    Los,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    version: Option<u32>,
    num_slots: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "J")]
    j: usize,
    radius_m: Option<f64>,
    altitude_m: Option<f64>,
    slot_duration_s: Option<f64>,
    speed_mps: Option<f64>,
    start_angles_deg: Option<Vec<f64>>,
    channel: Option<ChannelKind>,
    los_sampling: Option<bool>,
    a_env: Option<f64>,
    b_env: Option<f64>,
    carrier_hz: Option<f64>,
    eta_los_db: Option<f64>,
    eta_nlos_db: Option<f64>,
    beta0_db: Option<f64>,
    alpha: Option<f64>,
    bandwidth_hz: Option<f64>,
    max_power_dbm: Option<f64>,
    omega: Option<f64>,
    sinr_threshold_db: Option<f64>,
    noise_dbm: Option<f64>,
    discount: Option<f64>,
    epsilon: Option<f64>,
    c_alpha: Option<f64>,
    phi_alpha: Option<f64>,
    clamp_alpha: Option<bool>,
    seeds: Option<Vec<u64>>,
}

impl From<&Scenario> for ScenarioDoc {
    fn from(s: &Scenario) -> Self {
        let (kind, sampling, prob, los) = match s.channel {
            ChannelModel::Probabilistic { params, sample_los } => (
                ChannelKind::Probabilistic,
                sample_los,
                params,
                LosChannelParams::default(),
            ),
            ChannelModel::LineOfSight(params) => (
                ChannelKind::Los,
                false,
                ProbChannelParams::default(),
                params,
            ),
        };
        ScenarioDoc {
            version: Some(SCHEMA_VERSION),
            num_slots: s.world.num_slots,
            m: s.fleet.num_uavs,
            l: s.fleet.num_users,
            k: s.radio.num_subchannels,
            j: s.radio.num_levels,
            radius_m: Some(s.world.radius_m),
            altitude_m: Some(s.world.uav_altitude_m),
            slot_duration_s: Some(s.world.slot_duration_s),
            speed_mps: Some(s.fleet.speed_mps),
            start_angles_deg: s.fleet.start_angles_deg.clone(),
            channel: Some(kind),
            los_sampling: Some(sampling),
            a_env: Some(prob.a_env),
            b_env: Some(prob.b_env),
            carrier_hz: Some(prob.carrier_hz),
            eta_los_db: Some(prob.eta_los_db),
            eta_nlos_db: Some(prob.eta_nlos_db),
            beta0_db: Some(los.beta0_db),
            alpha: Some(los.alpha),
            bandwidth_hz: Some(s.radio.bandwidth_per_subchannel_hz),
            max_power_dbm: Some(s.radio.max_power_dbm),
            omega: Some(s.radio.power_cost),
            sinr_threshold_db: Some(s.radio.sinr_threshold_db),
            noise_dbm: Some(s.radio.noise_dbm),
            discount: Some(s.learning.discount),
            epsilon: Some(s.learning.epsilon),
            c_alpha: Some(s.learning.c_alpha),
            phi_alpha: Some(s.learning.phi_alpha),
            clamp_alpha: Some(s.learning.clamp_alpha),
            seeds: Some(s.seeds.clone()),
        }
    }
}

impl ScenarioDoc {
    fn into_scenario(self) -> Result<Scenario> {
        if let Some(v) = self.version {
            if v != SCHEMA_VERSION {
                return Err(Error::config(
                    "version",
                    format!("unsupported schema version {v}"),
                ));
            }
        }
        let mut s = Scenario::reference_defaults(self.m, self.l, self.k, self.j, self.num_slots);
        let w = &mut s.world;
        w.radius_m = self.radius_m.unwrap_or(w.radius_m);
        w.uav_altitude_m = self.altitude_m.unwrap_or(w.uav_altitude_m);
        w.slot_duration_s = self.slot_duration_s.unwrap_or(w.slot_duration_s);
        s.fleet.speed_mps = self.speed_mps.unwrap_or(s.fleet.speed_mps);
        s.fleet.start_angles_deg = self.start_angles_deg;

        let prob_defaults = ProbChannelParams::default();
        let los_defaults = LosChannelParams::default();
        s.channel = match self.channel.unwrap_or(ChannelKind::Probabilistic) {
            ChannelKind::Probabilistic => ChannelModel::Probabilistic {
                params: ProbChannelParams {
                    a_env: self.a_env.unwrap_or(prob_defaults.a_env),
                    b_env: self.b_env.unwrap_or(prob_defaults.b_env),
                    carrier_hz: self.carrier_hz.unwrap_or(prob_defaults.carrier_hz),
                    eta_los_db: self.eta_los_db.unwrap_or(prob_defaults.eta_los_db),
                    eta_nlos_db: self.eta_nlos_db.unwrap_or(prob_defaults.eta_nlos_db),
                },
                sample_los: self.los_sampling.unwrap_or(false),
            },
            ChannelKind::Los => {
                if self.los_sampling == Some(true) {
                    return Err(Error::config(
                        "los_sampling",
                        "only applies to the probabilistic channel",
                    ));
                }
                ChannelModel::LineOfSight(LosChannelParams {
                    beta0_db: self.beta0_db.unwrap_or(los_defaults.beta0_db),
                    alpha: self.alpha.unwrap_or(los_defaults.alpha),
                })
            }
        };

        let r = &mut s.radio;
        r.bandwidth_per_subchannel_hz = self.bandwidth_hz.unwrap_or(r.bandwidth_per_subchannel_hz);
        r.max_power_dbm = self.max_power_dbm.unwrap_or(r.max_power_dbm);
        r.power_cost = self.omega.unwrap_or(r.power_cost);
        r.sinr_threshold_db = self.sinr_threshold_db.unwrap_or(r.sinr_threshold_db);
        r.noise_dbm = self.noise_dbm.unwrap_or(r.noise_dbm);

        let l = &mut s.learning;
        l.discount = self.discount.unwrap_or(l.discount);
        l.epsilon = self.epsilon.unwrap_or(l.epsilon);
        l.c_alpha = self.c_alpha.unwrap_or(l.c_alpha);
        l.phi_alpha = self.phi_alpha.unwrap_or(l.phi_alpha);
        l.clamp_alpha = self.clamp_alpha.unwrap_or(l.clamp_alpha);

        if let Some(seeds) = self.seeds {
            if seeds.is_empty() {
                return Err(Error::config("seeds", "seed list must not be empty"));
            }
            s.seeds = seeds;
        }
        s.validate()?;
        Ok(s)
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let key = key_from_message(&message)
            .or_else(|| e.span().and_then(|span| key_at(text, span.start)))
            .unwrap_or_else(|| "<document>".to_string());
        Error::config(key, message)
    })?;
    doc.into_scenario()
}

pub fn load_scenario(path: &std::path::Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

// "missing field `J`" / "unknown field `foo`, expected ..."
fn key_from_message(message: &str) -> Option<String> {
    if !(message.starts_with("missing field") || message.starts_with("unknown field")) {
        return None;
    }
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

fn key_at(text: &str, offset: usize) -> Option<String> {
    let line_start = text[..offset.min(text.len())]
        .rfind('\n')
        .map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next()?;
    let key = line.split('=').next()?.trim();
    (!key.is_empty() && !line.trim_start().starts_with('#')).then(|| key.to_string())
}
