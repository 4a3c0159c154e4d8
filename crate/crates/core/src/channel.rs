//! Air-to-ground channel gains.
//!
//! Two propagation models are supported: the probabilistic LoS/NLoS model
//! (free-space loss plus a LoS-probability-weighted excess loss) and the pure
//! LoS model `β₀·d^(−α)`. Gains are frequency flat across subchannels.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::world::{distance_3d, Position, UserField};

pub const SPEED_OF_LIGHT_MPS: f64 = 3.0e8;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbChannelParams {
    pub a_env: f64,
    pub b_env: f64,
    pub carrier_hz: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
}

impl ProbChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_env > 0.0) || !(self.b_env > 0.0) {
            return Err(Error::invalid(
                "environment constants a and b must be positive",
            ));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        if !self.eta_los_db.is_finite() || !self.eta_nlos_db.is_finite() {
            return Err(Error::invalid("excess losses must be finite"));
        }
        Ok(())
    }
}

impl Default for ProbChannelParams {
    /// Suburban constants at 2 GHz.
    fn default() -> Self {
        ProbChannelParams {
            a_env: 9.61,
            b_env: 0.16,
            carrier_hz: 2.0e9,
            eta_los_db: 1.0,
            eta_nlos_db: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosChannelParams {
    pub beta0_db: f64,
    pub alpha: f64,
}

impl LosChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 2.0) {
            return Err(Error::invalid(format!(
                "path-loss exponent must be at least 2, got {}",
                self.alpha
            )));
        }
        if !self.beta0_db.is_finite() {
            return Err(Error::invalid("reference gain must be finite"));
        }
        Ok(())
    }
}

impl Default for LosChannelParams {
    fn default() -> Self {
        LosChannelParams {
            beta0_db: -60.0,
            alpha: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChannelModel {
    /// Mean pathloss under the LoS/NLoS mixture. With `sample_los` the link
    /// state is drawn per (UAV, user, slot) instead of averaged.
    Probabilistic {
        params: ProbChannelParams,
        sample_los: bool,
    },
    LineOfSight(LosChannelParams),
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ChannelModel::Probabilistic { params, .. } => params.validate(),
            ChannelModel::LineOfSight(params) => params.validate(),
        }
    }
}

/// Elevation angle in degrees.
fn elevation_deg(distance_m: f64, altitude_m: f64) -> f64 {
    (altitude_m / distance_m).asin() * 180.0 / PI
}

fn check_slant(distance_m: f64, altitude_m: f64) -> Result<()> {
    if !(altitude_m > 0.0) {
        return Err(Error::invalid(format!(
            "altitude must be positive, got {altitude_m}"
        )));
    }
    if !(distance_m >= altitude_m) {
        return Err(Error::invalid(format!(
            "slant distance {distance_m} is below the altitude {altitude_m}"
        )));
    }
    Ok(())
}

pub fn los_probability(
    params: &ProbChannelParams,
    distance_m: f64,
    altitude_m: f64,
) -> Result<f64> {
    check_slant(distance_m, altitude_m)?;
    let theta = elevation_deg(distance_m, altitude_m);
    Ok(1.0 / (1.0 + params.a_env * (-params.b_env * (theta - params.a_env)).exp()))
}

pub fn free_space_pathloss_db(distance_m: f64, carrier_hz: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !(carrier_hz > 0.0) {
        return Err(Error::invalid(format!(
            "free-space loss needs positive distance and frequency, got d={distance_m}, f={carrier_hz}"
        )));
    }
    Ok(20.0 * distance_m.log10()
        + 20.0 * carrier_hz.log10()
        + 20.0 * (4.0 * PI / SPEED_OF_LIGHT_MPS).log10())
}

pub fn mean_pathloss_db(
    params: &ProbChannelParams,
    distance_m: f64,
    altitude_m: f64,
) -> Result<f64> {
    let p_los = los_probability(params, distance_m, altitude_m)?;
    let fs = free_space_pathloss_db(distance_m, params.carrier_hz)?;
    Ok(p_los * (fs + params.eta_los_db) + (1.0 - p_los) * (fs + params.eta_nlos_db))
}

pub fn los_gain(params: &LosChannelParams, distance_m: f64) -> Result<f64> {
    if !(distance_m >= 1.0) {
        return Err(Error::invalid(format!(
            "distance {distance_m} m is below the 1 m reference distance"
        )));
    }
    Ok(db_to_linear(params.beta0_db) * distance_m.powf(-params.alpha))
}

/// Linear power gains indexed `[uav][user][subchannel]` for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    num_uavs: usize,
    num_users: usize,
    num_subchannels: usize,
    slot: usize,
    gains: Vec<f64>,
}

impl GainMatrix {
    pub fn from_fn(
        num_uavs: usize,
        num_users: usize,
        num_subchannels: usize,
        slot: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut gains = Vec::with_capacity(num_uavs * num_users * num_subchannels);
        for m in 0..num_uavs {
            for l in 0..num_users {
                for k in 0..num_subchannels {
                    gains.push(f(m, l, k));
                }
            }
        }
        GainMatrix {
            num_uavs,
            num_users,
            num_subchannels,
            slot,
            gains,
        }
    }

    #[inline]
    pub fn get(&self, uav: usize, user: usize, subchannel: usize) -> f64 {
        debug_assert!(
            uav < self.num_uavs && user < self.num_users && subchannel < self.num_subchannels
        );
        self.gains[(uav * self.num_users + user) * self.num_subchannels + subchannel]
    }

    pub fn num_uavs(&self) -> usize {
        self.num_uavs
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_subchannels(&self) -> usize {
        self.num_subchannels
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gains
    }
}

/// Gains between every UAV and user at `slot`. `rng` is only consumed when the
/// probabilistic model samples link states.
pub fn build_gain_matrix<R: Rng + ?Sized>(
    model: &ChannelModel,
    uavs: &[Position],
    users: &UserField,
    altitude_m: f64,
    num_subchannels: usize,
    slot: usize,
    rng: &mut R,
) -> Result<GainMatrix> {
    if num_subchannels == 0 {
        return Err(Error::invalid("at least one subchannel is required"));
    }
    let mut links = Vec::with_capacity(uavs.len() * users.len());
    for uav in uavs {
        for user in &users.positions {
            let d = distance_3d(*uav, *user, altitude_m);
            let gain = match model {
                ChannelModel::Probabilistic {
                    params,
                    sample_los: false,
                } => db_to_linear(-mean_pathloss_db(params, d, altitude_m)?),
                ChannelModel::Probabilistic {
                    params,
                    sample_los: true,
                } => {
                    let p_los = los_probability(params, d, altitude_m)?;
                    let fs = free_space_pathloss_db(d, params.carrier_hz)?;
                    let eta = if rng.random::<f64>() < p_los {
                        params.eta_los_db
                    } else {
                        params.eta_nlos_db
                    };
                    db_to_linear(-(fs + eta))
                }
                ChannelModel::LineOfSight(params) => los_gain(params, d)?,
            };
            if !(gain > 0.0 && gain.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-positive channel gain {gain} at distance {d}"
                )));
            }
            links.push(gain);
        }
    }
    let num_users = users.len();
    Ok(GainMatrix::from_fn(
        uavs.len(),
        num_users,
        num_subchannels,
        slot,
        |m, l, _| links[m * num_users + l],
    ))
}
