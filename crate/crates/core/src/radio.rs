//! Per-slot link budget: SINR under co-channel interference, Shannon rate and
//! the QoS-gated reward each UAV receives.

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, GainMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLevels {
    levels_mw: Vec<f64>,
}

impl PowerLevels {
    pub fn new(levels_mw: Vec<f64>) -> Result<Self> {
        if levels_mw.is_empty() {
            return Err(Error::invalid("at least one power level is required"));
        }
        if levels_mw.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::invalid("power levels must be positive and finite"));
        }
        if levels_mw.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("power levels must be strictly increasing"));
        }
        Ok(PowerLevels { levels_mw })
    }

    pub fn len(&self) -> usize {
        self.levels_mw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels_mw.is_empty()
    }

    pub fn get(&self, level: usize) -> f64 {
        self.levels_mw[level]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.levels_mw
    }
}

/// `count` equally spaced levels `P_max·j/count`, j = 1..=count.
pub fn power_levels_from_max(max_dbm: f64, count: usize) -> Result<PowerLevels> {
    if count == 0 {
        return Err(Error::invalid("number of power levels must be at least 1"));
    }
    let max_mw = db_to_linear(max_dbm);
    PowerLevels::new(
        (1..=count)
            .map(|j| max_mw * j as f64 / count as f64)
            .collect(),
    )
}

/// One UAV's choice of served user, subchannel and power level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub user: usize,
    pub subchannel: usize,
    pub power_level: usize,
}

/// Dimensions of a UAV's action set (users × subchannels × levels).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpace {
    pub num_users: usize,
    pub num_subchannels: usize,
    pub num_levels: usize,
}

impl ActionSpace {
    pub fn size(&self) -> usize {
        self.num_users * self.num_subchannels * self.num_levels
    }

    pub fn contains(&self, a: &Action) -> bool {
        a.user < self.num_users
            && a.subchannel < self.num_subchannels
            && a.power_level < self.num_levels
    }

    /// Row-major: user, then subchannel, then power level.
    pub fn index_of(&self, a: &Action) -> usize {
        (a.user * self.num_subchannels + a.subchannel) * self.num_levels + a.power_level
    }

    pub fn action(&self, index: usize) -> Action {
        debug_assert!(index < self.size());
        Action {
            user: index / (self.num_subchannels * self.num_levels),
            subchannel: (index / self.num_levels) % self.num_subchannels,
            power_level: index % self.num_levels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub bandwidth_per_subchannel_hz: f64,
    /// Cost per milliwatt of transmit power.
    pub power_cost: f64,
    pub sinr_threshold_linear: f64,
    pub noise_mw: f64,
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.power_cost >= 0.0 && self.power_cost.is_finite()) {
            return Err(Error::invalid(format!(
                "power cost must be non-negative, got {}",
                self.power_cost
            )));
        }
        for (name, v) in [
            ("bandwidth", self.bandwidth_per_subchannel_hz),
            ("SINR threshold", self.sinr_threshold_linear),
            ("noise power", self.noise_mw),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

fn check_joint(joint: &[Action], gains: &GainMatrix, levels: &PowerLevels) -> Result<()> {
    if joint.len() != gains.num_uavs() {
        return Err(Error::invalid(format!(
            "joint action has {} entries for {} UAVs",
            joint.len(),
            gains.num_uavs()
        )));
    }
    for (m, a) in joint.iter().enumerate() {
        if a.user >= gains.num_users()
            || a.subchannel >= gains.num_subchannels()
            || a.power_level >= levels.len()
        {
            return Err(Error::invalid(format!(
                "action {a:?} of UAV {m} is out of range"
            )));
        }
    }
    Ok(())
}

/// SINR of `agent` at its chosen user. Only UAVs on the same subchannel
/// interfere, each through its own gain towards that user.
pub fn sinr(
    agent: usize,
    joint: &[Action],
    gains: &GainMatrix,
    levels: &PowerLevels,
    noise_mw: f64,
) -> Result<f64> {
    check_joint(joint, gains, levels)?;
    if agent >= joint.len() {
        return Err(Error::invalid(format!("agent {agent} out of range")));
    }
    let own = joint[agent];
    let signal = gains.get(agent, own.user, own.subchannel) * levels.get(own.power_level);
    let interference: f64 = joint
        .iter()
        .enumerate()
        .filter(|&(j, a)| j != agent && a.subchannel == own.subchannel)
        .map(|(j, a)| gains.get(j, own.user, a.subchannel) * levels.get(a.power_level))
        .sum();
    Ok(signal / (interference + noise_mw))
}

/// Shannon rate in bit/s.
pub fn rate(gamma: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + gamma).log2()
}

/// Returns `(reward, qos_state)`; the reward is zero unless the SINR meets
/// the threshold.
pub fn reward(
    agent: usize,
    joint: &[Action],
    gains: &GainMatrix,
    params: &RewardParams,
    levels: &PowerLevels,
) -> Result<(f64, u8)> {
    let gamma = sinr(agent, joint, gains, levels, params.noise_mw)?;
    Ok(gated_reward(
        gamma,
        levels.get(joint[agent].power_level),
        params,
    ))
}

pub(crate) fn gated_reward(gamma: f64, power_mw: f64, params: &RewardParams) -> (f64, u8) {
    if gamma >= params.sinr_threshold_linear {
        (
            rate(gamma, params.bandwidth_per_subchannel_hz) - params.power_cost * power_mw,
            1,
        )
    } else {
        (0.0, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn act(user: usize, subchannel: usize, power_level: usize) -> Action {
        Action {
            user,
            subchannel,
            power_level,
        }
    }

    const NOISE_MW: f64 = 1e-8; // -80 dBm

    fn reference_reward_params() -> RewardParams {
        RewardParams {
            bandwidth_per_subchannel_hz: 75e3,
            power_cost: 100.0,
            sinr_threshold_linear: db_to_linear(3.0),
            noise_mw: NOISE_MW,
        }
    }

    #[test]
    fn single_uav_sinr() {
        let g = GainMatrix::from_fn(1, 1, 1, 0, |_, _, _| 1e-10);
        let levels = PowerLevels::new(vec![100.0]).unwrap();
        let gamma = sinr(0, &[act(0, 0, 0)], &g, &levels, NOISE_MW).unwrap();
        assert!((gamma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_subchannels_do_not_interfere() {
        let g = GainMatrix::from_fn(2, 1, 2, 0, |_, _, _| 1e-10);
        let levels = PowerLevels::new(vec![100.0]).unwrap();
        let joint = [act(0, 0, 0), act(0, 1, 0)];
        let gamma = sinr(0, &joint, &g, &levels, NOISE_MW).unwrap();
        assert!((gamma - 1e-10 * 100.0 / NOISE_MW).abs() < 1e-12);
    }

    #[test]
    fn equal_cochannel_interferer_drives_sinr_to_one() {
        let g = GainMatrix::from_fn(2, 1, 1, 0, |_, _, _| 1e-6);
        let levels = PowerLevels::new(vec![100.0]).unwrap();
        let joint = [act(0, 0, 0), act(0, 0, 0)];
        let gamma = sinr(0, &joint, &g, &levels, NOISE_MW).unwrap();
        let expected = 1e-4 / (1e-4 + NOISE_MW);
        assert!((gamma - expected).abs() < 1e-15);
        assert!((gamma - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sinr_rejects_bad_dimensions() {
        let g = GainMatrix::from_fn(2, 1, 1, 0, |_, _, _| 1e-6);
        let levels = PowerLevels::new(vec![100.0]).unwrap();
        assert!(sinr(0, &[act(0, 0, 0)], &g, &levels, NOISE_MW).is_err());
        assert!(sinr(0, &[act(1, 0, 0), act(0, 0, 0)], &g, &levels, NOISE_MW).is_err());
        assert!(sinr(0, &[act(0, 0, 1), act(0, 0, 0)], &g, &levels, NOISE_MW).is_err());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate(1.0, 75e3), 75_000.0);
        assert_eq!(rate(0.0, 75e3), 0.0);
        assert_eq!(rate(3.0, 75e3), 150_000.0);
    }

    #[test]
    fn reward_examples() {
        let params = reference_reward_params();
        // gamma = 3 with P = 66.5 mW
        let g = GainMatrix::from_fn(1, 1, 1, 0, |_, _, _| 3.0 * NOISE_MW / 66.5);
        let levels = PowerLevels::new(vec![66.5]).unwrap();
        let (r, s) = reward(0, &[act(0, 0, 0)], &g, &params, &levels).unwrap();
        assert_eq!(s, 1);
        assert!((r - 143_350.0).abs() < 1e-6, "{r}");

        // gamma = 1 < 10^0.3
        let g = GainMatrix::from_fn(1, 1, 1, 0, |_, _, _| NOISE_MW / 66.5);
        assert_eq!(
            reward(0, &[act(0, 0, 0)], &g, &params, &levels).unwrap(),
            (0.0, 0)
        );

        let free = RewardParams {
            power_cost: 0.0,
            ..params
        };
        let g = GainMatrix::from_fn(1, 1, 1, 0, |_, _, _| 3.0 * NOISE_MW / 66.5);
        let (r, _) = reward(0, &[act(0, 0, 0)], &g, &free, &levels).unwrap();
        assert!((r - 150_000.0).abs() < 1e-6);
    }

    #[test]
    fn reward_can_be_negative_when_cost_dominates() {
        let params = RewardParams {
            power_cost: 1e6,
            ..reference_reward_params()
        };
        let g = GainMatrix::from_fn(1, 1, 1, 0, |_, _, _| 3.0 * NOISE_MW / 66.5);
        let levels = PowerLevels::new(vec![66.5]).unwrap();
        let (r, s) = reward(0, &[act(0, 0, 0)], &g, &params, &levels).unwrap();
        assert_eq!(s, 1);
        assert!(r < 0.0);
    }

    #[test]
    fn power_level_examples() {
        let p = power_levels_from_max(23.0, 3).unwrap();
        let expected = [66.51, 133.02, 199.53];
        for (got, want) in p.as_slice().iter().zip(expected) {
            assert!((got - want).abs() < 0.01, "{got} vs {want}");
        }
        let single = power_levels_from_max(23.0, 1).unwrap();
        assert_eq!(single.as_slice(), &[db_to_linear(23.0)]);
        assert!(power_levels_from_max(23.0, 0).is_err());
        assert!(PowerLevels::new(vec![2.0, 1.0]).is_err());
        assert!(PowerLevels::new(vec![]).is_err());
    }

    #[test]
    fn action_index_round_trip() {
        let space = ActionSpace {
            num_users: 7,
            num_subchannels: 3,
            num_levels: 2,
        };
        for i in 0..space.size() {
            let a = space.action(i);
            assert!(space.contains(&a));
            assert_eq!(space.index_of(&a), i);
        }
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<(usize, usize)>, f64)> {
        (2usize..5).prop_flat_map(|m| {
            (
                prop::collection::vec(1e-12f64..1e-6, m * 3 * 2),
                prop::collection::vec((0usize..2, 0usize..3), m),
                1e-10f64..1e-6,
            )
        })
    }

    proptest! {
        #[test]
        fn power_levels_increase(dbm in -10.0f64..40.0, j in 1usize..12) {
            let p = power_levels_from_max(dbm, j).unwrap();
            prop_assert!(p.as_slice().windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn sinr_is_jointly_scale_invariant((raw, choices, noise) in instance(), scale in 1e-3f64..1e3) {
            let m = choices.len();
            let g = GainMatrix::from_fn(m, 3, 2, 0, |a, l, k| raw[(a * 3 + l) * 2 + k]);
            let gs = GainMatrix::from_fn(m, 3, 2, 0, |a, l, k| scale * raw[(a * 3 + l) * 2 + k]);
            let levels = PowerLevels::new(vec![10.0, 20.0, 30.0]).unwrap();
            let joint: Vec<Action> = choices.iter().enumerate().map(|(i, &(k, l))| act(l, k, i % 3)).collect();
            for agent in 0..m {
                let a = sinr(agent, &joint, &g, &levels, noise).unwrap();
                let b = sinr(agent, &joint, &gs, &levels, noise * scale).unwrap();
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            }
        }

        #[test]
        fn extra_interferer_never_helps((raw, choices, noise) in instance(), extra_gain in 1e-12f64..1e-6) {
            let m = choices.len();
            let levels = PowerLevels::new(vec![10.0, 20.0, 30.0]).unwrap();
            let joint: Vec<Action> = choices.iter().map(|&(k, l)| act(l, k, 1)).collect();
            let g = GainMatrix::from_fn(m, 3, 2, 0, |a, l, k| raw[(a * 3 + l) * 2 + k]);
            let before = sinr(0, &joint, &g, &levels, noise).unwrap();
            // same world plus one more UAV parked on agent 0's subchannel
            let g2 = GainMatrix::from_fn(m + 1, 3, 2, 0, |a, l, k| {
                if a < m { raw[(a * 3 + l) * 2 + k] } else { extra_gain }
            });
            let mut joint2 = joint.clone();
            joint2.push(act(0, joint[0].subchannel, 2));
            let after = sinr(0, &joint2, &g2, &levels, noise).unwrap();
            prop_assert!(after <= before);
        }

        #[test]
        fn reward_zero_iff_qos_fails((raw, choices, noise) in instance()) {
            let m = choices.len();
            let levels = PowerLevels::new(vec![10.0, 20.0, 30.0]).unwrap();
            let joint: Vec<Action> = choices.iter().map(|&(k, l)| act(l, k, 0)).collect();
            let g = GainMatrix::from_fn(m, 3, 2, 0, |a, l, k| raw[(a * 3 + l) * 2 + k]);
            let params = RewardParams { noise_mw: noise, ..reference_reward_params() };
            for agent in 0..m {
                let (r, s) = reward(agent, &joint, &g, &params, &levels).unwrap();
                let gamma = sinr(agent, &joint, &g, &levels, noise).unwrap();
                let indicator = u8::from(gamma >= params.sinr_threshold_linear);
                prop_assert_eq!(s, indicator);
                if s == 0 { prop_assert_eq!(r, 0.0); }
            }
        }
    }
}
