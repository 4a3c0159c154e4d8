//! The stochastic game as seen by the UAVs.
//!
//! [`Environment`] owns the realised world (users, flight paths, channel
//! stream). Each [`Environment::step`] evaluates every UAV's SINR under the
//! joint action and the current gains, emits one private observation per UAV,
//! then moves the fleet one slot forward and rebuilds the gains.

use rand::Rng;
use std::f64::consts::PI;

use crate::channel::{build_gain_matrix, GainMatrix};
use crate::error::{Error, Result};
use crate::radio::{gated_reward, sinr, Action};
use crate::rng::{substream, SimRng, Stream};
use crate::scenario::Scenario;
use crate::world::{sample_users, uav_position, Position, Trajectory, UserField};

/// What a single UAV learns after a slot: its own QoS state and reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentObservation {
    pub state: u8,
    pub reward: f64,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointAction {
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub slot: usize,
    pub uav_positions: Vec<Position>,
    pub gains: GainMatrix,
    pub agent_states: Vec<u8>,
}

/// Result of one slot. `sinr` is kept for logging only and is never handed
/// to learners.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observations: Vec<AgentObservation>,
    pub sinr: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Environment {
    scenario: Scenario,
    users: UserField,
    trajectories: Vec<Trajectory>,
    channel_rng: SimRng,
    state: GameState,
}

pub fn action_space_size(scenario: &Scenario) -> usize {
    scenario.action_space().size()
}

impl Environment {
    /// Samples users, places the fleet on its flight paths and builds the
    /// slot-0 gains. All agent states start at 0.
    pub fn reset(scenario: &Scenario, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let world = &scenario.world;
        let fleet = &scenario.fleet;
        let users = sample_users(
            fleet.num_users,
            world.radius_m,
            &mut substream(seed, Stream::Users),
        )?;

        let angles_deg: Vec<f64> = match &fleet.start_angles_deg {
            Some(angles) => angles.clone(),
            None => {
                let mut rng = substream(seed, Stream::Placement);
                (0..fleet.num_uavs)
                    .map(|_| rng.random::<f64>() * 360.0)
                    .collect()
            }
        };
        let trajectories = angles_deg
            .iter()
            .map(|deg| {
                Trajectory::through_center(world.radius_m, deg * PI / 180.0, fleet.speed_mps)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut channel_rng = substream(seed, Stream::Channel);
        let uav_positions: Vec<Position> = trajectories
            .iter()
            .map(|t| uav_position(t, 0, world.slot_duration_s))
            .collect();
        let gains = build_gain_matrix(
            &scenario.channel,
            &uav_positions,
            &users,
            world.uav_altitude_m,
            scenario.radio.num_subchannels,
            0,
            &mut channel_rng,
        )?;
        let state = GameState {
            slot: 0,
            uav_positions,
            gains,
            agent_states: vec![0; fleet.num_uavs],
        };
        Ok(Environment {
            scenario: scenario.clone(),
            users,
            trajectories,
            channel_rng,
            state,
        })
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn users(&self) -> &UserField {
        &self.users
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn step(&mut self, joint: &JointAction) -> Result<StepOutcome> {
        let num_uavs = self.scenario.fleet.num_uavs;
        if joint.actions.len() != num_uavs {
            return Err(Error::invalid(format!(
                "joint action has {} entries for {num_uavs} UAVs",
                joint.actions.len()
            )));
        }
        let space = self.scenario.action_space();
        if let Some((m, a)) = joint
            .actions
            .iter()
            .enumerate()
            .find(|(_, a)| !space.contains(a))
        {
            return Err(Error::invalid(format!(
                "action {a:?} of UAV {m} is out of range"
            )));
        }

        let levels = self.scenario.radio.power_levels()?;
        let params = self.scenario.radio.reward_params();
        let slot = self.state.slot;
        let mut observations = Vec::with_capacity(num_uavs);
        let mut gammas = Vec::with_capacity(num_uavs);
        for m in 0..num_uavs {
            let gamma = sinr(
                m,
                &joint.actions,
                &self.state.gains,
                &levels,
                params.noise_mw,
            )?;
            let (reward, state) =
                gated_reward(gamma, levels.get(joint.actions[m].power_level), &params);
            observations.push(AgentObservation {
                state,
                reward,
                slot,
            });
            gammas.push(gamma);
        }

        let next_slot = slot + 1;
        let dt = self.scenario.world.slot_duration_s;
        let uav_positions: Vec<Position> = self
            .trajectories
            .iter()
            .map(|t| uav_position(t, next_slot, dt))
            .collect();
        let gains = build_gain_matrix(
            &self.scenario.channel,
            &uav_positions,
            &self.users,
            self.scenario.world.uav_altitude_m,
            self.scenario.radio.num_subchannels,
            next_slot,
            &mut self.channel_rng,
        )?;
        self.state = GameState {
            slot: next_slot,
            uav_positions,
            gains,
            agent_states: observations.iter().map(|o| o.state).collect(),
        };
        Ok(StepOutcome {
            observations,
            sinr: gammas,
        })
    }
}
