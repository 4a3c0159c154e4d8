//! Independent tabular Q-learning.
//!
//! Each UAV owns a [`QTable`] over its binary QoS state and its own action
//! set, explores ε-greedily, and updates with a polynomially decaying
//! learning rate. Agents never see each other's actions or rewards.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{AgentObservation, Environment, JointAction};
use crate::error::{Error, Result};
use crate::experiment::{run_controller, Controller};
use crate::metrics::EpisodeLog;
use crate::radio::ActionSpace;
use crate::rng::{substream, SimRng, Stream};
use crate::scenario::Scenario;

/// Number of QoS states a UAV can observe.
pub const QOS_STATES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningConfig {
    pub discount: f64,
    pub epsilon: f64,
    pub c_alpha: f64,
    pub phi_alpha: f64,
    pub clamp_alpha: bool,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            discount: 1.0,
            epsilon: 0.5,
            c_alpha: 0.5,
            phi_alpha: 0.8,
            clamp_alpha: true,
        }
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::invalid(format!(
                "discount must lie in [0, 1], got {}",
                self.discount
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        check_schedule(self.c_alpha, self.phi_alpha)
    }

    pub fn learning_rate(&self, t: usize) -> f64 {
        learning_rate(t, self.c_alpha, self.phi_alpha, self.clamp_alpha)
            .expect("validated schedule parameters")
    }
}

fn check_schedule(c_alpha: f64, phi_alpha: f64) -> Result<()> {
    if !(c_alpha > 0.0 && c_alpha.is_finite()) {
        return Err(Error::invalid(format!(
            "c_alpha must be positive, got {c_alpha}"
        )));
    }
    if !(phi_alpha > 0.5 && phi_alpha <= 1.0) {
        return Err(Error::invalid(format!(
            "phi_alpha must lie in (0.5, 1], got {phi_alpha}"
        )));
    }
    Ok(())
}

/// `1 / (t + c_alpha)^phi_alpha`, optionally capped at 1.
pub fn learning_rate(t: usize, c_alpha: f64, phi_alpha: f64, clamp: bool) -> Result<f64> {
    check_schedule(c_alpha, phi_alpha)?;
    let alpha = (t as f64 + c_alpha).powf(-phi_alpha);
    Ok(if clamp { alpha.min(1.0) } else { alpha })
}

/// Action values, one row per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        QTable {
            num_states,
            num_actions,
            values: vec![0.0; num_states * num_actions],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_actions) {
            return Err(Error::invalid("Q rows must have equal length"));
        }
        Ok(QTable {
            num_states: rows.len(),
            num_actions,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.num_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.num_actions + action] = value;
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.num_actions..(state + 1) * self.num_actions]
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sup-norm distance; tables must have equal shape.
    pub fn sup_distance(&self, other: &QTable) -> f64 {
        assert_eq!(
            self.values.len(),
            other.values.len(),
            "Q tables differ in shape"
        );
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn argmax_set(&self, state: usize) -> Vec<usize> {
        let best = self.max_value(state);
        self.row(state)
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v == best)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Per-state distribution over actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    num_actions: usize,
    probabilities: Vec<f64>,
}

impl Policy {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_actions = rows.first().map_or(0, Vec::len);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != num_actions {
                return Err(Error::invalid("policy rows must have equal length"));
            }
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "policy row {s} is not a distribution"
                )));
            }
        }
        Ok(Policy {
            num_actions,
            probabilities: rows.into_iter().flatten().collect(),
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Policy {
            num_actions,
            probabilities: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    /// The distribution [`select_action`] samples from: the greedy mass
    /// `1 − ε` is split across tied maximisers and `ε` is spread uniformly.
    pub fn epsilon_greedy(q: &QTable, epsilon: f64) -> Self {
        let n = q.num_actions();
        let mut probabilities = Vec::with_capacity(q.num_states() * n);
        for s in 0..q.num_states() {
            let best = q.argmax_set(s);
            let greedy_share = (1.0 - epsilon) / best.len() as f64;
            let mut row = vec![epsilon / n as f64; n];
            for a in best {
                row[a] += greedy_share;
            }
            probabilities.extend(row);
        }
        Policy {
            num_actions: n,
            probabilities,
        }
    }

    pub fn greedy(q: &QTable) -> Self {
        Self::epsilon_greedy(q, 0.0)
    }

    pub fn num_states(&self) -> usize {
        self.probabilities.len() / self.num_actions.max(1)
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probabilities[state * self.num_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.probabilities[state * self.num_actions..(state + 1) * self.num_actions]
    }
}

/// ε-greedy draw. Ties among maximisers are broken uniformly.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    state: usize,
    epsilon: f64,
    rng: &mut R,
) -> usize {
    let n = q.num_actions();
    if rng.random::<f64>() < epsilon {
        return rng.random_range(0..n);
    }
    let best = q.argmax_set(state);
    if best.len() == 1 {
        best[0]
    } else {
        best[rng.random_range(0..best.len())]
    }
}

/// One temporal-difference backup of entry `(state, action)`.
pub fn q_update(
    q: &mut QTable,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    alpha: f64,
    discount: f64,
) {
    let current = q.get(state, action);
    let target = reward + discount * q.max_value(next_state);
    q.set(state, action, current + alpha * (target - current));
}

/// A single UAV learner.
#[derive(Debug, Clone)]
pub struct QAgent {
    pub q: QTable,
    pub config: LearningConfig,
    pub state: usize,
    rng: SimRng,
}

impl QAgent {
    pub fn new(num_actions: usize, config: LearningConfig, rng: SimRng) -> Self {
        QAgent {
            q: QTable::zeros(QOS_STATES, num_actions),
            config,
            state: 0,
            rng,
        }
    }

    pub fn policy(&self) -> Policy {
        Policy::epsilon_greedy(&self.q, self.config.epsilon)
    }
}

/// Controller running one [`QAgent`] per UAV.
pub struct IndependentLearners {
    agents: Vec<QAgent>,
    space: ActionSpace,
    pending: Vec<usize>,
}

impl IndependentLearners {
    pub fn new(space: ActionSpace, configs: &[LearningConfig], seed: u64) -> Result<Self> {
        for c in configs {
            c.validate()?;
        }
        let agents = configs
            .iter()
            .enumerate()
            .map(|(m, c)| QAgent::new(space.size(), *c, substream(seed, Stream::Policy(m))))
            .collect();
        Ok(IndependentLearners {
            agents,
            space,
            pending: Vec::new(),
        })
    }

    pub fn agents(&self) -> &[QAgent] {
        &self.agents
    }

    pub fn into_agents(self) -> Vec<QAgent> {
        self.agents
    }
}

impl Controller for IndependentLearners {
    fn name(&self) -> &'static str {
        "marl"
    }

    fn decide(&mut self, env: &Environment) -> Result<JointAction> {
        if env.state().agent_states.len() != self.agents.len() {
            return Err(Error::invalid("learner count does not match the fleet"));
        }
        self.pending = self
            .agents
            .iter_mut()
            .map(|a| select_action(&a.q, a.state, a.config.epsilon, &mut a.rng))
            .collect();
        Ok(JointAction {
            actions: self.pending.iter().map(|&i| self.space.action(i)).collect(),
        })
    }

    fn observe(&mut self, slot: usize, observations: &[AgentObservation]) {
        for ((agent, &action), obs) in self.agents.iter_mut().zip(&self.pending).zip(observations) {
            let alpha = agent.config.learning_rate(slot);
            let next = obs.state as usize;
            q_update(
                &mut agent.q,
                agent.state,
                action,
                obs.reward,
                next,
                alpha,
                agent.config.discount,
            );
            agent.state = next;
        }
    }
}

/// Runs the independent learners for the scenario's horizon and returns the
/// episode log together with the final agents.
pub fn run_episode_with_agents(
    scenario: &Scenario,
    configs: &[LearningConfig],
    seed: u64,
) -> Result<(EpisodeLog, Vec<QAgent>)> {
    if configs.len() != scenario.fleet.num_uavs {
        return Err(Error::invalid(format!(
            "{} learning configs for {} UAVs",
            configs.len(),
            scenario.fleet.num_uavs
        )));
    }
    let mut learners = IndependentLearners::new(scenario.action_space(), configs, seed)?;
    let log = run_controller(scenario, seed, &mut learners)?;
    Ok((log, learners.into_agents()))
}

pub fn run_episode(
    scenario: &Scenario,
    configs: &[LearningConfig],
    seed: u64,
) -> Result<EpisodeLog> {
    run_episode_with_agents(scenario, configs, seed).map(|(log, _)| log)
}
