//! Comparison schedulers.
//!
//! * Matching: every slot, UAVs propose to users by deferred acceptance.
//!   This scheduler sees the full gain matrix (complete information).
//!   UAV `m` ranks users by the reward it would get with no interference.
//!   User `l` ranks UAVs by received gain `G[m][l][0]`. Ties go to the lower
//!   index. Only K = 1, J = 1 is supported.
//! * Random: every UAV draws a uniform action each slot.

use rand::Rng;
use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::channel::GainMatrix;
use crate::env::{Environment, JointAction};
use crate::error::{Error, Result};
use crate::experiment::Controller;
use crate::radio::{gated_reward, Action, ActionSpace, PowerLevels, RewardParams};
use crate::rng::{substream, SimRng, Stream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceProfile {
    /// Users in UAV `m`'s order of preference, best first.
    pub uav_prefs: Vec<Vec<usize>>,
    /// UAVs in user `l`'s order of preference, best first.
    pub user_prefs: Vec<Vec<usize>>,
}

impl PreferenceProfile {
    pub fn num_uavs(&self) -> usize {
        self.uav_prefs.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_prefs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let is_perm = |list: &[usize], n: usize| {
            let mut seen = vec![false; n];
            list.len() == n
                && list
                    .iter()
                    .all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
        };
        if !self.uav_prefs.iter().all(|p| is_perm(p, self.num_users())) {
            return Err(Error::invalid(
                "UAV preference lists must be permutations of the users",
            ));
        }
        if !self.user_prefs.iter().all(|p| is_perm(p, self.num_uavs())) {
            return Err(Error::invalid(
                "user preference lists must be permutations of the UAVs",
            ));
        }
        Ok(())
    }

    /// `rank[l][m]`: position of UAV `m` in user `l`'s list.
    fn user_ranks(&self) -> Vec<Vec<usize>> {
        self.user_prefs
            .iter()
            .map(|list| {
                let mut rank = vec![0; list.len()];
                for (pos, &m) in list.iter().enumerate() {
                    rank[m] = pos;
                }
                rank
            })
            .collect()
    }

    fn uav_ranks(&self) -> Vec<Vec<usize>> {
        self.uav_prefs
            .iter()
            .map(|list| {
                let mut rank = vec![0; list.len()];
                for (pos, &l) in list.iter().enumerate() {
                    rank[l] = pos;
                }
                rank
            })
            .collect()
    }
}

/// Indices sorted by descending score, lower index first on ties.
fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

pub fn build_preferences(
    gains: &GainMatrix,
    levels: &PowerLevels,
    params: &RewardParams,
) -> Result<PreferenceProfile> {
    if gains.num_subchannels() != 1 || levels.len() != 1 {
        return Err(Error::Unsupported(format!(
            "matching baseline needs K = 1 and J = 1, got K = {} and J = {}",
            gains.num_subchannels(),
            levels.len()
        )));
    }
    let power = levels.get(0);
    let uav_prefs = (0..gains.num_uavs())
        .map(|m| {
            let scores: Vec<f64> = (0..gains.num_users())
                .map(|l| {
                    gated_reward(gains.get(m, l, 0) * power / params.noise_mw, power, params).0
                })
                .collect();
            rank_descending(&scores)
        })
        .collect();
    let user_prefs = (0..gains.num_users())
        .map(|l| {
            let scores: Vec<f64> = (0..gains.num_uavs()).map(|m| gains.get(m, l, 0)).collect();
            rank_descending(&scores)
        })
        .collect();
    Ok(PreferenceProfile {
        uav_prefs,
        user_prefs,
    })
}

/// UAV-proposing deferred acceptance. Returns the user assigned to each UAV.
pub fn gale_shapley(prefs: &PreferenceProfile) -> Result<Vec<usize>> {
    prefs.validate()?;
    let (num_uavs, num_users) = (prefs.num_uavs(), prefs.num_users());
    if num_uavs > num_users {
        return Err(Error::Infeasible(format!(
            "{num_uavs} UAVs cannot each be matched to one of {num_users} users"
        )));
    }
    let rank = prefs.user_ranks();
    let mut next_choice = vec![0usize; num_uavs];
    let mut holder: Vec<Option<usize>> = vec![None; num_users];
    let mut free: VecDeque<usize> = (0..num_uavs).collect();

    while let Some(m) = free.pop_front() {
        let l = prefs.uav_prefs[m][next_choice[m]];
        next_choice[m] += 1;
        match holder[l] {
            None => holder[l] = Some(m),
            Some(current) if rank[l][m] < rank[l][current] => {
                holder[l] = Some(m);
                free.push_back(current);
            }
            Some(_) => free.push_back(m),
        }
    }

    let mut matching = vec![usize::MAX; num_uavs];
    for (l, m) in holder.iter().enumerate() {
        if let Some(m) = m {
            matching[*m] = l;
        }
    }
    Ok(matching)
}

/// True when no UAV–user pair would both rather be with each other.
/// `matching[m]` is UAV `m`'s user; users not listed are unmatched.
pub fn is_stable(prefs: &PreferenceProfile, matching: &[usize]) -> bool {
    let user_rank = prefs.user_ranks();
    let uav_rank = prefs.uav_ranks();
    let mut partner_of_user = vec![None; prefs.num_users()];
    for (m, &l) in matching.iter().enumerate() {
        if l >= prefs.num_users() || partner_of_user[l].is_some() {
            return false;
        }
        partner_of_user[l] = Some(m);
    }
    for (m, &assigned) in matching.iter().enumerate() {
        for l in 0..prefs.num_users() {
            if uav_rank[m][l] >= uav_rank[m][assigned] {
                continue;
            }
            let user_prefers_m = match partner_of_user[l] {
                None => true,
                Some(current) => user_rank[l][m] < user_rank[l][current],
            };
            if user_prefers_m {
                return false;
            }
        }
    }
    true
}

pub fn random_policy<R: Rng + ?Sized>(
    space: &ActionSpace,
    num_uavs: usize,
    rng: &mut R,
) -> JointAction {
    JointAction {
        actions: (0..num_uavs)
            .map(|_| space.action(rng.random_range(0..space.size())))
            .collect(),
    }
}

/// Per-slot deferred acceptance on the current gains.
pub struct MatchingController {
    levels: PowerLevels,
    params: RewardParams,
}

impl MatchingController {
    pub fn new(levels: PowerLevels, params: RewardParams) -> Self {
        MatchingController { levels, params }
    }
}

impl Controller for MatchingController {
    fn name(&self) -> &'static str {
        "match"
    }

    fn decide(&mut self, env: &Environment) -> Result<JointAction> {
        let prefs = build_preferences(&env.state().gains, &self.levels, &self.params)?;
        let matching = gale_shapley(&prefs)?;
        Ok(JointAction {
            actions: matching
                .into_iter()
                .map(|user| Action {
                    user,
                    subchannel: 0,
                    power_level: 0,
                })
                .collect(),
        })
    }
}

/// Uniform random actions, one independent stream per UAV.
pub struct RandomController {
    space: ActionSpace,
    rngs: Vec<SimRng>,
}

impl RandomController {
    pub fn new(space: ActionSpace, num_uavs: usize, seed: u64) -> Self {
        RandomController {
            space,
            rngs: (0..num_uavs)
                .map(|m| substream(seed, Stream::Policy(m)))
                .collect(),
        }
    }
}

impl Controller for RandomController {
    fn name(&self) -> &'static str {
        "random"
    }

    fn decide(&mut self, _env: &Environment) -> Result<JointAction> {
        let space = self.space;
        Ok(JointAction {
            actions: self
                .rngs
                .iter_mut()
                .flat_map(|rng| random_policy(&space, 1, rng).actions)
                .collect(),
        })
    }
}
