//! Explicit finite MDPs and exact dynamic programming.
//!
//! This is the ground truth the learners are checked against: the Bellman
//! optimality operator, value iteration, and iterative policy evaluation on
//! a fully specified transition kernel. Nothing here depends on the
//! learning code paths apart from the shared [`QTable`] and [`Policy`]
//! containers.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::learn::{Policy, QTable};

/// Action-value function over an explicit MDP.
pub type QFunction = QTable;

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitMdp {
    num_states: usize,
    num_actions: usize,
    /// `[s][a][s']`
    transition: Vec<f64>,
    /// `[s][a][s']`
    reward: Vec<f64>,
    discount: f64,
}

impl ExplicitMdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        let n = num_states * num_actions * num_states;
        if num_states == 0 || num_actions == 0 {
            return Err(Error::invalid(
                "an MDP needs at least one state and one action",
            ));
        }
        if transition.len() != n || reward.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} transition and reward entries, got {} and {}",
                transition.len(),
                reward.len()
            )));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::invalid(format!(
                "discount must lie in [0, 1), got {discount}"
            )));
        }
        for (row_idx, row) in transition.chunks(num_states).enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "transition row (s={}, a={}) is not a distribution",
                    row_idx / num_actions,
                    row_idx % num_actions
                )));
            }
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("rewards must be finite"));
        }
        Ok(ExplicitMdp {
            num_states,
            num_actions,
            transition,
            reward,
            discount,
        })
    }

    /// Transition rows from a flat Dirichlet, rewards uniform on [−1, 1].
    pub fn random<R: Rng + ?Sized>(
        num_states: usize,
        num_actions: usize,
        discount: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut transition = Vec::with_capacity(num_states * num_actions * num_states);
        for _ in 0..num_states * num_actions {
            let draws: Vec<f64> = (0..num_states).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = draws.iter().sum();
            transition.extend(draws.into_iter().map(|x| x / total));
        }
        let reward = (0..num_states * num_actions * num_states)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        Self::new(num_states, num_actions, transition, reward, discount)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    fn idx(&self, s: usize, a: usize, next: usize) -> usize {
        (s * self.num_actions + a) * self.num_states + next
    }

    pub fn transition(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[self.idx(s, a, next)]
    }

    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.reward[self.idx(s, a, next)]
    }

    /// `Σ_{s'} F(s,a,s') R(s,a,s')`
    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        (0..self.num_states)
            .map(|next| self.transition(s, a, next) * self.reward(s, a, next))
            .sum()
    }

    /// Samples `(s', r)` from the kernel.
    pub fn sample<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> (usize, f64) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = self.num_states - 1;
        for candidate in 0..self.num_states {
            acc += self.transition(s, a, candidate);
            if u < acc {
                next = candidate;
                break;
            }
        }
        (next, self.reward(s, a, next))
    }

    fn check_q(&self, q: &QFunction) -> Result<()> {
        if q.num_states() != self.num_states || q.num_actions() != self.num_actions {
            return Err(Error::invalid(format!(
                "Q has shape {}x{}, MDP has {}x{}",
                q.num_states(),
                q.num_actions(),
                self.num_states,
                self.num_actions
            )));
        }
        Ok(())
    }

    fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.num_states() != self.num_states || policy.num_actions() != self.num_actions {
            return Err(Error::invalid("policy shape does not match the MDP"));
        }
        Ok(())
    }
}

/// `(Hq)(s,a) = Σ_{s'} F(s,a,s') [R(s,a,s') + δ max_{a'} q(s',a')]`
pub fn bellman_operator(mdp: &ExplicitMdp, q: &QFunction) -> Result<QFunction> {
    mdp.check_q(q)?;
    let best: Vec<f64> = (0..mdp.num_states).map(|s| q.max_value(s)).collect();
    let mut out = QTable::zeros(mdp.num_states, mdp.num_actions);
    for s in 0..mdp.num_states {
        for a in 0..mdp.num_actions {
            let v = (0..mdp.num_states)
                .map(|next| {
                    mdp.transition(s, a, next)
                        * (mdp.reward(s, a, next) + mdp.discount * best[next])
                })
                .sum();
            out.set(s, a, v);
        }
    }
    Ok(out)
}

/// Iterates `H` from zero until successive iterates differ by less than
/// `tol` in sup norm. The result is within `tol·δ/(1−δ)` of `Q*`.
pub fn value_iteration(mdp: &ExplicitMdp, tol: f64) -> Result<QFunction> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut q = QTable::zeros(mdp.num_states, mdp.num_actions);
    loop {
        let next = bellman_operator(mdp, &q)?;
        let gap = next.sup_distance(&q);
        q = next;
        if gap < tol {
            return Ok(q);
        }
    }
}

/// `V(s) = Σ_a π(s,a) Q(s,a)`
pub fn state_value_from_q(q: &QFunction, policy: &Policy) -> Result<Vec<f64>> {
    if q.num_states() != policy.num_states() || q.num_actions() != policy.num_actions() {
        return Err(Error::invalid("policy shape does not match Q"));
    }
    Ok((0..q.num_states())
        .map(|s| policy.row(s).iter().zip(q.row(s)).map(|(p, v)| p * v).sum())
        .collect())
}

/// One application of the policy's Bellman expectation operator.
pub fn policy_backup(mdp: &ExplicitMdp, policy: &Policy, v: &[f64]) -> Vec<f64> {
    (0..mdp.num_states)
        .map(|s| {
            (0..mdp.num_actions)
                .map(|a| {
                    let p = policy.prob(s, a);
                    if p == 0.0 {
                        return 0.0;
                    }
                    p * (0..mdp.num_states)
                        .map(|next| {
                            mdp.transition(s, a, next)
                                * (mdp.reward(s, a, next) + mdp.discount * v[next])
                        })
                        .sum::<f64>()
                })
                .sum()
        })
        .collect()
}

/// Iterative evaluation of `policy`; stops when successive value vectors
/// differ by less than `tol`.
pub fn policy_evaluation(mdp: &ExplicitMdp, policy: &Policy, tol: f64) -> Result<Vec<f64>> {
    mdp.check_policy(policy)?;
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut v = vec![0.0; mdp.num_states];
    loop {
        let next = policy_backup(mdp, policy, &v);
        let gap = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if gap < tol {
            return Ok(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    fn one_state(reward: f64, discount: f64) -> ExplicitMdp {
        ExplicitMdp::new(1, 1, vec![1.0], vec![reward], discount).unwrap()
    }

    #[test]
    fn operator_on_trivial_mdp() {
        let mdp = one_state(1.0, 0.5);
        let hq = bellman_operator(&mdp, &QTable::zeros(1, 1)).unwrap();
        assert_eq!(hq.get(0, 0), 1.0);
    }

    #[test]
    fn myopic_operator_ignores_q() {
        let mut rng = substream(1, Stream::Users);
        let mdp = ExplicitMdp::random(4, 3, 0.0, &mut rng).unwrap();
        let q = QTable::from_rows(vec![vec![5.0, -2.0, 1.0]; 4]).unwrap();
        let hq = bellman_operator(&mdp, &q).unwrap();
        for s in 0..4 {
            for a in 0..3 {
                assert!((hq.get(s, a) - mdp.expected_reward(s, a)).abs() < 1e-12);
            }
        }
        let q_star = value_iteration(&mdp, 1e-12).unwrap();
        assert!(q_star.sup_distance(&hq) < 1e-12);
    }

    #[test]
    fn geometric_series_fixed_point() {
        let q = value_iteration(&one_state(1.0, 0.5), 1e-12).unwrap();
        assert!((q.get(0, 0) - 2.0).abs() < 1e-11);
    }

    #[test]
    fn fixed_point_is_self_consistent() {
        let mut rng = substream(2, Stream::Users);
        let mdp = ExplicitMdp::random(4, 3, 0.9, &mut rng).unwrap();
        let tol = 1e-10;
        let q = value_iteration(&mdp, tol).unwrap();
        let hq = bellman_operator(&mdp, &q).unwrap();
        assert!(hq.sup_distance(&q) < tol);
        assert!(hq.sup_distance(&q) < 1e-9);
    }

    #[test]
    fn state_values_from_q() {
        let q = QTable::from_rows(vec![vec![1.0, 3.0]]).unwrap();
        assert_eq!(
            state_value_from_q(&q, &Policy::uniform(1, 2)).unwrap(),
            vec![2.0]
        );
        let pick_second = Policy::from_rows(vec![vec![0.0, 1.0]]).unwrap();
        assert_eq!(state_value_from_q(&q, &pick_second).unwrap(), vec![3.0]);
    }

    #[test]
    fn policy_evaluation_examples() {
        let v = policy_evaluation(&one_state(1.0, 0.9), &Policy::uniform(1, 1), 1e-12).unwrap();
        assert!((v[0] - 10.0).abs() < 1e-9);

        let mut rng = substream(3, Stream::Users);
        let mdp = ExplicitMdp::random(3, 2, 0.0, &mut rng).unwrap();
        let policy =
            Policy::from_rows(vec![vec![0.25, 0.75], vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let v = policy_evaluation(&mdp, &policy, 1e-12).unwrap();
        for s in 0..3 {
            let expected: f64 = (0..2)
                .map(|a| policy.prob(s, a) * mdp.expected_reward(s, a))
                .sum();
            assert!((v[s] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_value_matches_optimum() {
        let mut rng = substream(4, Stream::Users);
        let mdp = ExplicitMdp::random(5, 3, 0.8, &mut rng).unwrap();
        let q = value_iteration(&mdp, 1e-12).unwrap();
        let v = policy_evaluation(&mdp, &Policy::greedy(&q), 1e-12).unwrap();
        for (s, value) in v.iter().enumerate() {
            assert!((value - q.max_value(s)).abs() < 1e-9);
        }
    }

    #[test]
    fn sampling_follows_kernel() {
        let mdp = ExplicitMdp::new(
            2,
            1,
            vec![0.2, 0.8, 1.0, 0.0],
            vec![1.0, -1.0, 0.0, 0.0],
            0.5,
        )
        .unwrap();
        let mut rng = substream(5, Stream::Users);
        let n = 20_000;
        let ones = (0..n).filter(|_| mdp.sample(0, 0, &mut rng).0 == 1).count();
        assert!((ones as f64 / n as f64 - 0.8).abs() < 0.015);
        assert_eq!(mdp.sample(1, 0, &mut rng), (0, 0.0));
    }

    #[test]
    fn construction_errors() {
        assert!(ExplicitMdp::new(1, 1, vec![0.5], vec![0.0], 0.5).is_err());
        assert!(ExplicitMdp::new(1, 1, vec![1.0], vec![0.0], 1.0).is_err());
        assert!(ExplicitMdp::new(2, 1, vec![1.0], vec![0.0], 0.5).is_err());
        let mdp = one_state(1.0, 0.5);
        assert!(bellman_operator(&mdp, &QTable::zeros(2, 1)).is_err());
        assert!(value_iteration(&mdp, 0.0).is_err());
    }
}
