//! Per-goal step distributions P(s → s′ | g) for Boltzmann-rational agents.
//!
//! Two interchangeable backends:
//!
//! * **Value iteration** — enumerate every state that can still reach the goal
//!   (backward closure), solve the Bellman fixed point, and take a softmax over
//!   Q-values: `P(s → s′ | g) ∝ Σ_a exp(β·Q(s,a))·T(s,a,s′)`.
//! * **Online backward A*** — keep one persistent cost-to-go search rooted at
//!   the goal's end states and take a softmax over path-cost differences:
//!   `P(s → s′ | g) ∝ exp(β·(C(s→g) − C(s′→g)))`. Nothing is enumerated up
//!   front; the search grows only as far as queries demand.
//!
//! With the default reward convention (unit step cost, zero goal reward, no
//! discounting) Q-differences equal negative cost differences, so the two
//! backends produce identical distributions on deterministic domains.

mod cost_oracle;
mod value_iteration;

pub use cost_oracle::{CostOracle, OracleStats};
pub use value_iteration::{QTable, compute_q_table};

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::mdp::{Domain, GoalId};

/// Parameters of the agent model shared by both backends.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    /// Softmax inverse temperature; larger is more rational.
    pub beta: f64,
    /// Discount factor in (0, 1]. 1 (no discounting) keeps the two backends
    /// in agreement on deterministic domains.
    pub gamma: f64,
    /// Reward for entering a goal end state.
    pub goal_reward: f64,
    /// Cost charged per action (added as `-step_cost` to every transition's
    /// reward, including the one entering the goal).
    pub step_cost: f64,
    pub mode: PolicyMode,
    /// Convergence threshold for value iteration.
    pub vi_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyMode {
    ValueIteration,
    AStarOnline,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            beta: 2.0,
            gamma: 1.0,
            goal_reward: 0.0,
            step_cost: 1.0,
            mode: PolicyMode::AStarOnline,
            vi_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid policy configuration: {0}")]
    BadConfig(String),
    #[error(
        "state space too large for value iteration ({0} states reach the goal); \
         use the astar_online mode"
    )]
    UnsupportedMode(usize),
    #[error("value iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("goal has no end states")]
    NoEndStates,
}

/// Optimal remaining cost to the goal, or a marker that no path exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathCost {
    Reachable(f64),
    Unreachable,
}

impl PathCost {
    pub fn value(self) -> Option<f64> {
        match self {
            PathCost::Reachable(c) => Some(c),
            PathCost::Unreachable => None,
        }
    }

    pub fn is_reachable(self) -> bool {
        matches!(self, PathCost::Reachable(_))
    }
}

/// Normalized successor distribution of one state: `(next_state, probability)`
/// in canonical state order.
pub type StepDistribution<S> = Vec<(S, f64)>;

/// The per-goal step model. Immutable after construction apart from interior
/// memoization (cost frontier, distribution cache), both behind locks, so a
/// `Policy` can be shared freely across threads; answers are identical
/// regardless of query order or interleaving.
pub struct Policy<'d, D: Domain> {
    domain: &'d D,
    goal: GoalId,
    config: PolicyConfig,
    q_table: Option<QTable<D::State, D::Action>>,
    oracle: CostOracle<D::State>,
    dist_cache: RwLock<HashMap<D::State, Arc<StepDistribution<D::State>>>>,
}

impl<'d, D: Domain> Policy<'d, D> {
    pub fn new(domain: &'d D, goal: GoalId, config: &PolicyConfig) -> Result<Self, PolicyError> {
        validate_config(config)?;
        if domain.end_states(goal).is_empty() {
            return Err(PolicyError::NoEndStates);
        }
        let q_table = match config.mode {
            PolicyMode::ValueIteration => Some(compute_q_table(domain, goal, config)?),
            PolicyMode::AStarOnline => None,
        };
        Ok(Self {
            domain,
            goal,
            config: config.clone(),
            q_table,
            oracle: CostOracle::new(goal, config.step_cost),
            dist_cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn goal(&self) -> GoalId {
        self.goal
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn domain(&self) -> &'d D {
        self.domain
    }

    /// Optimal cost from `state` to the goal. Both backends answer through the
    /// persistent backward search, so repeated queries reuse earlier expansion
    /// work.
    pub fn path_cost(&self, state: &D::State) -> PathCost {
        self.oracle.cost(self.domain, state)
    }

    /// Search-effort counters of the underlying cost oracle.
    pub fn oracle_stats(&self) -> OracleStats {
        self.oracle.stats()
    }

    /// The normalized step distribution out of `state`, or `None` when the
    /// state is an end state or cannot reach the goal at all.
    pub fn step_distribution(&self, state: &D::State) -> Option<Arc<StepDistribution<D::State>>> {
        if let Some(hit) = self.dist_cache.read().unwrap().get(state) {
            return Some(Arc::clone(hit));
        }
        let dist = Arc::new(self.compute_distribution(state)?);
        let mut cache = self.dist_cache.write().unwrap();
        let entry = cache
            .entry(state.clone())
            .or_insert_with(|| Arc::clone(&dist));
        Some(Arc::clone(entry))
    }

    /// P(state → next | goal). Zero when `next` is not a successor of `state`
    /// (useful to backward-weighting callers) or when `state` has no
    /// distribution.
    pub fn step_prob(&self, state: &D::State, next: &D::State) -> f64 {
        match self.step_distribution(state) {
            Some(dist) => dist
                .iter()
                .find(|(s, _)| s == next)
                .map(|(_, p)| *p)
                .unwrap_or(0.0),
            None => 0.0,
        }
    }

    /// Draw one successor of `state` under the step model.
    pub fn sample_step<R: rand::Rng>(&self, state: &D::State, rng: &mut R) -> Option<D::State> {
        let dist = self.step_distribution(state)?;
        let idx = crate::rng::pick_weighted(rng, dist.len(), |i| dist[i].1)?;
        Some(dist[idx].0.clone())
    }

    fn compute_distribution(&self, state: &D::State) -> Option<StepDistribution<D::State>> {
        if self.domain.is_end_state(state, self.goal) {
            return None;
        }
        let transitions = self.domain.successors(state, self.goal);
        if transitions.is_empty() {
            return None;
        }
        match &self.q_table {
            Some(q) => self.distribution_from_q(state, &transitions, q),
            None => self.distribution_from_costs(&transitions),
        }
    }

    /// Softmax over Q-values, spread across successor states through the
    /// structural transition probabilities.
    fn distribution_from_q(
        &self,
        state: &D::State,
        transitions: &[crate::mdp::Transition<D::State, D::Action>],
        q: &QTable<D::State, D::Action>,
    ) -> Option<StepDistribution<D::State>> {
        let actions = q.actions(state)?;
        let max_q = actions
            .iter()
            .map(|(_, v)| *v)
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if max_q == f64::NEG_INFINITY {
            return None;
        }
        let weight_of = |a: &D::Action| -> f64 {
            actions
                .iter()
                .find(|(act, _)| act == a)
                .map(|(_, v)| {
                    if v.is_finite() {
                        (self.config.beta * (v - max_q)).exp()
                    } else {
                        0.0
                    }
                })
                .unwrap_or(0.0)
        };
        // Transitions arrive sorted by (next_state, action); fold duplicates of
        // the same next_state (multiple actions, stochastic overlap) in order.
        let mut out: StepDistribution<D::State> = Vec::new();
        let mut total = 0.0;
        for t in transitions {
            let w = weight_of(&t.action) * t.prob;
            total += w;
            match out.last_mut() {
                Some((s, p)) if s == &t.next_state => *p += w,
                _ => out.push((t.next_state.clone(), w)),
            }
        }
        if total <= 0.0 {
            return None;
        }
        for (_, p) in &mut out {
            *p /= total;
        }
        Some(out)
    }

    /// Softmax over cost-to-go differences. The current state's own cost
    /// cancels in normalization, so only successor costs are queried.
    fn distribution_from_costs(
        &self,
        transitions: &[crate::mdp::Transition<D::State, D::Action>],
    ) -> Option<StepDistribution<D::State>> {
        let mut costs: Vec<(&D::State, f64)> = Vec::with_capacity(transitions.len());
        let mut min_cost = f64::INFINITY;
        for t in transitions {
            let c = match self.oracle.cost(self.domain, &t.next_state) {
                PathCost::Reachable(c) => c,
                PathCost::Unreachable => f64::INFINITY,
            };
            min_cost = min_cost.min(c);
            costs.push((&t.next_state, c));
        }
        if min_cost == f64::INFINITY {
            return None;
        }
        let mut out: StepDistribution<D::State> = Vec::new();
        let mut total = 0.0;
        for (s, c) in costs {
            let w = if c.is_finite() {
                (self.config.beta * (min_cost - c)).exp()
            } else {
                0.0
            };
            total += w;
            match out.last_mut() {
                // Duplicate successor states (same state via two actions) carry
                // the same cost weight; count them once.
                Some((prev, _)) if prev == s => {}
                _ => out.push((s.clone(), w)),
            }
        }
        if total <= 0.0 {
            return None;
        }
        let norm: f64 = out.iter().map(|(_, w)| *w).sum();
        for (_, p) in &mut out {
            *p /= norm;
        }
        Some(out)
    }
}

fn validate_config(config: &PolicyConfig) -> Result<(), PolicyError> {
    if !(config.beta > 0.0) {
        return Err(PolicyError::BadConfig(format!(
            "beta must be > 0, got {}",
            config.beta
        )));
    }
    if !(config.gamma > 0.0 && config.gamma <= 1.0) {
        return Err(PolicyError::BadConfig(format!(
            "gamma must lie in (0, 1], got {}",
            config.gamma
        )));
    }
    if !(config.vi_tolerance > 0.0) {
        return Err(PolicyError::BadConfig(format!(
            "vi_tolerance must be > 0, got {}",
            config.vi_tolerance
        )));
    }
    if !(config.step_cost >= 0.0) {
        return Err(PolicyError::BadConfig(format!(
            "step_cost must be >= 0, got {}",
            config.step_cost
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::ChainDomain;
    use crate::mdp::GoalId;

    fn chain_policy(mode: PolicyMode, beta: f64) -> (ChainDomain, PolicyConfig) {
        let domain = ChainDomain::new(4, false, vec![3], vec![0, 1, 2]).unwrap();
        let config = PolicyConfig {
            beta,
            mode,
            ..PolicyConfig::default()
        };
        (domain, config)
    }

    #[test]
    fn deterministic_chain_has_unit_step_probs() {
        for mode in [PolicyMode::ValueIteration, PolicyMode::AStarOnline] {
            let (domain, config) = chain_policy(mode, 2.0);
            let policy = Policy::new(&domain, GoalId(0), &config).unwrap();
            assert!((policy.step_prob(&0, &1) - 1.0).abs() < 1e-12);
            assert!((policy.step_prob(&1, &2) - 1.0).abs() < 1e-12);
            assert_eq!(policy.step_prob(&1, &0), 0.0);
            // end state: no distribution
            assert!(policy.step_distribution(&3).is_none());
        }
    }

    #[test]
    fn bidirectional_chain_softmax_matches_hand_value() {
        // Cells 0..=3 with moves in both directions, goal at 3. From cell 1 the
        // two successors have costs C(2)=1 and C(0)=3, so with beta=2:
        // P(1→2) = e^{2·(−1)·(1−3)/2}... spelled out: weights e^{β(Cmin−C)} are
        // e^0 (cell 2) and e^{2·(1−3)} = e^{−4} (cell 0), i.e. the classic
        // e² / (e² + e⁻²) once rescaled symmetrically.
        let domain = ChainDomain::new(4, true, vec![3], vec![0, 1, 2]).unwrap();
        let config = PolicyConfig {
            beta: 2.0,
            ..PolicyConfig::default()
        };
        let policy = Policy::new(&domain, GoalId(0), &config).unwrap();
        let expected = (2.0f64).exp() / ((2.0f64).exp() + (-2.0f64).exp());
        assert!((policy.step_prob(&1, &2) - expected).abs() < 1e-12);
        assert!((policy.step_prob(&1, &0) - (1.0 - expected)).abs() < 1e-12);
    }

    #[test]
    fn distributions_normalize() {
        let domain = ChainDomain::new(6, true, vec![5], vec![0, 1, 2, 3]).unwrap();
        for mode in [PolicyMode::ValueIteration, PolicyMode::AStarOnline] {
            let config = PolicyConfig {
                beta: 1.3,
                mode,
                ..PolicyConfig::default()
            };
            let policy = Policy::new(&domain, GoalId(0), &config).unwrap();
            for s in 0..5usize {
                let dist = policy.step_distribution(&s).unwrap();
                let total: f64 = dist.iter().map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-9, "state {s} sums to {total}");
            }
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let domain = ChainDomain::new(4, false, vec![3], vec![0]).unwrap();
        for config in [
            PolicyConfig {
                beta: 0.0,
                ..PolicyConfig::default()
            },
            PolicyConfig {
                gamma: 0.0,
                ..PolicyConfig::default()
            },
            PolicyConfig {
                gamma: 1.5,
                ..PolicyConfig::default()
            },
            PolicyConfig {
                vi_tolerance: 0.0,
                ..PolicyConfig::default()
            },
        ] {
            assert!(matches!(
                Policy::new(&domain, GoalId(0), &config),
                Err(PolicyError::BadConfig(_))
            ));
        }
    }
}
