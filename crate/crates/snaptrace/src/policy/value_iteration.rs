//! Tabular value iteration over the set of states that can still reach the
//! goal.
//!
//! The relevant state set is found by a backward breadth-first closure from
//! the goal's end states over `predecessors`, so domains never need a global
//! state enumeration. Successors outside the closure can never reach the goal;
//! their Q contribution is −∞ and the softmax gives them zero weight.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::mdp::{Domain, GoalId, Transition};
use crate::policy::{PolicyConfig, PolicyError};

/// Largest closure we are willing to solve tabularly.
const MAX_VI_STATES: usize = 2_000_000;
/// Extra sweeps granted beyond the state count (an upper bound on the longest
/// useful horizon in a shortest-path-style problem).
const EXTRA_SWEEPS: usize = 1024;

/// Converged action values for every non-end state in the closure.
pub struct QTable<S, A> {
    values: HashMap<S, Vec<(A, f64)>>,
    state_values: HashMap<S, f64>,
    sweeps: usize,
}

impl<S: std::hash::Hash + Eq, A> QTable<S, A> {
    /// Q-values of the actions available in `state`, in canonical action
    /// order. `None` for end states and states outside the closure.
    pub fn actions(&self, state: &S) -> Option<&[(A, f64)]> {
        self.values.get(state).map(|v| v.as_slice())
    }

    /// Converged state value V(s) = max_a Q(s, a); end states are absorbing
    /// with V = 0.
    pub fn state_value(&self, state: &S) -> Option<f64> {
        self.state_values.get(state).copied()
    }

    pub fn len(&self) -> usize {
        self.state_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state_values.is_empty()
    }

    /// Number of sweeps the solver ran before reaching tolerance.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }
}

/// Per-state transitions grouped by action, fixed for the whole solve.
struct ActionGroups<S, A> {
    /// `(action, transitions-of-that-action)` in canonical action order.
    groups: Vec<(A, Vec<Transition<S, A>>)>,
}

/// Solve for Q over the backward closure of the goal's end states.
///
/// Reward model: every transition pays `-step_cost`, and a transition entering
/// an end state additionally receives `goal_reward`. End states are absorbing
/// with value 0.
pub fn compute_q_table<D: Domain>(
    domain: &D,
    goal: GoalId,
    config: &PolicyConfig,
) -> Result<QTable<D::State, D::Action>, PolicyError> {
    let closure = backward_closure(domain, goal)?;

    // End states keep a fixed value of 0; only non-end states are updated.
    let mut v: HashMap<D::State, f64> =
        closure.iter().map(|s| (s.clone(), 0.0)).collect();
    let updatable: Vec<D::State> = closure
        .iter()
        .filter(|s| !domain.is_end_state(s, goal))
        .cloned()
        .collect();

    // Group transitions by action once; sweeps then touch no domain code.
    let grouped: HashMap<D::State, ActionGroups<D::State, D::Action>> = updatable
        .iter()
        .map(|s| (s.clone(), group_by_action(domain.successors(s, goal))))
        .collect();

    let max_sweeps = updatable.len() + EXTRA_SWEEPS;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(PolicyError::NoConvergence(max_sweeps));
        }
        let mut delta: f64 = 0.0;
        for s in &updatable {
            let mut best = f64::NEG_INFINITY;
            for (_, transitions) in &grouped[s].groups {
                best = best.max(action_q(domain, goal, config, &v, transitions));
            }
            // A state whose every action leads outside the closure keeps −∞;
            // it is doomed and its softmax weight will be zero.
            let old = v[s];
            if (best - old).abs() > delta && (best.is_finite() || old.is_finite()) {
                delta = (best - old).abs();
            }
            v.insert(s.clone(), best);
        }
        if delta <= config.vi_tolerance {
            break;
        }
    }

    // Final Q extraction against the converged V.
    let mut values: HashMap<D::State, Vec<(D::Action, f64)>> = HashMap::new();
    for s in &updatable {
        let per_action: Vec<(D::Action, f64)> = grouped[s]
            .groups
            .iter()
            .map(|(a, transitions)| (a.clone(), action_q(domain, goal, config, &v, transitions)))
            .collect();
        values.insert(s.clone(), per_action);
    }

    Ok(QTable {
        values,
        state_values: v,
        sweeps,
    })
}

fn group_by_action<S: Clone, A: Clone + Ord>(
    transitions: Vec<Transition<S, A>>,
) -> ActionGroups<S, A> {
    let mut groups: Vec<(A, Vec<Transition<S, A>>)> = Vec::new();
    for t in transitions {
        match groups.iter_mut().find(|(a, _)| *a == t.action) {
            Some((_, bucket)) => bucket.push(t),
            None => groups.push((t.action.clone(), vec![t])),
        }
    }
    groups.sort_by(|(a, _), (b, _)| a.cmp(b));
    ActionGroups { groups }
}

/// Q(s, a) = Σ_{s′} T(s,a,s′) · (r(s,a,s′) + γ·V(s′)); −∞ as soon as any
/// outcome leaves the closure (expectation over an unreachable branch can
/// never pay off under the shortest-path reward model).
fn action_q<D: Domain>(
    domain: &D,
    goal: GoalId,
    config: &PolicyConfig,
    v: &HashMap<D::State, f64>,
    transitions: &[Transition<D::State, D::Action>],
) -> f64 {
    let mut q = 0.0;
    for t in transitions {
        let next_v = match v.get(&t.next_state) {
            Some(val) => *val,
            None => return f64::NEG_INFINITY,
        };
        if next_v == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut reward = -config.step_cost;
        if domain.is_end_state(&t.next_state, goal) {
            reward += config.goal_reward;
        }
        q += t.prob * (reward + config.gamma * next_v);
    }
    q
}

/// All states from which the goal's end states are reachable, found by BFS
/// over the predecessor relation.
fn backward_closure<D: Domain>(
    domain: &D,
    goal: GoalId,
) -> Result<Vec<D::State>, PolicyError> {
    let ends = domain.end_states(goal);
    if ends.is_empty() {
        return Err(PolicyError::NoEndStates);
    }
    let mut seen: HashSet<D::State> = ends.iter().cloned().collect();
    let mut queue: VecDeque<D::State> = ends.into_iter().collect();
    let mut order: Vec<D::State> = Vec::new();
    while let Some(s) = queue.pop_front() {
        order.push(s.clone());
        if order.len() > MAX_VI_STATES {
            return Err(PolicyError::UnsupportedMode(order.len()));
        }
        for (prev, _action) in domain.predecessors(&s, goal) {
            if seen.insert(prev.clone()) {
                queue.push_back(prev);
            }
        }
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::ChainDomain;
    use crate::mdp::GoalId;

    #[test]
    fn chain_q_values_count_steps_to_goal() {
        // Rightward chain 0→1→2→3 with goal 3: V(2)=−1, V(1)=−2, V(0)=−3 and
        // Q(s, right) = −1 + V(s+1).
        let domain = ChainDomain::new(4, false, vec![3], vec![0, 1, 2]).unwrap();
        let config = PolicyConfig::default();
        let q = compute_q_table(&domain, GoalId(0), &config).unwrap();
        assert_eq!(q.len(), 4);
        assert!((q.state_value(&3).unwrap() - 0.0).abs() < 1e-9);
        assert!((q.state_value(&2).unwrap() + 1.0).abs() < 1e-9);
        assert!((q.state_value(&1).unwrap() + 2.0).abs() < 1e-9);
        assert!((q.state_value(&0).unwrap() + 3.0).abs() < 1e-9);
        let acts = q.actions(&1).unwrap();
        assert_eq!(acts.len(), 1);
        assert!((acts[0].1 + 2.0).abs() < 1e-9);
    }

    #[test]
    fn goal_reward_shifts_entering_q_only() {
        let domain = ChainDomain::new(3, false, vec![2], vec![0, 1]).unwrap();
        let config = PolicyConfig {
            goal_reward: 10.0,
            ..PolicyConfig::default()
        };
        let q = compute_q_table(&domain, GoalId(0), &config).unwrap();
        // Q(1, right) = −1 + 10 + V(2) = 9; V(1) = 9; Q(0, right) = −1 + 9 = 8.
        assert!((q.actions(&1).unwrap()[0].1 - 9.0).abs() < 1e-9);
        assert!((q.actions(&0).unwrap()[0].1 - 8.0).abs() < 1e-9);
    }

    #[test]
    fn closure_excludes_states_past_the_goal() {
        // Rightward-only chain with goal at 1: cells 2.. cannot reach it, so
        // the closure contains exactly {0, 1}.
        let domain = ChainDomain::new(5, false, vec![1], vec![0]).unwrap();
        let config = PolicyConfig::default();
        let q = compute_q_table(&domain, GoalId(0), &config).unwrap();
        assert_eq!(q.len(), 2);
        assert!(q.state_value(&3).is_none());
    }

    #[test]
    fn discounted_chain_converges_to_geometric_values() {
        // With gamma = 0.5 and unit step cost, V(k steps from goal) obeys
        // V = −(1 + γ + … + γ^{k−1}) = −2·(1 − 0.5^k).
        let domain = ChainDomain::new(4, false, vec![3], vec![0]).unwrap();
        let config = PolicyConfig {
            gamma: 0.5,
            ..PolicyConfig::default()
        };
        let q = compute_q_table(&domain, GoalId(0), &config).unwrap();
        for (state, k) in [(2usize, 1u32), (1, 2), (0, 3)] {
            let expected = -2.0 * (1.0 - 0.5f64.powi(k as i32));
            assert!(
                (q.state_value(&state).unwrap() - expected).abs() < 1e-7,
                "state {state}"
            );
        }
    }
}
