//! Core abstractions for goal-directed MDPs: domains, transitions, start priors.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

use thiserror::Error;

/// Identifier of one goal hypothesis within a domain's finite goal set.
///
/// Goals are indexed `0..domain.goal_count()`; [`Domain::goal_label`] provides
/// the human-readable name (a gem letter, a target word, a cell index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GoalId(pub usize);

/// One structural transition of the environment: the action taken, the state it
/// leads to, and the environment's probability of that outcome *before* any
/// policy weighting. Deterministic domains use probability 1; the field exists
/// so stochastic domains can plug into the same estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S, A> {
    pub next_state: S,
    pub action: A,
    pub prob: f64,
}

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("start prior has no support")]
    EmptyPrior,
    #[error("start prior masses sum to {0}, expected 1 within 1e-9")]
    UnnormalizedPrior(f64),
    #[error("start prior has a duplicate state or a non-positive mass")]
    InvalidPriorEntry,
}

/// Distribution over initial states, stored in canonical (sorted) order.
#[derive(Debug, Clone)]
pub struct StartPrior<S> {
    entries: Vec<(S, f64)>,
    index: HashMap<S, f64>,
}

impl<S: Clone + Eq + Hash + Ord> StartPrior<S> {
    /// Build a prior from `(state, mass)` pairs. Masses must be positive,
    /// states distinct, and the total within 1e-9 of 1.
    pub fn new(mut entries: Vec<(S, f64)>) -> Result<Self, MdpError> {
        if entries.is_empty() {
            return Err(MdpError::EmptyPrior);
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut index = HashMap::with_capacity(entries.len());
        let mut total = 0.0;
        for (state, mass) in &entries {
            if *mass <= 0.0 || index.insert(state.clone(), *mass).is_some() {
                return Err(MdpError::InvalidPriorEntry);
            }
            total += *mass;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(MdpError::UnnormalizedPrior(total));
        }
        Ok(Self { entries, index })
    }

    /// Uniform prior over the given states.
    pub fn uniform(states: Vec<S>) -> Result<Self, MdpError> {
        let n = states.len();
        if n == 0 {
            return Err(MdpError::EmptyPrior);
        }
        let mass = 1.0 / n as f64;
        Self::new(states.into_iter().map(|s| (s, mass)).collect())
    }

    /// Mass of `state` under the prior; 0 for states outside the support.
    pub fn mass(&self, state: &S) -> f64 {
        self.index.get(state).copied().unwrap_or(0.0)
    }

    /// Support states with their masses, in canonical order.
    pub fn support(&self) -> &[(S, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Draw a start state.
    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> &S {
        let idx = crate::rng::pick_weighted(rng, self.entries.len(), |i| self.entries[i].1)
            .expect("start prior masses are positive");
        &self.entries[idx].0
    }
}

/// A goal-parameterized MDP with enumerable forward *and* backward dynamics.
///
/// End states are absorbing: `successors` of an end state is empty and
/// `predecessors` never proposes an end state, so rollouts stop exactly when the
/// goal is reached. All methods are pure functions of their arguments and return
/// results in a deterministic order (sorted by canonical state encoding, then
/// action), which keeps every seeded run reproducible.
pub trait Domain: Send + Sync {
    type State: Clone + Eq + Hash + Ord + Debug + Send + Sync;
    type Action: Clone + Eq + Ord + Debug + Send + Sync;

    fn goal_count(&self) -> usize;

    fn goals(&self) -> Vec<GoalId> {
        (0..self.goal_count()).map(GoalId).collect()
    }

    /// Human-readable name of a goal (gem letter, target word, ...).
    fn goal_label(&self, goal: GoalId) -> String;

    /// All one-step transitions out of `state` under goal hypothesis `goal`.
    /// Empty exactly when `state` is an end state for `goal`.
    fn successors(&self, state: &Self::State, goal: GoalId)
    -> Vec<Transition<Self::State, Self::Action>>;

    /// Inverse image of the one-step relation: every `(prev, action)` such that
    /// `successors(prev, goal)` contains `state` via `action`.
    fn predecessors(&self, state: &Self::State, goal: GoalId)
    -> Vec<(Self::State, Self::Action)>;

    /// Whether the agent's episode terminates at `state` under `goal`.
    fn is_end_state(&self, state: &Self::State, goal: GoalId) -> bool;

    /// Every state satisfying [`Domain::is_end_state`] for `goal`; these seed
    /// the backward cost search and value-iteration sweep.
    fn end_states(&self, goal: GoalId) -> Vec<Self::State>;

    /// Distribution over initial states (goal-independent).
    fn start_prior(&self) -> &StartPrior<Self::State>;

    /// Admissible lower bound on the number of actions needed to reach `to`
    /// from `from`, used as the A* heuristic. Must never exceed the true move
    /// count and must change by at most 1 per move (consistency). The default
    /// degrades the search to uniform-cost order.
    fn move_lower_bound(&self, _from: &Self::State, _to: &Self::State) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_prior_rejects_bad_input() {
        assert!(matches!(
            StartPrior::<u32>::new(vec![]),
            Err(MdpError::EmptyPrior)
        ));
        assert!(matches!(
            StartPrior::new(vec![(1u32, 0.5), (1u32, 0.5)]),
            Err(MdpError::InvalidPriorEntry)
        ));
        assert!(matches!(
            StartPrior::new(vec![(1u32, 0.4), (2u32, 0.4)]),
            Err(MdpError::UnnormalizedPrior(_))
        ));
        assert!(matches!(
            StartPrior::new(vec![(1u32, -0.5), (2u32, 1.5)]),
            Err(MdpError::InvalidPriorEntry)
        ));
    }

    #[test]
    fn start_prior_mass_and_order() {
        let prior = StartPrior::new(vec![(3u32, 0.25), (1u32, 0.75)]).unwrap();
        assert_eq!(prior.mass(&1), 0.75);
        assert_eq!(prior.mass(&3), 0.25);
        assert_eq!(prior.mass(&2), 0.0);
        // canonical order regardless of construction order
        let states: Vec<u32> = prior.support().iter().map(|(s, _)| *s).collect();
        assert_eq!(states, vec![1, 3]);
    }

    #[test]
    fn start_prior_sampling_tracks_masses() {
        let prior = StartPrior::new(vec![(0u32, 0.2), (1u32, 0.8)]).unwrap();
        let mut rng = crate::rng::stream(11, &[]);
        let mut ones = 0usize;
        let n = 20_000;
        for _ in 0..n {
            if *prior.sample(&mut rng) == 1 {
                ones += 1;
            }
        }
        let frac = ones as f64 / n as f64;
        assert!((frac - 0.8).abs() < 0.02, "frac = {frac}");
    }
}
