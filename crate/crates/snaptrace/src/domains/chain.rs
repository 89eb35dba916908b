//! A 1-D corridor of cells — the smallest domain with interesting paths.
//!
//! Cells are `0..cells`; the agent moves one cell at a time, rightward only
//! or in both directions. Each goal is a set of cells (usually one); reaching
//! any cell of the pursued goal's set ends the episode. Likelihoods on short
//! chains can be summed by hand, which makes this the reference domain for
//! the exactness tests throughout the crate.

use crate::domains::DomainError;
use crate::mdp::{Domain, GoalId, StartPrior, Transition};

/// The two chain actions. `Left` is only available on bidirectional chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ChainMove {
    Left,
    Right,
}

/// See the module docs. States are cell indices (`usize`).
#[derive(Debug, Clone)]
pub struct ChainDomain {
    cells: usize,
    bidirectional: bool,
    /// One sorted, deduplicated set of end cells per goal.
    end_sets: Vec<Vec<usize>>,
    prior: StartPrior<usize>,
}

impl ChainDomain {
    /// Chain with one end cell per goal.
    pub fn new(
        cells: usize,
        bidirectional: bool,
        goal_cells: Vec<usize>,
        start_cells: Vec<usize>,
    ) -> Result<Self, DomainError> {
        Self::with_end_sets(
            cells,
            bidirectional,
            goal_cells.into_iter().map(|c| vec![c]).collect(),
            start_cells,
        )
    }

    /// Chain where each goal may end at any cell of its set.
    pub fn with_end_sets(
        cells: usize,
        bidirectional: bool,
        mut end_sets: Vec<Vec<usize>>,
        start_cells: Vec<usize>,
    ) -> Result<Self, DomainError> {
        if end_sets.is_empty() {
            return Err(DomainError::NoGoals);
        }
        for (goal, set) in end_sets.iter_mut().enumerate() {
            if set.is_empty() {
                return Err(DomainError::EmptyEndSet { goal });
            }
            set.sort_unstable();
            set.dedup();
            if let Some(&c) = set.iter().find(|&&c| c >= cells) {
                return Err(DomainError::CellOutOfRange(c));
            }
        }
        if start_cells.is_empty() {
            return Err(DomainError::NoStarts);
        }
        if let Some(&c) = start_cells.iter().find(|&&c| c >= cells) {
            return Err(DomainError::CellOutOfRange(c));
        }
        let prior = StartPrior::uniform(start_cells)?;
        Ok(Self {
            cells,
            bidirectional,
            end_sets,
            prior,
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Parse a snapshot literal: a single cell index.
    pub fn parse_snapshot(&self, spec: &str) -> Result<usize, String> {
        let cell: usize = spec
            .trim()
            .parse()
            .map_err(|_| format!("expected a cell index, got `{spec}`"))?;
        if cell >= self.cells {
            return Err(format!("cell {cell} outside the {}-cell chain", self.cells));
        }
        Ok(cell)
    }
}

impl Domain for ChainDomain {
    type State = usize;
    type Action = ChainMove;

    fn goal_count(&self) -> usize {
        self.end_sets.len()
    }

    fn goal_label(&self, goal: GoalId) -> String {
        let set = &self.end_sets[goal.0];
        if set.len() == 1 {
            format!("cell {}", set[0])
        } else {
            let cells: Vec<String> = set.iter().map(ToString::to_string).collect();
            format!("cells {}", cells.join("+"))
        }
    }

    fn successors(&self, state: &usize, goal: GoalId) -> Vec<Transition<usize, ChainMove>> {
        if self.is_end_state(state, goal) {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(2);
        if self.bidirectional && *state >= 1 {
            out.push(Transition {
                next_state: *state - 1,
                action: ChainMove::Left,
                prob: 1.0,
            });
        }
        if *state + 1 < self.cells {
            out.push(Transition {
                next_state: *state + 1,
                action: ChainMove::Right,
                prob: 1.0,
            });
        }
        out
    }

    fn predecessors(&self, state: &usize, goal: GoalId) -> Vec<(usize, ChainMove)> {
        let mut out = Vec::with_capacity(2);
        if *state >= 1 && !self.is_end_state(&(*state - 1), goal) {
            out.push((*state - 1, ChainMove::Right));
        }
        if self.bidirectional && *state + 1 < self.cells && !self.is_end_state(&(*state + 1), goal)
        {
            out.push((*state + 1, ChainMove::Left));
        }
        out
    }

    fn is_end_state(&self, state: &usize, goal: GoalId) -> bool {
        self.end_sets[goal.0].binary_search(state).is_ok()
    }

    fn end_states(&self, goal: GoalId) -> Vec<usize> {
        self.end_sets[goal.0].clone()
    }

    fn start_prior(&self) -> &StartPrior<usize> {
        &self.prior
    }

    fn move_lower_bound(&self, from: &usize, to: &usize) -> f64 {
        from.abs_diff(*to) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rightward_chain_moves_one_way() {
        let chain = ChainDomain::new(4, false, vec![3], vec![0]).unwrap();
        let succ = chain.successors(&1, GoalId(0));
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].next_state, 2);
        assert_eq!(succ[0].action, ChainMove::Right);
        assert_eq!(succ[0].prob, 1.0);
        assert!(chain.successors(&3, GoalId(0)).is_empty(), "end state is absorbing");
        assert_eq!(chain.predecessors(&1, GoalId(0)), vec![(0, ChainMove::Right)]);
        assert!(chain.predecessors(&0, GoalId(0)).is_empty());
    }

    #[test]
    fn bidirectional_chain_moves_both_ways_in_order() {
        let chain = ChainDomain::new(5, true, vec![4], vec![0]).unwrap();
        let succ = chain.successors(&2, GoalId(0));
        let next: Vec<usize> = succ.iter().map(|t| t.next_state).collect();
        assert_eq!(next, vec![1, 3]);
        let preds = chain.predecessors(&2, GoalId(0));
        assert_eq!(preds, vec![(1, ChainMove::Right), (3, ChainMove::Left)]);
    }

    #[test]
    fn predecessors_never_propose_end_states() {
        // Goal in the middle of a bidirectional chain: trajectories stop
        // there, so nothing can be entered *from* it.
        let chain = ChainDomain::new(5, true, vec![2], vec![0]).unwrap();
        assert_eq!(chain.predecessors(&1, GoalId(0)), vec![(0, ChainMove::Right)]);
        assert_eq!(chain.predecessors(&3, GoalId(0)), vec![(4, ChainMove::Left)]);
    }

    #[test]
    fn multi_cell_goal_ends_at_any_of_its_cells() {
        let chain = ChainDomain::with_end_sets(7, true, vec![vec![0, 6]], vec![3]).unwrap();
        assert!(chain.is_end_state(&0, GoalId(0)));
        assert!(chain.is_end_state(&6, GoalId(0)));
        assert!(!chain.is_end_state(&3, GoalId(0)));
        assert_eq!(chain.end_states(GoalId(0)), vec![0, 6]);
        assert_eq!(chain.goal_label(GoalId(0)), "cells 0+6");
    }

    #[test]
    fn goals_are_independent_hypotheses() {
        let chain = ChainDomain::new(5, true, vec![0, 4], vec![2]).unwrap();
        assert_eq!(chain.goal_count(), 2);
        assert!(chain.is_end_state(&0, GoalId(0)));
        assert!(!chain.is_end_state(&0, GoalId(1)));
        assert_eq!(chain.goal_label(GoalId(1)), "cell 4");
        // Under goal 1, cell 0 is an ordinary cell with ordinary moves.
        assert_eq!(chain.successors(&0, GoalId(1)).len(), 1);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            ChainDomain::new(4, false, vec![], vec![0]),
            Err(DomainError::NoGoals)
        ));
        assert!(matches!(
            ChainDomain::new(4, false, vec![4], vec![0]),
            Err(DomainError::CellOutOfRange(4))
        ));
        assert!(matches!(
            ChainDomain::new(4, false, vec![3], vec![]),
            Err(DomainError::NoStarts)
        ));
        assert!(matches!(
            ChainDomain::new(4, false, vec![3], vec![9]),
            Err(DomainError::CellOutOfRange(9))
        ));
        assert!(matches!(
            ChainDomain::with_end_sets(4, false, vec![vec![]], vec![0]),
            Err(DomainError::EmptyEndSet { goal: 0 })
        ));
    }

    #[test]
    fn move_lower_bound_is_symmetric_distance() {
        let chain = ChainDomain::new(10, true, vec![9], vec![0]).unwrap();
        assert_eq!(chain.move_lower_bound(&2, &7), 5.0);
        assert_eq!(chain.move_lower_bound(&7, &2), 5.0);
        assert_eq!(chain.move_lower_bound(&4, &4), 0.0);
    }
}
