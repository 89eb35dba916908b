//! Persistent multi-source backward shortest-path search.
//!
//! One oracle serves every cost-to-goal query for a single goal. All of the
//! goal's end states are seeded at cost 0 and the search expands outward over
//! the *predecessor* relation, so a node's settled cost is exactly the optimal
//! forward cost from that node to the nearest end state.
//!
//! The closed set (`settled`) and open rim (`frontier`) persist across
//! queries. Each query resumes the search with its own A* heuristic — a lower
//! bound on the number of moves between the query state and a search node —
//! and stops as soon as the query settles. Because the heuristic is consistent
//! for every query, a node's cost is exact the moment it settles, no matter
//! which query drove the expansion, so later queries can trust and reuse all
//! earlier work.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::hash::Hash;
use std::sync::RwLock;

use crate::mdp::{Domain, GoalId};
use crate::policy::PathCost;

/// Search-effort counters, mostly useful to demonstrate cross-query reuse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleStats {
    /// Nodes expanded (settled) since construction.
    pub expansions: u64,
    /// Current size of the closed set.
    pub settled: usize,
    /// Current size of the open rim.
    pub frontier: usize,
}

struct Core<S> {
    /// Exact optimal cost-to-goal for every settled state.
    settled: HashMap<S, f64>,
    /// Best-known tentative cost for states discovered but not yet settled.
    frontier: HashMap<S, f64>,
    seeded: bool,
    expansions: u64,
}

pub struct CostOracle<S> {
    goal: GoalId,
    step_cost: f64,
    core: RwLock<Core<S>>,
}

impl<S: Clone + Eq + Hash + Ord> CostOracle<S> {
    pub fn new(goal: GoalId, step_cost: f64) -> Self {
        Self {
            goal,
            step_cost,
            core: RwLock::new(Core {
                settled: HashMap::new(),
                frontier: HashMap::new(),
                seeded: false,
                expansions: 0,
            }),
        }
    }

    pub fn stats(&self) -> OracleStats {
        let core = self.core.read().unwrap();
        OracleStats {
            expansions: core.expansions,
            settled: core.settled.len(),
            frontier: core.frontier.len(),
        }
    }

    /// Optimal cost from `query` to the goal's nearest end state.
    pub fn cost<D>(&self, domain: &D, query: &D::State) -> PathCost
    where
        D: Domain<State = S>,
    {
        // Fast path: answered entirely under the read lock.
        {
            let core = self.core.read().unwrap();
            if let Some(c) = core.settled.get(query) {
                return PathCost::Reachable(*c);
            }
            if core.seeded && core.frontier.is_empty() {
                // Search exhausted: everything that can reach the goal is
                // already settled.
                return PathCost::Unreachable;
            }
        }

        let mut core = self.core.write().unwrap();
        // Re-check: another thread may have settled the query while we waited.
        if let Some(c) = core.settled.get(query) {
            return PathCost::Reachable(*c);
        }
        if !core.seeded {
            for end in domain.end_states(self.goal) {
                let entry = core.frontier.entry(end).or_insert(0.0);
                *entry = entry.min(0.0);
            }
            core.seeded = true;
        }

        self.resume(domain, query, &mut core)
    }

    /// Run A* from the persisted frontier until `query` settles or the search
    /// space is exhausted.
    fn resume<D>(&self, domain: &D, query: &D::State, core: &mut Core<S>) -> PathCost
    where
        D: Domain<State = S>,
    {
        let h = |state: &S| domain.move_lower_bound(query, state) * self.step_cost;

        // Rebuild the priority queue from the persisted rim under this query's
        // heuristic. Keys order by f = g + h, ties by h (prefer nodes closer
        // to the query), then by state for determinism.
        let mut heap: BinaryHeap<Reverse<(u64, u64, S)>> = BinaryHeap::new();
        for (state, g) in &core.frontier {
            let hv = h(state);
            heap.push(Reverse((order_bits(g + hv), order_bits(hv), state.clone())));
        }

        while let Some(Reverse((_, _, state))) = heap.pop() {
            if core.settled.contains_key(&state) {
                continue; // stale queue entry superseded by a cheaper one
            }
            let g = core
                .frontier
                .remove(&state)
                .expect("unsettled heap entry must be on the frontier");
            core.settled.insert(state.clone(), g);
            core.expansions += 1;

            // Relax predecessors *before* any early return: the persistent
            // frontier must always hold the unexplored rim around the closed
            // set, or a later query would mistake the search for exhausted.
            for (prev, _action) in domain.predecessors(&state, self.goal) {
                if core.settled.contains_key(&prev) {
                    continue;
                }
                let candidate = g + self.step_cost;
                let better = match core.frontier.get(&prev) {
                    Some(existing) => candidate < *existing,
                    None => true,
                };
                if better {
                    core.frontier.insert(prev.clone(), candidate);
                    let hv = h(&prev);
                    heap.push(Reverse((
                        order_bits(candidate + hv),
                        order_bits(hv),
                        prev,
                    )));
                }
            }

            if &state == query {
                return PathCost::Reachable(g);
            }
        }

        // Frontier exhausted without reaching the query: no path exists.
        PathCost::Unreachable
    }
}

/// Order-preserving bit pattern of a non-negative finite float (IEEE-754
/// non-negative values sort identically to their raw bits).
fn order_bits(x: f64) -> u64 {
    debug_assert!(x >= 0.0 && x.is_finite());
    x.to_bits()
}
