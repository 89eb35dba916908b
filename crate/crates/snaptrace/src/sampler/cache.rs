//! Forward-rollout cache shared by all backward walks for one goal.
//!
//! Each cached entry remembers "a forward rollout from the start prior passed
//! through this state after `t_cache` earlier states, carrying importance
//! weight `weight`". Backward walks later splice themselves onto these
//! prefixes instead of walking all the way back to a start state.

use std::collections::HashMap;

use rand::Rng;

use crate::mdp::{Domain, GoalId};
use crate::policy::Policy;
use crate::rng::unit_f64;
use crate::sampler::SamplerConfig;

/// One cached path prefix ending at the state that keys this entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheEntry {
    /// Number of states strictly before the keyed state on the rollout.
    pub t_cache: usize,
    /// Importance weight `d * w` where `w` compensates the roulette
    /// survival probability accumulated along the prefix.
    pub weight: f64,
}

/// One state's recorded prefixes plus their summed weight, kept
/// incrementally so backward walks can read arrival mass in O(1).
#[derive(Debug, Clone, Default)]
struct Bucket {
    entries: Vec<CacheEntry>,
    weight_sum: f64,
}

/// Per-goal map from state to the rollout prefixes that reached it.
#[derive(Debug, Clone, Default)]
pub struct BdptCache<S: std::hash::Hash + Eq> {
    buckets: HashMap<S, Bucket>,
    total_entries: usize,
    rollouts: usize,
}

impl<S: std::hash::Hash + Eq> BdptCache<S> {
    pub fn new() -> Self {
        BdptCache {
            buckets: HashMap::new(),
            total_entries: 0,
            rollouts: 0,
        }
    }

    /// Entries recorded at `state`, empty if none.
    pub fn entries(&self, state: &S) -> &[CacheEntry] {
        self.buckets.get(state).map_or(&[], |b| b.entries.as_slice())
    }

    /// Estimated density of forward arrivals at `state`: the summed entry
    /// weights over `rollouts · d`, an unbiased estimate of
    /// `Σ_prefix P_start(π₀) · p(prefix ending at state)`. Used both at
    /// connection time and to steer backward walks toward covered regions.
    pub fn arrival_density(&self, state: &S, depth_d: f64) -> f64 {
        self.buckets
            .get(state)
            .map_or(0.0, |b| b.weight_sum / (self.rollouts as f64 * depth_d))
    }

    /// Total number of entries across all states.
    pub fn total_entries(&self) -> usize {
        self.total_entries
    }

    /// Number of forward rollouts folded into this cache.
    pub fn rollouts(&self) -> usize {
        self.rollouts
    }

    /// Number of distinct states with at least one entry.
    pub fn occupied_states(&self) -> usize {
        self.buckets.len()
    }

    fn push(&mut self, state: S, entry: CacheEntry) {
        let bucket = self.buckets.entry(state).or_default();
        bucket.weight_sum += entry.weight;
        bucket.entries.push(entry);
        self.total_entries += 1;
    }

    /// Hand-built cache with exact entries, for pinning estimator values.
    #[cfg(test)]
    pub(crate) fn with_manual_entries(rollouts: usize, items: Vec<(S, CacheEntry)>) -> Self {
        let mut cache = Self::new();
        cache.rollouts = rollouts;
        for (state, entry) in items {
            cache.push(state, entry);
        }
        cache
    }
}

/// Fold one forward rollout from the start prior into `cache`.
///
/// The rollout records an entry at every non-end state it visits, then at
/// each state flips the same roulette coin the backward walk uses: with
/// probability `1/d` it stops, otherwise its weight is divided by the
/// survival probability `1 - 1/d` and it advances one policy step. Reaching
/// an end state or exceeding `max_forward_steps` also stops the rollout.
pub fn grow_cache<D: Domain, R: Rng>(
    domain: &D,
    policy: &Policy<'_, D>,
    goal: GoalId,
    config: &SamplerConfig,
    rng: &mut R,
    cache: &mut BdptCache<D::State>,
) {
    debug_assert_eq!(policy.goal(), goal);
    cache.rollouts += 1;
    let mut current = domain.start_prior().sample(rng).clone();

    let d = config.depth_d;
    let survive = 1.0 - 1.0 / d;
    let mut weight = 1.0_f64;
    let mut t_cache = 0usize;
    while !domain.is_end_state(&current, goal) {
        if t_cache >= config.max_forward_steps {
            return;
        }
        cache.push(
            current.clone(),
            CacheEntry {
                t_cache,
                weight: d * weight,
            },
        );
        let Some(next) = policy.sample_step(&current, rng) else {
            return;
        };
        if unit_f64(rng) < 1.0 / d {
            return;
        }
        weight /= survive;
        current = next;
        t_cache += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::ChainDomain;
    use crate::policy::{Policy, PolicyConfig};
    use crate::rng::stream;

    fn chain_setup(cells: usize) -> ChainDomain {
        ChainDomain::new(cells, false, vec![cells - 1], vec![0]).unwrap()
    }

    #[test]
    fn rollout_stopped_by_first_flip_leaves_one_entry() {
        let domain = chain_setup(6);
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        let config = SamplerConfig {
            depth_d: 5.0,
            ..SamplerConfig::default()
        };
        let mut cache = BdptCache::new();
        // Find a seed whose first roulette flip stops the rollout at state 0.
        let mut found = false;
        for seed in 0..200u64 {
            let mut probe = BdptCache::new();
            let mut rng = stream(seed, &[]);
            grow_cache(&domain, &policy, GoalId(0), &config, &mut rng, &mut probe);
            if probe.total_entries() == 1 {
                let mut rng = stream(seed, &[]);
                grow_cache(&domain, &policy, GoalId(0), &config, &mut rng, &mut cache);
                found = true;
                break;
            }
        }
        assert!(found, "no seed under 200 stopped at the first flip");
        let entries = cache.entries(&0);
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].t_cache, 0);
        assert!((entries[0].weight - 5.0).abs() < 1e-12, "first entry weight is d * 1");
        assert_eq!(cache.rollouts(), 1);
    }

    #[test]
    fn surviving_rollout_records_geometric_weights() {
        let domain = chain_setup(6);
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        let d = 5.0;
        let config = SamplerConfig {
            depth_d: d,
            ..SamplerConfig::default()
        };
        // Find a seed that survives at least 3 flips so states 0..=3 all get
        // entries on one rollout.
        let mut best: Option<BdptCache<usize>> = None;
        for seed in 0..2000u64 {
            let mut probe = BdptCache::new();
            let mut rng = stream(seed, &[]);
            grow_cache(&domain, &policy, GoalId(0), &config, &mut rng, &mut probe);
            if probe.total_entries() >= 4 {
                best = Some(probe);
                break;
            }
        }
        let cache = best.expect("no rollout under 2000 seeds survived 3 flips");
        let survive = 1.0 - 1.0 / d;
        for (cell, entries_expected) in (0usize..4).zip(0..4) {
            let entries = cache.entries(&cell);
            assert_eq!(entries.len(), 1, "state {cell} should hold one entry");
            assert_eq!(entries[0].t_cache, entries_expected);
            let expected_weight = d / survive.powi(entries_expected as i32);
            assert!(
                (entries[0].weight - expected_weight).abs() < 1e-9,
                "state {cell}: weight {} vs expected {expected_weight}",
                entries[0].weight
            );
        }
    }

    #[test]
    fn end_states_never_receive_entries() {
        let domain = chain_setup(3);
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        let config = SamplerConfig {
            depth_d: 50.0,
            ..SamplerConfig::default()
        };
        let mut cache = BdptCache::new();
        for r in 0..200u64 {
            let mut rng = stream(r, &[9]);
            grow_cache(&domain, &policy, GoalId(0), &config, &mut rng, &mut cache);
        }
        assert!(cache.entries(&2).is_empty(), "end state must stay empty");
        assert_eq!(cache.rollouts(), 200);
        assert_eq!(
            cache.total_entries(),
            cache.entries(&0).len() + cache.entries(&1).len()
        );
    }

    #[test]
    fn expected_entries_per_rollout_matches_truncated_geometric() {
        // On a long deterministic chain the rollout adds an entry, then
        // survives with probability 1 - 1/d, so E[entries per rollout] =
        // sum_{k>=0} (1-1/d)^k = d when the chain is longer than the walk
        // effectively reaches.
        let domain = chain_setup(400);
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        let d = 5.0;
        let config = SamplerConfig {
            depth_d: d,
            ..SamplerConfig::default()
        };
        let mut cache = BdptCache::new();
        let rollouts = 10_000u64;
        for r in 0..rollouts {
            let mut rng = stream(11, &[r]);
            grow_cache(&domain, &policy, GoalId(0), &config, &mut rng, &mut cache);
        }
        let mean_entries = cache.total_entries() as f64 / rollouts as f64;
        assert!(
            (mean_entries - d).abs() / d < 0.05,
            "mean entries per rollout {mean_entries} should be within 5% of d = {d}"
        );
    }

    #[test]
    fn short_chain_truncates_expected_entries() {
        // With only 3 non-end states, entries per rollout is
        // 1 + s + s^2 where s = 1 - 1/d (rollout always stops at the end
        // state after 3 moves).
        let domain = chain_setup(4);
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        let d = 5.0;
        let s = 1.0 - 1.0 / d;
        let expected = 1.0 + s + s * s;
        let config = SamplerConfig {
            depth_d: d,
            ..SamplerConfig::default()
        };
        let mut cache = BdptCache::new();
        let rollouts = 20_000u64;
        for r in 0..rollouts {
            let mut rng = stream(13, &[r]);
            grow_cache(&domain, &policy, GoalId(0), &config, &mut rng, &mut cache);
        }
        let mean_entries = cache.total_entries() as f64 / rollouts as f64;
        assert!(
            (mean_entries - expected).abs() / expected < 0.05,
            "mean entries per rollout {mean_entries} should be within 5% of {expected}"
        );
    }
}
