//! Bidirectional path construction: grow the path outward from the snapshot.
//!
//! One sample = one forward rollout from `x` to an end state, plus one
//! importance-weighted backward walk from `x` toward the start prior. The
//! backward walk ends in exactly one of three ways, each yielding an unbiased
//! term for `Σ_{π ∋ x} P_start(π₀) p(π|g) / |π|`:
//!
//! * **cache connection** — the walk reached a (non-end) state the start
//!   prior can emit; the cached forward rollouts supply the ensemble of
//!   remaining prefixes, summed in one shot. With a cache available this is
//!   the *only* place mass enters, which makes termination a deterministic
//!   function of the path and keeps the estimator exactly unbiased: every
//!   path splits uniquely at the last prior-support state visited at or
//!   before the snapshot. (Connecting at the first *cache-covered* state —
//!   the obvious greedy alternative — couples termination to cache content
//!   and biases the estimate; covered-ness instead only *steers* the walk,
//!   which costs nothing in expectation.)
//! * **start termination** — without a cache, the walk stops at a state and
//!   scores its prior mass: forced (no predecessors continue the walk, no
//!   roulette compensation) or by Russian roulette (compensated by `d`).
//! * **rejection** — a dead end, an overflow, or a roulette stop at a state
//!   the prior cannot emit; the term is 0.
//!
//! The δ in the likelihood counts each path once. The walk anchors at the
//! *last* visit of `x`: a forward rollout that revisits `x` is rejected
//! (that path is owned by the sample that starts at the later visit), while
//! the backward walk and cached prefix may pass through `x` freely.

use rand::Rng;

use crate::mdp::{Domain, GoalId};
use crate::policy::Policy;
use crate::rng::{pick_weighted, unit_f64};
use crate::sampler::{BdptCache, PathSample, SampleOrigin, SamplerConfig};

/// Mixing floor for cache-guided predecessor proposals: the share of
/// proposal weight every feasible predecessor keeps even when the cache
/// recorded no arrivals there. Affects only variance, never the mean.
const GUIDE_FLOOR: f64 = 0.01;

/// Draw one bidirectional path sample through the snapshot `x`.
///
/// `cache` is consulted only if it holds at least one rollout and one entry;
/// pass `None` to run the pure backward-walk estimator.
pub fn bdpt_sample_once<D: Domain, R: Rng>(
    domain: &D,
    policy: &Policy<'_, D>,
    x: &D::State,
    goal: GoalId,
    config: &SamplerConfig,
    cache: Option<&BdptCache<D::State>>,
    rng: &mut R,
) -> PathSample<D::State> {
    debug_assert_eq!(policy.goal(), goal);
    let cache = cache.filter(|c| c.rollouts() > 0 && c.total_entries() > 0);
    let prior = domain.start_prior();
    let d = config.depth_d;
    let survive = 1.0 - 1.0 / d;

    // Forward phase: from x to an end state of this goal.
    let mut fwd: Vec<D::State> = Vec::new();
    let mut current = x.clone();
    while !domain.is_end_state(&current, goal) {
        if fwd.len() >= config.max_forward_steps {
            return PathSample::rejected(join_trace(&[x.clone()], &fwd), 1 + fwd.len());
        }
        let Some(next) = policy.sample_step(&current, rng) else {
            // The goal is unreachable from here; paths through this point
            // have zero probability.
            return PathSample::rejected(join_trace(&[x.clone()], &fwd), 1 + fwd.len());
        };
        if next == *x {
            // The path revisits the snapshot later on; it belongs to the
            // sample anchored at that later visit.
            return PathSample::rejected(join_trace(&[x.clone()], &fwd), 1 + fwd.len());
        }
        fwd.push(next.clone());
        current = next;
    }
    let t_next = fwd.len();

    // Backward phase: from x toward the start prior.
    let mut bwd_rev = vec![x.clone()]; // backward segment, snapshot first
    let mut t_prev = 1usize;
    let mut p_pi = 1.0_f64;
    let mut current = x.clone();
    loop {
        // Cache connection comes first, even at x itself. End states never
        // carry cache entries (rollouts stop there), so a snapshot *on* an
        // end state falls through to the start-termination rules below —
        // the only path it can head is the one ending at that very state.
        if let Some(c) = cache {
            if prior.mass(&current) > 0.0 && !domain.is_end_state(&current, goal) {
                let bucket = c.entries(&current);
                let trace = join_trace_rev(&bwd_rev, &fwd);
                // Σ_entries weight/|π| over rollouts·d estimates the
                // prior-and-transition mass of every cached prefix reaching
                // this state, each divided by its own full path length.
                // Summing the whole bucket (rather than picking one entry)
                // costs nothing and removes the entry-selection variance.
                let contribution: f64 = bucket
                    .iter()
                    .map(|entry| {
                        entry.weight / (entry.t_cache + t_prev + t_next) as f64
                    })
                    .sum::<f64>()
                    * p_pi
                    / (c.rollouts() as f64 * d);
                let representative = bucket.first().map_or(t_prev + t_next, |e| {
                    e.t_cache + t_prev + t_next
                });
                return PathSample {
                    contribution,
                    total_length: representative,
                    origin: SampleOrigin::Cache,
                    trace,
                };
            }
        }

        // Predecessors the policy could actually have stepped through.
        let mut preds: Vec<(D::State, f64)> = Vec::new();
        for (prev, _action) in domain.predecessors(&current, goal) {
            if preds.last().is_some_and(|(p, _)| *p == prev) {
                continue; // several actions, same edge: one walk choice
            }
            let prob = policy.step_prob(&prev, &current);
            if prob > 0.0 {
                preds.push((prev, prob));
            }
        }

        if preds.is_empty() {
            // Nothing can precede this state: every path through the segment
            // starts here, so termination is forced (no roulette factor).
            let mass = prior.mass(&current);
            let trace = join_trace_rev(&bwd_rev, &fwd);
            let total_length = t_prev + t_next;
            if mass > 0.0 {
                return PathSample {
                    contribution: mass * p_pi / total_length as f64,
                    total_length,
                    origin: SampleOrigin::Start(current),
                    trace,
                };
            }
            return PathSample::rejected(trace, total_length);
        }

        // Russian roulette: stop here with probability 1/d (compensated by
        // d), else keep walking (compensated by 1/(1 - 1/d)).
        if unit_f64(rng) < 1.0 / d {
            let mass = prior.mass(&current);
            let trace = join_trace_rev(&bwd_rev, &fwd);
            let total_length = t_prev + t_next;
            if mass > 0.0 {
                return PathSample {
                    contribution: mass * p_pi * d / total_length as f64,
                    total_length,
                    origin: SampleOrigin::Start(current),
                    trace,
                };
            }
            return PathSample::rejected(trace, total_length);
        }
        p_pi /= survive;

        // Importance-sample the predecessor: weight exp(α · P(prev → cur)),
        // further scaled — when a cache is present — by the predecessor's
        // cached arrival density, which steers the walk along corridors the
        // forward rollouts actually used, straight back to the start prior.
        // The proposal may depend on the cache arbitrarily: the correction
        // `true_prob · total / weight` keeps the estimator unbiased, and the
        // floor keeps every feasible predecessor reachable.
        let idx = {
            let guide: Vec<f64> = match cache {
                Some(c) => preds
                    .iter()
                    .map(|(p, _)| GUIDE_FLOOR + c.arrival_density(p, d))
                    .collect(),
                None => vec![1.0; preds.len()],
            };
            let weight = |i: usize| (config.alpha * preds[i].1).exp() * guide[i];
            let total: f64 = (0..preds.len()).map(weight).sum();
            let i = pick_weighted(rng, preds.len(), weight).expect("weights are positive");
            p_pi *= preds[i].1 * total / weight(i);
            i
        };
        if !p_pi.is_finite() {
            return PathSample::rejected(join_trace_rev(&bwd_rev, &fwd), t_prev + t_next);
        }
        let (prev, _) = preds.swap_remove(idx);
        bwd_rev.push(prev.clone());
        current = prev;
        t_prev += 1;
        if t_prev > config.max_forward_steps {
            return PathSample::rejected(join_trace_rev(&bwd_rev, &fwd), t_prev + t_next);
        }
    }
}

fn join_trace<S: Clone>(head: &[S], fwd: &[S]) -> Vec<S> {
    let mut trace = Vec::with_capacity(head.len() + fwd.len());
    trace.extend_from_slice(head);
    trace.extend_from_slice(fwd);
    trace
}

fn join_trace_rev<S: Clone>(bwd_rev: &[S], fwd: &[S]) -> Vec<S> {
    let mut trace = Vec::with_capacity(bwd_rev.len() + fwd.len());
    trace.extend(bwd_rev.iter().rev().cloned());
    trace.extend_from_slice(fwd);
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::ChainDomain;
    use crate::policy::PolicyConfig;
    use crate::rng::stream;
    use crate::sampler::CacheEntry;

    fn anchor_chain() -> ChainDomain {
        // Rightward chain 0→1→2→3, goal at 3, uniform start over {0,1,2}.
        ChainDomain::new(4, false, vec![3], vec![0, 1, 2]).unwrap()
    }

    #[test]
    fn cache_connection_value_is_exact() {
        let domain = anchor_chain();
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        let config = SamplerConfig {
            depth_d: 5.0,
            ..SamplerConfig::default()
        };
        // One manual entry at x=1: a prefix of 1 earlier state with weight
        // d/(1 - 1/d) = 6.25, as a rollout from 0 surviving one flip records.
        let cache = BdptCache::with_manual_entries(
            1,
            vec![(
                1usize,
                CacheEntry {
                    t_cache: 1,
                    weight: 6.25,
                },
            )],
        );
        let mut rng = stream(3, &[]);
        let sample =
            bdpt_sample_once(&domain, &policy, &1, GoalId(0), &config, Some(&cache), &mut rng);
        // contribution = w · (|bucket| / (R·d)) · p_π / |π|
        //              = 6.25 · (1/5) · 1 / (1 + 1 + 2) = 0.3125
        assert!(
            (sample.contribution - 0.3125).abs() < 1e-12,
            "got {}",
            sample.contribution
        );
        assert_eq!(sample.total_length, 4);
        assert_eq!(sample.origin, SampleOrigin::Cache);
        assert_eq!(sample.trace, vec![1, 2, 3], "cached prefix stays out of the trace");
    }

    #[test]
    fn empty_bucket_connection_scores_zero() {
        let domain = anchor_chain();
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        let config = SamplerConfig::default();
        // The cache holds entries, just none at x=1.
        let cache = BdptCache::with_manual_entries(
            1,
            vec![(
                0usize,
                CacheEntry {
                    t_cache: 0,
                    weight: 5.0,
                },
            )],
        );
        let mut rng = stream(3, &[]);
        let sample =
            bdpt_sample_once(&domain, &policy, &1, GoalId(0), &config, Some(&cache), &mut rng);
        assert_eq!(sample.contribution, 0.0);
        assert_eq!(sample.origin, SampleOrigin::Cache);
        assert_eq!(sample.total_length, 3);
    }

    #[test]
    fn forced_start_termination_has_no_roulette_factor() {
        let domain = anchor_chain();
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        // Enormous depth: the walk survives every flip and the survival
        // compensation is ~1, isolating the no-predecessor branch at cell 0.
        let config = SamplerConfig {
            depth_d: 1e12,
            ..SamplerConfig::default()
        };
        let mut rng = stream(3, &[]);
        let sample = bdpt_sample_once(&domain, &policy, &1, GoalId(0), &config, None, &mut rng);
        // mass(0) · p_π / |π| = (1/3) · 1 / 4 = 1/12, independent of d.
        assert!(
            (sample.contribution - 1.0 / 12.0).abs() < 1e-9,
            "got {}",
            sample.contribution
        );
        assert_eq!(sample.origin, SampleOrigin::Start(0));
        assert_eq!(sample.total_length, 4);
        assert_eq!(sample.trace, vec![0, 1, 2, 3]);
    }

    #[test]
    fn roulette_stop_at_snapshot_scores_prior_mass_times_depth() {
        let domain = anchor_chain();
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        // Depth barely above 1: the first flip stops the walk at x itself.
        let d = 1.0001;
        let config = SamplerConfig {
            depth_d: d,
            ..SamplerConfig::default()
        };
        let mut rng = stream(3, &[]);
        let sample = bdpt_sample_once(&domain, &policy, &1, GoalId(0), &config, None, &mut rng);
        assert_eq!(sample.origin, SampleOrigin::Start(1), "flip at 1/d ≈ 1 must stop at x");
        let expected = (1.0 / 3.0) * d / 3.0;
        assert!(
            (sample.contribution - expected).abs() < 1e-9,
            "got {}",
            sample.contribution
        );
        assert_eq!(sample.total_length, 3);
        assert_eq!(sample.trace, vec![1, 2, 3]);
    }

    #[test]
    fn forward_rollout_revisiting_snapshot_is_rejected() {
        // Bidirectional 3-chain, goal 2, start fixed at 0. From x=1 the
        // forward rollout occasionally dips to 0, whose only continuation is
        // back through 1 — a later visit of the snapshot, so that sample must
        // score 0 and the path is left to the sample anchored there.
        let domain = ChainDomain::new(3, true, vec![2], vec![0]).unwrap();
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        let config = SamplerConfig::default();
        let mut found = false;
        for seed in 0..4000u64 {
            let mut rng = stream(seed, &[]);
            let sample = bdpt_sample_once(&domain, &policy, &1, GoalId(0), &config, None, &mut rng);
            if sample.trace == vec![1, 0] {
                assert_eq!(sample.contribution, 0.0);
                assert_eq!(sample.origin, SampleOrigin::None);
                found = true;
                break;
            }
        }
        assert!(found, "no seed under 4000 produced a revisiting forward rollout");
    }

    #[test]
    fn snapshot_on_end_state_falls_back_to_start_termination() {
        // Start prior splits between cell 0 and the goal cell 3. A snapshot
        // on the goal can only head the single-state path [3]; with a cache
        // present it must still be scored by the start rules, since rollouts
        // record no entries at end states.
        let domain = ChainDomain::new(4, false, vec![3], vec![0, 3]).unwrap();
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        let d = 1.0001;
        let config = SamplerConfig {
            depth_d: d,
            ..SamplerConfig::default()
        };
        let cache = BdptCache::with_manual_entries(
            1,
            vec![(
                0usize,
                CacheEntry {
                    t_cache: 0,
                    weight: d,
                },
            )],
        );
        let mut rng = stream(3, &[]);
        let sample =
            bdpt_sample_once(&domain, &policy, &3, GoalId(0), &config, Some(&cache), &mut rng);
        assert_eq!(sample.origin, SampleOrigin::Start(3));
        assert_eq!(sample.total_length, 1);
        let expected = 0.5 * d / 1.0;
        assert!(
            (sample.contribution - expected).abs() < 1e-9,
            "got {}",
            sample.contribution
        );
    }

    #[test]
    fn unreachable_goal_rejects_every_sample() {
        // Rightward chain, snapshot right of the goal: the forward rollout
        // can never reach the end state and must reject.
        let domain = ChainDomain::new(4, false, vec![1], vec![0]).unwrap();
        let policy = Policy::new(&domain, GoalId(0), &PolicyConfig::default()).unwrap();
        let config = SamplerConfig::default();
        let mut rng = stream(3, &[]);
        let sample = bdpt_sample_once(&domain, &policy, &2, GoalId(0), &config, None, &mut rng);
        assert_eq!(sample.contribution, 0.0);
        assert_eq!(sample.origin, SampleOrigin::None);
    }
}
