//! Baseline estimator: forward-roll whole trajectories and keep the ones that
//! happen to pass through the snapshot.

use rand::Rng;

use crate::mdp::{Domain, GoalId};
use crate::policy::Policy;
use crate::sampler::{PathSample, SampleOrigin, SamplerConfig};

/// Draw one full trajectory from the start prior and score it against `x`.
///
/// The trajectory runs until an end state of `goal` or `max_forward_steps`.
/// Contribution is `1/|π|` if `x` appears anywhere on the trajectory
/// (including as its start or final end state), else 0. Rollouts that get
/// stuck or overflow contribute 0.
pub fn rejection_sample_once<D: Domain, R: Rng>(
    domain: &D,
    policy: &Policy<'_, D>,
    x: &D::State,
    goal: GoalId,
    config: &SamplerConfig,
    rng: &mut R,
) -> PathSample<D::State> {
    debug_assert_eq!(policy.goal(), goal);
    let start = domain.start_prior().sample(rng).clone();

    let mut trace = vec![start.clone()];
    let mut current = start.clone();
    let mut reached_end = domain.is_end_state(&current, goal);
    while !reached_end {
        if trace.len() > config.max_forward_steps {
            // Overflow: score 0 rather than truncate the path (a truncated
            // path would misstate |π|).
            let len = trace.len();
            return PathSample::rejected(trace, len);
        }
        match policy.sample_step(&current, rng) {
            Some(next) => {
                trace.push(next.clone());
                current = next;
                reached_end = domain.is_end_state(&current, goal);
            }
            // Dead end: the agent can never reach the goal from here, so the
            // trajectory has zero probability under the goal-directed model.
            None => {
                let len = trace.len();
                return PathSample::rejected(trace, len);
            }
        }
    }

    let total_length = trace.len();
    let contribution = if trace.contains(x) {
        1.0 / total_length as f64
    } else {
        0.0
    };
    PathSample {
        contribution,
        total_length,
        origin: SampleOrigin::Start(start),
        trace,
    }
}
