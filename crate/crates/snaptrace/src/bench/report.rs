//! Shared report serialization.
//!
//! Reports must be byte-identical across runs with the same configuration
//! and seed, so every field is a deterministic function of those inputs —
//! timings are deliberately absent (the CLI prints them to stderr).

use serde::Serialize;

use crate::policy::{PolicyConfig, PolicyMode};
use crate::sampler::{LikelihoodEstimate, SamplerConfig};

/// One goal's likelihood summary inside a report.
#[derive(Debug, Clone, Serialize)]
pub struct GoalReport {
    pub label: String,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub nonzero: usize,
    pub samples: usize,
    /// Posterior mass, 0 under `no_valid_samples`.
    pub posterior: f64,
}

impl GoalReport {
    pub fn new(label: String, estimate: &LikelihoodEstimate, posterior: f64) -> Self {
        Self {
            label,
            mean: estimate.mean,
            variance: estimate.variance,
            std_error: estimate.std_error(),
            nonzero: estimate.nonzero_count,
            samples: estimate.n,
            posterior,
        }
    }
}

/// Echo of the sampler knobs that shaped a report.
#[derive(Debug, Clone, Serialize)]
pub struct SamplerEcho {
    pub alpha: f64,
    pub depth: f64,
    pub cache_rollouts: usize,
    pub use_cache: bool,
    pub max_forward_steps: usize,
}

impl From<&SamplerConfig> for SamplerEcho {
    fn from(c: &SamplerConfig) -> Self {
        Self {
            alpha: c.alpha,
            depth: c.depth_d,
            cache_rollouts: c.cache_rollouts,
            use_cache: c.use_cache,
            max_forward_steps: c.max_forward_steps,
        }
    }
}

/// Echo of the policy knobs that shaped a report.
#[derive(Debug, Clone, Serialize)]
pub struct PolicyEcho {
    pub beta: f64,
    pub gamma: f64,
    pub goal_reward: f64,
    pub step_cost: f64,
    pub mode: String,
}

impl From<&PolicyConfig> for PolicyEcho {
    fn from(c: &PolicyConfig) -> Self {
        Self {
            beta: c.beta,
            gamma: c.gamma,
            goal_reward: c.goal_reward,
            step_cost: c.step_cost,
            mode: match c.mode {
                PolicyMode::ValueIteration => "vi".to_string(),
                PolicyMode::AStarOnline => "astar".to_string(),
            },
        }
    }
}

/// Pretty JSON with a trailing newline — the one serialization every
/// command uses, so byte-identity checks cover formatting too.
pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports are serializable");
    text.push('\n');
    text
}
