//! Single-snapshot inference: estimate every goal's likelihood, normalize
//! with the goal prior, and report the lot.

use serde::Serialize;

use crate::bench::report::{GoalReport, PolicyEcho, SamplerEcho};
use crate::bench::InferenceEngine;
use crate::domains::ParsedDomain;
use crate::mdp::{Domain, GoalId};
use crate::policy::PolicyConfig;
use crate::posterior::GoalPrior;
use crate::sampler::{Method, SamplerConfig};

/// JSON report of one inference. Deterministic for a fixed (config, seed);
/// wall-clock goes to stderr, not in here.
#[derive(Debug, Clone, Serialize)]
pub struct InferReport {
    pub command: &'static str,
    pub domain_kind: &'static str,
    pub snapshot: String,
    pub method: String,
    pub seed: u64,
    pub sampler: SamplerEcho,
    pub policy: PolicyEcho,
    pub goals: Vec<GoalReport>,
    /// Normalized posterior in goal order; empty under `no_valid_samples`.
    pub posterior: Vec<f64>,
    pub no_valid_samples: bool,
    /// Label of the most probable goal, absent when no inference was made.
    pub argmax: Option<String>,
}

/// Run one inference against a parsed domain. Errors are configuration
/// problems (bad snapshot, bad config) the CLI maps to exit code 2.
pub fn run_infer(
    parsed: &ParsedDomain,
    snapshot: &str,
    method: Method,
    sampler: &SamplerConfig,
    policy: &PolicyConfig,
    prior: &GoalPrior,
) -> Result<InferReport, String> {
    sampler.validate()?;
    match parsed {
        ParsedDomain::Chain(d) => {
            let x = d.parse_snapshot(snapshot)?;
            infer_generic(d, "chain", x, snapshot, method, sampler, policy, prior)
        }
        ParsedDomain::Grid(d) => {
            let x = d.parse_snapshot(snapshot)?;
            infer_generic(d, "grid", x, snapshot, method, sampler, policy, prior)
        }
        ParsedDomain::Keys(d) => {
            let x = d.parse_snapshot(snapshot)?;
            infer_generic(d, "keys", x, snapshot, method, sampler, policy, prior)
        }
        ParsedDomain::Blocks(d) => {
            let x = d.parse_snapshot(snapshot)?;
            infer_generic(d, "blocks", x, snapshot, method, sampler, policy, prior)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn infer_generic<D: Domain>(
    domain: &D,
    kind: &'static str,
    x: D::State,
    snapshot: &str,
    method: Method,
    sampler: &SamplerConfig,
    policy: &PolicyConfig,
    prior: &GoalPrior,
) -> Result<InferReport, String> {
    let engine = InferenceEngine::new(domain, policy).map_err(|e| e.to_string())?;
    let (estimates, posterior) = engine.infer(&x, sampler, method, prior);
    let goals = estimates
        .iter()
        .enumerate()
        .map(|(i, est)| {
            GoalReport::new(domain.goal_label(GoalId(i)), est, posterior.prob(GoalId(i)))
        })
        .collect();
    let argmax = posterior
        .is_valid()
        .then(|| posterior.argmax().map(|g| domain.goal_label(g)))
        .flatten();
    Ok(InferReport {
        command: "infer",
        domain_kind: kind,
        snapshot: snapshot.to_string(),
        method: method.to_string(),
        seed: sampler.seed,
        sampler: sampler.into(),
        policy: policy.into(),
        goals,
        posterior: posterior.probs.clone(),
        no_valid_samples: !posterior.is_valid(),
        argmax,
    })
}
