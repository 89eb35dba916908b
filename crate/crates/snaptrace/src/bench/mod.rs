//! Experiment drivers behind the command-line interface.
//!
//! Four commands share the plumbing in this module:
//!
//! * [`run_infer`] — one snapshot, full posterior report.
//! * [`run_benchmark`] — total-variation quality of 10-sample posteriors
//!   against converged ground truth, averaged over trials and snapshots.
//! * [`run_correctness`] — the three estimators against each other on a
//!   built-in 4×4 grid at 25,000 samples, judged by per-cell z-scores.
//! * [`run_heatmap`] — posterior sweep over all cells of a grid-like
//!   domain, rendered as a portable pixmap plus JSON.
//!
//! All outputs are deterministic functions of `(config, seed)`: sample
//! streams are counter-derived, parallel gathers are re-sorted canonically,
//! and wall-clock timing goes to stderr rather than into reports.

mod benchmark;
mod correctness;
mod fixtures;
mod heatmap;
mod infer;
mod report;

pub use benchmark::{run_benchmark, BenchmarkOptions, BenchmarkReport, TaskRow, TaskSummary};
pub use correctness::{
    correctness_domain, run_correctness, CellComparison, CorrectnessOptions, CorrectnessReport,
};
pub use fixtures::{builtin_tasks, fixture_text, FixtureName, SnapshotSet, TaskDef};
pub use heatmap::{render_heatmap, HeatmapCell, HeatmapOptions, HeatmapReport};
pub use infer::{run_infer, InferReport};
pub use report::{to_pretty_json, GoalReport};

use crate::domains::ParsedDomain;
use crate::mdp::Domain;
use crate::policy::{Policy, PolicyConfig, PolicyError};
use crate::posterior::{posterior_over_goals, GoalPosterior, GoalPrior};
use crate::sampler::{
    build_cache, estimate_likelihood_with_cache, BdptCache, LikelihoodEstimate, Method,
    SamplerConfig,
};

/// Per-goal policies for one domain, ready to answer likelihood queries.
pub struct InferenceEngine<'d, D: Domain> {
    domain: &'d D,
    policies: Vec<Policy<'d, D>>,
}

impl<'d, D: Domain> InferenceEngine<'d, D> {
    pub fn new(domain: &'d D, policy_config: &PolicyConfig) -> Result<Self, PolicyError> {
        let policies = domain
            .goals()
            .into_iter()
            .map(|goal| Policy::new(domain, goal, policy_config))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { domain, policies })
    }

    pub fn domain(&self) -> &'d D {
        self.domain
    }

    pub fn policies(&self) -> &[Policy<'d, D>] {
        &self.policies
    }

    pub fn goal_labels(&self) -> Vec<String> {
        self.domain
            .goals()
            .into_iter()
            .map(|g| self.domain.goal_label(g))
            .collect()
    }

    /// One rollout cache per goal for the given sampler seed, or `None`
    /// when the method/config does not use caches.
    pub fn caches(
        &self,
        config: &SamplerConfig,
        method: Method,
    ) -> Option<Vec<BdptCache<D::State>>> {
        if method != Method::Bdpt || !config.use_cache || config.cache_rollouts == 0 {
            return None;
        }
        Some(
            self.domain
                .goals()
                .into_iter()
                .map(|goal| build_cache(self.domain, &self.policies[goal.0], goal, config))
                .collect(),
        )
    }

    /// Per-goal likelihood estimates of a snapshot, with caller-owned caches
    /// so sweeps can reuse them across snapshots.
    pub fn likelihoods_with_caches(
        &self,
        x: &D::State,
        config: &SamplerConfig,
        method: Method,
        caches: Option<&[BdptCache<D::State>]>,
    ) -> Vec<LikelihoodEstimate> {
        self.domain
            .goals()
            .into_iter()
            .map(|goal| {
                estimate_likelihood_with_cache(
                    self.domain,
                    &self.policies[goal.0],
                    x,
                    goal,
                    config,
                    method,
                    caches.map(|c| &c[goal.0]),
                )
            })
            .collect()
    }

    /// Estimates plus normalized posterior for one snapshot. Builds caches
    /// internally; use the `_with_caches` pair for sweeps.
    pub fn infer(
        &self,
        x: &D::State,
        config: &SamplerConfig,
        method: Method,
        prior: &GoalPrior,
    ) -> (Vec<LikelihoodEstimate>, GoalPosterior) {
        let caches = self.caches(config, method);
        let estimates = self.likelihoods_with_caches(x, config, method, caches.as_deref());
        let posterior = posterior_over_goals(&estimates, prior)
            .expect("uniform/validated priors never fail over a fixed goal set");
        (estimates, posterior)
    }
}

/// Snapshot states a sweep visits for a grid-like domain: every non-wall,
/// non-masked cell that parses to a valid state under the given inventory
/// context (closed-door cells, for instance, are skipped).
pub fn sweep_states(
    parsed: &ParsedDomain,
    context: &str,
    mask: &[(usize, usize)],
) -> Result<Vec<(usize, usize, String)>, String> {
    let mut out = Vec::new();
    match parsed {
        ParsedDomain::Chain(chain) => {
            for cell in 0..chain.cells() {
                if mask.contains(&(0, cell)) {
                    continue;
                }
                out.push((0, cell, cell.to_string()));
            }
        }
        ParsedDomain::Grid(grid) => {
            for row in 0..grid.height() {
                for col in 0..grid.width() {
                    if grid.is_wall(grid.cell(row, col)) || mask.contains(&(row, col)) {
                        continue;
                    }
                    out.push((row, col, format!("{row},{col}")));
                }
            }
        }
        ParsedDomain::Keys(keys) => {
            keys.parse_context(context)?;
            for row in 0..keys.height() {
                for col in 0..keys.width() {
                    if keys.is_wall(keys.cell(row, col)) || mask.contains(&(row, col)) {
                        continue;
                    }
                    let spec = if context.is_empty() {
                        format!("{row},{col}")
                    } else {
                        format!("{row},{col};{context}")
                    };
                    if keys.parse_snapshot(&spec).is_ok() {
                        out.push((row, col, spec));
                    }
                }
            }
        }
        other => return Err(format!("cannot sweep cells of a {} domain", other.kind())),
    }
    Ok(out)
}

/// Exit codes shared by the CLI: 2 for configuration problems, 3 when the
/// correctness experiment fails its statistical criterion.
pub const EXIT_CONFIG_ERROR: i32 = 2;
pub const EXIT_CORRECTNESS_FAILURE: i32 = 3;
