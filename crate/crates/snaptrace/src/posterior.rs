//! Bayes combination of per-goal likelihoods, TV comparison, and
//! posterior-weighted path statistics.

use thiserror::Error;

use crate::mdp::GoalId;
use crate::sampler::{LikelihoodEstimate, PathSample};

/// Prior belief `p(g)` over the domain's goal hypotheses.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum GoalPrior {
    #[default]
    Uniform,
    /// One non-negative weight per goal, summing to 1 (± 1e-9).
    Weighted(Vec<f64>),
}

impl GoalPrior {
    /// Materialize as one weight per goal, validating shape and mass.
    pub fn weights(&self, goal_count: usize) -> Result<Vec<f64>, PosteriorError> {
        match self {
            GoalPrior::Uniform => Ok(vec![1.0 / goal_count as f64; goal_count]),
            GoalPrior::Weighted(w) => {
                if w.len() != goal_count {
                    return Err(PosteriorError::GoalSetMismatch {
                        prior: w.len(),
                        estimates: goal_count,
                    });
                }
                if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                    return Err(PosteriorError::NegativeWeight);
                }
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(PosteriorError::Unnormalized(total));
                }
                Ok(w.clone())
            }
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PosteriorError {
    #[error("goal prior covers {prior} goals but {estimates} likelihood estimates were given")]
    GoalSetMismatch { prior: usize, estimates: usize },
    #[error("goal prior must sum to 1 (+/- 1e-9), got {0}")]
    Unnormalized(f64),
    #[error("goal prior entries must be finite and non-negative")]
    NegativeWeight,
}

/// Whether any sample carried likelihood mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorStatus {
    Ok,
    /// Every estimator term was zero; no inference is possible. Rendered as
    /// "×" in heatmaps and scored as TV = 1 in benchmarks.
    NoValidSamples,
}

/// The posterior `p(g | x)` over goals, indexed by `GoalId` order.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalPosterior {
    /// One probability per goal; empty when `status` is `NoValidSamples`.
    pub probs: Vec<f64>,
    pub status: PosteriorStatus,
    /// Per-goal count of positive estimator terms, for diagnostics.
    pub per_goal_nonzero: Vec<usize>,
}

impl GoalPosterior {
    /// Probability of one goal (0 under `NoValidSamples`).
    pub fn prob(&self, goal: GoalId) -> f64 {
        self.probs.get(goal.0).copied().unwrap_or(0.0)
    }

    /// Most probable goal, if any mass was assigned. Ties break toward the
    /// lower goal index for determinism.
    pub fn argmax(&self) -> Option<GoalId> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &p) in self.probs.iter().enumerate() {
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((i, p));
            }
        }
        best.map(|(i, _)| GoalId(i))
    }

    pub fn is_valid(&self) -> bool {
        self.status == PosteriorStatus::Ok
    }
}

/// Combine per-goal likelihood estimates with a prior:
/// `p(g|x) ∝ estimate[g].mean · prior[g]`.
///
/// Estimates must be indexed in `GoalId` order and cover every goal. When the
/// normalizer is zero — no goal produced any likelihood mass — the status is
/// [`PosteriorStatus::NoValidSamples`] and `probs` is empty.
pub fn posterior_over_goals(
    estimates: &[LikelihoodEstimate],
    prior: &GoalPrior,
) -> Result<GoalPosterior, PosteriorError> {
    let weights = prior.weights(estimates.len())?;
    let per_goal_nonzero: Vec<usize> = estimates.iter().map(|e| e.nonzero_count).collect();
    let unnormalized: Vec<f64> = estimates
        .iter()
        .zip(&weights)
        .map(|(e, &w)| e.mean * w)
        .collect();
    let denom: f64 = unnormalized.iter().sum();
    if denom <= 0.0 {
        return Ok(GoalPosterior {
            probs: Vec::new(),
            status: PosteriorStatus::NoValidSamples,
            per_goal_nonzero,
        });
    }
    Ok(GoalPosterior {
        probs: unnormalized.iter().map(|u| u / denom).collect(),
        status: PosteriorStatus::Ok,
        per_goal_nonzero,
    })
}

/// Total-variation distance `½ Σ_g |p(g) − q(g)|` between two posteriors
/// over the same goal set. If either side has no valid samples the distance
/// is defined as 1 (maximal): a failed inference is as wrong as possible.
pub fn tv_distance(p: &GoalPosterior, q: &GoalPosterior) -> f64 {
    if !p.is_valid() || !q.is_valid() {
        return 1.0;
    }
    assert_eq!(
        p.probs.len(),
        q.probs.len(),
        "posteriors must cover the same goal set"
    );
    0.5 * p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

/// Posterior-weighted marginal of a binary path property:
/// `Σ_g p(g|x) · E_g[predicate(π)]`, where the inner expectation is
/// self-normalized over each goal's samples with their contributions as
/// weights.
///
/// Returns `None` when the posterior has no valid samples, or when some goal
/// with positive posterior mass has no positive-contribution sample (its
/// conditional expectation is undefined).
pub fn path_statistic_marginal<S>(
    samples: &[Vec<PathSample<S>>],
    posterior: &GoalPosterior,
    predicate: impl Fn(&[S]) -> bool,
) -> Option<f64> {
    if !posterior.is_valid() || samples.len() != posterior.probs.len() {
        return None;
    }
    let mut marginal = 0.0;
    for (goal_samples, &mass) in samples.iter().zip(&posterior.probs) {
        if mass <= 0.0 {
            continue;
        }
        let mut weight_total = 0.0;
        let mut weight_hit = 0.0;
        for sample in goal_samples {
            if sample.contribution > 0.0 {
                weight_total += sample.contribution;
                if predicate(&sample.trace) {
                    weight_hit += sample.contribution;
                }
            }
        }
        if weight_total <= 0.0 {
            return None;
        }
        marginal += mass * weight_hit / weight_total;
    }
    Some(marginal)
}
