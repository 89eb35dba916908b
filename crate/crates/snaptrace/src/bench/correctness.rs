//! Numerical-correctness experiment: the three likelihood estimators
//! (rejection, bidirectional without cache, bidirectional with cache) run
//! on a built-in 4×4 open grid — start uniform over the first row, goal at
//! (3,3) — and must agree at every cell.
//!
//! The sample budget is split into independent replicates (default 25 ×
//! 1,000). Each replicate re-derives its seed and rebuilds the rollout
//! cache, so replicate means are i.i.d. for *every* estimator, including
//! the cached one whose per-sample values inside a replicate share a cache
//! and are therefore correlated. Standard errors come from the spread of
//! replicate means, and each cell is judged by pairwise z-scores
//! (difference of grand means over combined SE). Pass iff all |z| ≤ 3.

use rayon::prelude::*;
use serde::Serialize;

use crate::bench::report::{PolicyEcho, SamplerEcho};
use crate::bench::InferenceEngine;
use crate::domains::{GridDomain, GridStart};
use crate::mdp::GoalId;
use crate::policy::PolicyConfig;
use crate::rng::{derive_seed, PHASE_TRIAL};
use crate::sampler::{Method, SamplerConfig};

#[derive(Debug, Clone)]
pub struct CorrectnessOptions {
    /// Total samples per estimator per cell (split across replicates).
    pub samples: usize,
    pub replicates: usize,
    pub sampler: SamplerConfig,
    pub policy: PolicyConfig,
}

impl Default for CorrectnessOptions {
    fn default() -> Self {
        Self {
            samples: 25_000,
            replicates: 25,
            sampler: SamplerConfig::default(),
            policy: PolicyConfig::default(),
        }
    }
}

/// One grid cell's estimator means, standard errors, and pairwise z-scores.
#[derive(Debug, Clone, Serialize)]
pub struct CellComparison {
    pub row: usize,
    pub col: usize,
    pub mean_rejection: f64,
    pub mean_bdpt: f64,
    pub mean_bdpt_cached: f64,
    pub se_rejection: f64,
    pub se_bdpt: f64,
    pub se_bdpt_cached: f64,
    pub z_rejection_vs_bdpt: f64,
    pub z_rejection_vs_cached: f64,
    pub z_bdpt_vs_cached: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrectnessReport {
    pub command: &'static str,
    pub seed: u64,
    pub replicates: usize,
    pub samples_per_replicate: usize,
    pub total_samples: usize,
    pub sampler: SamplerEcho,
    pub policy: PolicyEcho,
    pub cells: Vec<CellComparison>,
    pub max_abs_z: f64,
    /// Largest |meanA − meanB| / midpoint(meanA, meanB) over cells and pairs.
    pub max_relative_deviation: f64,
    pub pass: bool,
}

/// The built-in experiment domain: 4×4 open grid, start uniform over the
/// first row, single gem `g` at (3,3).
pub fn correctness_domain() -> GridDomain {
    GridDomain::new(
        4,
        4,
        vec![false; 16],
        vec![(15, 'g')],
        GridStart::Entryways(vec![0, 1, 2, 3]),
    )
    .expect("built-in experiment grid is valid")
}

const ESTIMATORS: usize = 3;

pub fn run_correctness(opts: &CorrectnessOptions) -> Result<CorrectnessReport, String> {
    opts.sampler.validate()?;
    if opts.replicates < 2 {
        return Err("correctness needs at least 2 replicates to estimate spread".into());
    }
    if opts.samples < opts.replicates {
        return Err(format!(
            "samples ({}) must be at least the replicate count ({})",
            opts.samples, opts.replicates
        ));
    }
    if opts.sampler.cache_rollouts == 0 {
        return Err("correctness compares the cached estimator; cache-rollouts must be > 0".into());
    }
    let per_replicate = opts.samples / opts.replicates;

    let domain = correctness_domain();
    let engine = InferenceEngine::new(&domain, &opts.policy).map_err(|e| e.to_string())?;
    let goal = GoalId(0);
    let cells: Vec<usize> = (0..16).collect();

    // replicate_means[r][cell][estimator]
    let replicate_means: Vec<Vec<[f64; ESTIMATORS]>> = (0..opts.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(opts.sampler.seed, &[PHASE_TRIAL, r as u64]);
            let base = SamplerConfig {
                n_samples: per_replicate,
                seed,
                ..opts.sampler.clone()
            };
            let no_cache = SamplerConfig { use_cache: false, ..base.clone() };
            let cached = SamplerConfig { use_cache: true, ..base.clone() };
            let caches = engine
                .caches(&cached, Method::Bdpt)
                .expect("cache_rollouts > 0 was validated");
            cells
                .iter()
                .map(|&x| {
                    let rej = engine.likelihoods_with_caches(&x, &base, Method::Rejection, None);
                    let plain =
                        engine.likelihoods_with_caches(&x, &no_cache, Method::Bdpt, None);
                    let with = engine.likelihoods_with_caches(
                        &x,
                        &cached,
                        Method::Bdpt,
                        Some(&caches),
                    );
                    [rej[goal.0].mean, plain[goal.0].mean, with[goal.0].mean]
                })
                .collect()
        })
        .collect();

    let mut reports = Vec::with_capacity(cells.len());
    let mut max_abs_z: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for (ci, &cell) in cells.iter().enumerate() {
        let mut mean = [0.0f64; ESTIMATORS];
        let mut se = [0.0f64; ESTIMATORS];
        for e in 0..ESTIMATORS {
            let vals: Vec<f64> = replicate_means.iter().map(|rep| rep[ci][e]).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>()
                / (vals.len() - 1) as f64;
            mean[e] = m;
            se[e] = (var / vals.len() as f64).sqrt();
        }
        let z = |a: usize, b: usize| -> f64 {
            let denom = (se[a].powi(2) + se[b].powi(2)).sqrt();
            if denom == 0.0 {
                if mean[a] == mean[b] { 0.0 } else { f64::INFINITY }
            } else {
                (mean[a] - mean[b]) / denom
            }
        };
        let rel = |a: usize, b: usize| -> f64 {
            let mid = (mean[a] + mean[b]) / 2.0;
            if mid == 0.0 { 0.0 } else { (mean[a] - mean[b]).abs() / mid }
        };
        let comparison = CellComparison {
            row: domain.coords(cell).0,
            col: domain.coords(cell).1,
            mean_rejection: mean[0],
            mean_bdpt: mean[1],
            mean_bdpt_cached: mean[2],
            se_rejection: se[0],
            se_bdpt: se[1],
            se_bdpt_cached: se[2],
            z_rejection_vs_bdpt: z(0, 1),
            z_rejection_vs_cached: z(0, 2),
            z_bdpt_vs_cached: z(1, 2),
        };
        for pair in [(0, 1), (0, 2), (1, 2)] {
            max_abs_z = max_abs_z.max(z(pair.0, pair.1).abs());
            max_rel = max_rel.max(rel(pair.0, pair.1));
        }
        reports.push(comparison);
    }

    Ok(CorrectnessReport {
        command: "correctness",
        seed: opts.sampler.seed,
        replicates: opts.replicates,
        samples_per_replicate: per_replicate,
        total_samples: per_replicate * opts.replicates,
        sampler: (&opts.sampler).into(),
        policy: (&opts.policy).into(),
        cells: reports,
        max_abs_z,
        max_relative_deviation: max_rel,
        pass: max_abs_z <= 3.0,
    })
}
