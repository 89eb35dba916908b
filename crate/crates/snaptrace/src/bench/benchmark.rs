//! Posterior-quality benchmark: total-variation distance of few-sample
//! posteriors against converged ground truth.
//!
//! For every task: ground truth is the bidirectional estimator at
//! `gt_samples` (default 1,000) per snapshot, optionally cross-checked by
//! rejection at a larger budget. Each of `trials` independent runs then
//! estimates a posterior per snapshot at each small sample count, and the
//! TV against ground truth is averaged over (trial × snapshot). Runs whose
//! posterior has no valid samples score TV = 1. Snapshots whose ground
//! truth itself has no valid samples (states unreachable under the task's
//! inventory) are excluded from the averages, mirroring the shaded
//! excluded cells of the source analysis.

use rayon::prelude::*;
use serde::Serialize;

use crate::bench::fixtures::{SnapshotSet, TaskDef};
use crate::bench::report::{PolicyEcho, SamplerEcho};
use crate::bench::{sweep_states, InferenceEngine};
use crate::domains::ParsedDomain;
use crate::mdp::Domain;
use crate::policy::PolicyConfig;
use crate::posterior::{posterior_over_goals, tv_distance, GoalPosterior, GoalPrior};
use crate::rng::{derive_seed, pick_uniform, stream, PHASE_GROUND_TRUTH, PHASE_STIMULI, PHASE_TRIAL};
use crate::sampler::{Method, SamplerConfig};

/// Benchmark-wide knobs. `sampler.seed` is the root seed; per-trial and
/// ground-truth seeds derive from it.
#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    pub trials: usize,
    /// Small sample counts to evaluate (default `[10]`).
    pub trial_samples: Vec<usize>,
    pub gt_samples: usize,
    /// When nonzero, also run a rejection ground truth at this budget and
    /// report its agreement with the primary ground truth.
    pub gt_rejection_samples: usize,
    pub sampler: SamplerConfig,
    pub policy: PolicyConfig,
    pub prior: GoalPrior,
    pub mask: Vec<(usize, usize)>,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            trials: 100,
            trial_samples: vec![10],
            gt_samples: 1000,
            gt_rejection_samples: 0,
            sampler: SamplerConfig::default(),
            policy: PolicyConfig::default(),
            prior: GoalPrior::Uniform,
            mask: Vec::new(),
        }
    }
}

/// One CSV row: a task × method × sample-count cell of the quality table.
#[derive(Debug, Clone, Serialize)]
pub struct TaskRow {
    pub task: String,
    pub method: String,
    pub samples: usize,
    /// Mean TV against ground truth over (trial × snapshot) runs, each
    /// snapshot weighted by its multiplicity among the stimulus draws.
    pub mean_tv: f64,
    /// Weighted fraction of runs whose posterior had no valid samples.
    pub no_valid_share: f64,
    pub trials: usize,
    pub snapshots: usize,
}

/// Bookkeeping for one task's snapshot set.
#[derive(Debug, Clone, Serialize)]
pub struct TaskSummary {
    pub name: String,
    /// Stimulus draws (with multiplicity) or listed snapshots.
    pub snapshots_swept: usize,
    /// Distinct snapshots whose ground truth was valid.
    pub snapshots_kept: usize,
    /// Swept snapshots dropped because converged ground truth had no valid
    /// samples (state unreachable under the task's inventory).
    pub excluded_no_ground_truth: usize,
    /// Mean TV between the rejection ground truth and the primary ground
    /// truth, when `gt_rejection_samples > 0`.
    pub gt_rejection_mean_tv: Option<f64>,
    /// Effective knobs after per-task calibration overrides.
    pub beta: f64,
    pub alpha: f64,
    pub depth_d: f64,
    pub cache_rollouts: usize,
    /// Per-snapshot mean TV at the smallest sample count, for spotting which
    /// stimuli dominate a task's average.
    pub per_snapshot: Vec<SnapshotDiag>,
}

/// Where a task's TV comes from, snapshot by snapshot.
#[derive(Debug, Clone, Serialize)]
pub struct SnapshotDiag {
    /// Debug rendering of the snapshot state.
    pub snapshot: String,
    /// Multiplicity of this snapshot among the task's stimulus draws; the
    /// task averages weight each snapshot by this count.
    pub weight: usize,
    /// Ground truth's most probable goal and its probability.
    pub gt_top_goal: String,
    pub gt_top_prob: f64,
    /// Mean TV over trials at the smallest configured sample count.
    pub rejection_tv: f64,
    pub bdpt_tv: f64,
}

/// The full benchmark output; `to_csv` renders the quality-table rows.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub command: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub trial_samples: Vec<usize>,
    pub gt_samples: usize,
    pub sampler: SamplerEcho,
    pub policy: PolicyEcho,
    pub tasks: Vec<TaskSummary>,
    pub rows: Vec<TaskRow>,
}

impl BenchmarkReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,method,samples,mean_tv,no_valid_share,trials,snapshots\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.4},{},{}\n",
                row.task,
                row.method,
                row.samples,
                row.mean_tv,
                row.no_valid_share,
                row.trials,
                row.snapshots
            ));
        }
        out
    }

    /// The row for one (task, method, samples) cell.
    pub fn row(&self, task: &str, method: Method, samples: usize) -> Option<&TaskRow> {
        let method = method.to_string();
        self.rows
            .iter()
            .find(|r| r.task == task && r.method == method && r.samples == samples)
    }
}

/// Run the benchmark over the given tasks.
pub fn run_benchmark(
    tasks: &[TaskDef],
    opts: &BenchmarkOptions,
) -> Result<BenchmarkReport, String> {
    opts.sampler.validate()?;
    if opts.trials == 0 || opts.trial_samples.is_empty() {
        return Err("benchmark needs at least one trial and one sample count".into());
    }
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for (ti, task) in tasks.iter().enumerate() {
        let specs = resolve_snapshots(task, opts)?;
        let ti = ti as u64;
        let (summary, task_rows) = match &task.domain {
            ParsedDomain::Chain(d) => {
                bench_task(d, |s| d.parse_snapshot(s), |_| true, task, specs, ti, opts)?
            }
            ParsedDomain::Grid(d) => {
                bench_task(d, |s| d.parse_snapshot(s), |_| true, task, specs, ti, opts)?
            }
            ParsedDomain::Keys(d) => {
                // Generated stimuli condition on the task's observed
                // inventory: "holding the pink key" constrains held keys,
                // while door states vary as the generative walk dictates.
                let (held, _doors) = d
                    .parse_context(&task.context)
                    .map_err(|e| format!("task {}: {e}", task.name))?;
                bench_task(
                    d,
                    |s| d.parse_snapshot(s),
                    move |s| s.keys == held,
                    task,
                    specs,
                    ti,
                    opts,
                )?
            }
            ParsedDomain::Blocks(d) => {
                bench_task(d, |s| d.parse_snapshot(s), |_| true, task, specs, ti, opts)?
            }
        };
        summaries.push(summary);
        rows.extend(task_rows);
    }
    Ok(BenchmarkReport {
        command: "benchmark",
        seed: opts.sampler.seed,
        trials: opts.trials,
        trial_samples: opts.trial_samples.clone(),
        gt_samples: opts.gt_samples,
        sampler: (&opts.sampler).into(),
        policy: (&opts.policy).into(),
        tasks: summaries,
        rows,
    })
}

/// Snapshot literals for the task, or `None` when the task draws generated
/// stimuli (resolved inside `bench_task`, where the policies live).
fn resolve_snapshots(
    task: &TaskDef,
    opts: &BenchmarkOptions,
) -> Result<Option<Vec<String>>, String> {
    match &task.snapshots {
        SnapshotSet::Literals(list) => Ok(Some(list.clone())),
        SnapshotSet::SweepCells => Ok(Some(
            sweep_states(&task.domain, &task.context, &opts.mask)?
                .into_iter()
                .map(|(_, _, spec)| spec)
                .collect(),
        )),
        SnapshotSet::Generated { .. } => Ok(None),
    }
}

/// Draw stimulus snapshots from the generative model: goal uniform, start
/// from the prior, trajectory from the policy, snapshot uniform along the
/// trajectory; keep draws that satisfy `accept` (the task's observed
/// inventory). Draws are kept *with multiplicity*, so the stimulus set
/// weights each snapshot by how often a viewer would actually face it —
/// deduplicating here would re-weight rare wiggle states up to parity with
/// corridor states and turn the average into a uniform state sweep. Rollouts
/// that dead-end or overflow are discarded — they have zero probability
/// under the goal-directed model.
fn generate_stimuli<D: Domain>(
    domain: &D,
    engine: &InferenceEngine<'_, D>,
    accept: &impl Fn(&D::State) -> bool,
    count: usize,
    task_index: u64,
    opts: &BenchmarkOptions,
) -> Result<Vec<D::State>, String> {
    let mut rng = stream(opts.sampler.seed, &[task_index, PHASE_STIMULI]);
    let goals = domain.goals();
    let mut stimuli: Vec<D::State> = Vec::new();
    let budget = count.max(1) * 500;
    for _ in 0..budget {
        if stimuli.len() == count {
            break;
        }
        let goal = goals[pick_uniform(&mut rng, goals.len())];
        let policy = &engine.policies()[goal.0];
        let mut current = domain.start_prior().sample(&mut rng).clone();
        let mut trace = vec![current.clone()];
        while !domain.is_end_state(&current, goal)
            && trace.len() <= opts.sampler.max_forward_steps
        {
            match policy.sample_step(&current, &mut rng) {
                Some(next) => {
                    trace.push(next.clone());
                    current = next;
                }
                None => break,
            }
        }
        if !domain.is_end_state(&current, goal) {
            continue;
        }
        let snapshot = trace[pick_uniform(&mut rng, trace.len())].clone();
        if accept(&snapshot) {
            stimuli.push(snapshot);
        }
    }
    if stimuli.is_empty() {
        return Err(format!(
            "no stimulus snapshots matched the task context in {budget} generative draws"
        ));
    }
    Ok(stimuli)
}

/// Per-(method, sample-count) accumulator of one trial.
#[derive(Clone, Default)]
struct RunTally {
    tv_sum: f64,
    no_valid: usize,
    runs: usize,
}

fn bench_task<D: Domain>(
    domain: &D,
    parse: impl Fn(&str) -> Result<D::State, String>,
    accept: impl Fn(&D::State) -> bool,
    task: &TaskDef,
    specs: Option<Vec<String>>,
    task_index: u64,
    opts: &BenchmarkOptions,
) -> Result<(TaskSummary, Vec<TaskRow>), String> {
    // Per-task calibration: tasks may pin the rationality and sampler knobs
    // their published numbers imply; unset fields inherit the run config.
    let policy = PolicyConfig {
        beta: task.beta.unwrap_or(opts.policy.beta),
        ..opts.policy.clone()
    };
    let sampler = SamplerConfig {
        alpha: task.alpha.unwrap_or(opts.sampler.alpha),
        depth_d: task.depth.unwrap_or(opts.sampler.depth_d),
        ..opts.sampler.clone()
    };
    let engine = InferenceEngine::new(domain, &policy).map_err(|e| e.to_string())?;
    let drawn: Vec<D::State> = match (&specs, &task.snapshots) {
        (Some(list), _) => list
            .iter()
            .map(|s| parse(s).map_err(|e| format!("task {}: {e}", task.name)))
            .collect::<Result<_, _>>()?,
        (None, SnapshotSet::Generated { count }) => {
            generate_stimuli(domain, &engine, &accept, *count, task_index, opts)
                .map_err(|e| format!("task {}: {e}", task.name))?
        }
        (None, _) => unreachable!("resolve_snapshots returns literals for non-generated sets"),
    };
    let snapshot_count = drawn.len();
    // Collapse repeated draws: inference runs once per distinct snapshot,
    // averages weight each snapshot by its multiplicity.
    let mut states: Vec<D::State> = Vec::new();
    let mut mult: Vec<usize> = Vec::new();
    for s in drawn {
        match states.iter().position(|t| *t == s) {
            Some(i) => mult[i] += 1,
            None => {
                states.push(s);
                mult.push(1);
            }
        }
    }
    let cache_rollouts = task.cache_rollouts.unwrap_or(sampler.cache_rollouts);

    // Ground truth per snapshot.
    let gt_config = SamplerConfig {
        n_samples: opts.gt_samples,
        seed: derive_seed(sampler.seed, &[task_index, PHASE_GROUND_TRUTH]),
        cache_rollouts,
        use_cache: true,
        ..sampler.clone()
    };
    let gt_caches = engine.caches(&gt_config, Method::Bdpt);
    let gt_posteriors: Vec<GoalPosterior> = states
        .iter()
        .map(|x| {
            let est = engine.likelihoods_with_caches(x, &gt_config, Method::Bdpt, gt_caches.as_deref());
            posterior_over_goals(&est, &opts.prior).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;

    let kept: Vec<usize> = (0..states.len())
        .filter(|&i| gt_posteriors[i].is_valid())
        .collect();
    if kept.is_empty() {
        return Err(format!(
            "task {}: every snapshot's ground truth is empty; nothing to score",
            task.name
        ));
    }

    // Optional rejection ground truth, as an agreement diagnostic.
    let gt_rejection_mean_tv = if opts.gt_rejection_samples > 0 {
        let rej_config = SamplerConfig {
            n_samples: opts.gt_rejection_samples,
            seed: derive_seed(sampler.seed, &[task_index, PHASE_GROUND_TRUTH, 1]),
            ..sampler.clone()
        };
        let (sum, weight) = kept
            .iter()
            .map(|&i| {
                let est = engine.likelihoods_with_caches(
                    &states[i],
                    &rej_config,
                    Method::Rejection,
                    None,
                );
                let post = posterior_over_goals(&est, &opts.prior)
                    .expect("validated prior");
                (mult[i] as f64 * tv_distance(&post, &gt_posteriors[i]), mult[i])
            })
            .fold((0.0, 0usize), |(s, w), (tv, m)| (s + tv, w + m));
        Some(sum / weight as f64)
    } else {
        None
    };

    // Trials: each owns a derived seed (fresh caches, fresh streams). Trial
    // results are folded in index order so parallelism cannot change bytes.
    // Tallies are kept per (sample count × method × snapshot); rows average
    // over snapshots, the per-snapshot diagnostic averages over trials.
    let methods = [Method::Rejection, Method::Bdpt];
    let cell = |ni: usize, mi: usize, ki: usize| (ni * methods.len() + mi) * kept.len() + ki;
    let per_trial: Vec<Vec<RunTally>> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(sampler.seed, &[task_index, PHASE_TRIAL, t as u64]);
            let base = SamplerConfig {
                seed: trial_seed,
                cache_rollouts,
                ..sampler.clone()
            };
            let trial_caches = engine.caches(&base, Method::Bdpt);
            let mut tallies = vec![
                RunTally::default();
                methods.len() * opts.trial_samples.len() * kept.len()
            ];
            for (ni, &n) in opts.trial_samples.iter().enumerate() {
                let config = SamplerConfig { n_samples: n, ..base.clone() };
                for (mi, &method) in methods.iter().enumerate() {
                    let caches = match method {
                        Method::Bdpt => trial_caches.as_deref(),
                        Method::Rejection => None,
                    };
                    for (ki, &i) in kept.iter().enumerate() {
                        let est = engine.likelihoods_with_caches(
                            &states[i], &config, method, caches,
                        );
                        let post = posterior_over_goals(&est, &opts.prior)
                            .expect("validated prior");
                        let tally = &mut tallies[cell(ni, mi, ki)];
                        if !post.is_valid() {
                            tally.no_valid += mult[i];
                        }
                        tally.tv_sum += mult[i] as f64 * tv_distance(&post, &gt_posteriors[i]);
                        tally.runs += mult[i];
                    }
                }
            }
            tallies
        })
        .collect();

    let fold = |ni: usize, mi: usize, ki: usize| {
        let mut total = RunTally::default();
        for trial in &per_trial {
            let t = &trial[cell(ni, mi, ki)];
            total.tv_sum += t.tv_sum;
            total.no_valid += t.no_valid;
            total.runs += t.runs;
        }
        total
    };

    let mut rows = Vec::new();
    for (ni, &n) in opts.trial_samples.iter().enumerate() {
        for (mi, &method) in methods.iter().enumerate() {
            let mut total = RunTally::default();
            for ki in 0..kept.len() {
                let t = fold(ni, mi, ki);
                total.tv_sum += t.tv_sum;
                total.no_valid += t.no_valid;
                total.runs += t.runs;
            }
            rows.push(TaskRow {
                task: task.name.clone(),
                method: method.to_string(),
                samples: n,
                mean_tv: total.tv_sum / total.runs as f64,
                no_valid_share: total.no_valid as f64 / total.runs as f64,
                trials: opts.trials,
                snapshots: kept.len(),
            });
        }
    }

    let labels = engine.goal_labels();
    let per_snapshot = kept
        .iter()
        .enumerate()
        .map(|(ki, &i)| {
            let gt = &gt_posteriors[i];
            let top = gt.argmax().expect("kept snapshots have valid ground truth");
            let mean = |mi: usize| {
                let t = fold(0, mi, ki);
                t.tv_sum / t.runs as f64
            };
            SnapshotDiag {
                snapshot: format!("{:?}", states[i]),
                weight: mult[i],
                gt_top_goal: labels[top.0].clone(),
                gt_top_prob: gt.prob(top),
                rejection_tv: mean(0),
                bdpt_tv: mean(1),
            }
        })
        .collect();

    let summary = TaskSummary {
        name: task.name.clone(),
        snapshots_swept: snapshot_count,
        snapshots_kept: kept.len(),
        excluded_no_ground_truth: states.len() - kept.len(),
        gt_rejection_mean_tv,
        beta: policy.beta,
        alpha: sampler.alpha,
        depth_d: sampler.depth_d,
        cache_rollouts,
        per_snapshot,
    };
    Ok((summary, rows))
}
