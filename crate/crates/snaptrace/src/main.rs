//! Command-line front end: single-snapshot inference, the posterior-quality
//! benchmark, the estimator-agreement experiment, and posterior heatmaps.
//!
//! Primary output goes to stdout (JSON for `infer`/`correctness`/`heatmap`,
//! CSV for `benchmark`); `--out` additionally writes files. Wall-clock
//! timing goes to stderr so reports stay byte-identical for a given
//! `(configuration, seed)`. Exit codes: 0 success, 2 configuration error,
//! 3 correctness-criterion failure.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use snaptrace::bench::{
    builtin_tasks, render_heatmap, run_benchmark, run_correctness, run_infer, to_pretty_json,
    BenchmarkOptions, CorrectnessOptions, HeatmapOptions, SnapshotSet, TaskDef,
    EXIT_CONFIG_ERROR, EXIT_CORRECTNESS_FAILURE,
};
use snaptrace::domains::{parse_domain, parse_mask, ParsedDomain};
use snaptrace::policy::{PolicyConfig, PolicyMode};
use snaptrace::posterior::GoalPrior;
use snaptrace::sampler::{Method, SamplerConfig};

#[derive(Parser)]
#[command(
    name = "snaptrace",
    about = "Infer which goal an agent is pursuing from a single observed state",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior over goals for one snapshot of one domain.
    Infer(InferArgs),
    /// Mean total-variation error of few-sample posteriors vs ground truth.
    Benchmark(BenchmarkArgs),
    /// Agreement test of the three estimators on a built-in 4×4 grid.
    Correctness(CorrectnessArgs),
    /// Posterior at every cell of a grid-like domain, as image + JSON.
    Heatmap(HeatmapArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rejection,
    Bdpt,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Rejection => Method::Rejection,
            MethodArg::Bdpt => Method::Bdpt,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    /// Value iteration over the full reachable state space.
    Vi,
    /// On-demand softmax over costs from an incremental reverse A*.
    Astar,
}

#[derive(Args)]
struct SamplerArgs {
    /// Backward importance-sampling strength (0 = uniform predecessors).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Mean Russian-roulette depth of the backward walk.
    #[arg(long, default_value_t = 5.0)]
    depth: f64,
    /// Forward rollouts cached per goal (0 disables the cache).
    #[arg(long = "cache-rollouts", default_value_t = 200)]
    cache_rollouts: usize,
    /// Root seed; all randomness derives from it.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

impl SamplerArgs {
    fn config(&self, n_samples: usize) -> SamplerConfig {
        SamplerConfig {
            alpha: self.alpha,
            depth_d: self.depth,
            n_samples,
            seed: self.seed,
            use_cache: self.cache_rollouts > 0,
            cache_rollouts: self.cache_rollouts,
            ..SamplerConfig::default()
        }
    }
}

#[derive(Args)]
struct PolicyArgs {
    /// Softmax inverse temperature (rationality).
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Discount factor in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Policy backend.
    #[arg(long, value_enum, default_value_t = PolicyArg::Astar)]
    policy: PolicyArg,
}

impl PolicyArgs {
    fn config(&self) -> PolicyConfig {
        PolicyConfig {
            beta: self.beta,
            gamma: self.gamma,
            mode: match self.policy {
                PolicyArg::Vi => PolicyMode::ValueIteration,
                PolicyArg::Astar => PolicyMode::AStarOnline,
            },
            ..PolicyConfig::default()
        }
    }
}

#[derive(Args)]
struct InferArgs {
    /// Domain description file.
    #[arg(long)]
    domain: PathBuf,
    /// Snapshot state, e.g. "2,3", "2,3;held=P", or "ea||r|n|s|t".
    #[arg(long)]
    snapshot: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Bdpt)]
    method: MethodArg,
    /// Samples per goal.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Domain description file; omit to run the built-in task suite.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Literal snapshots for the domain (repeatable); omit to draw stimulus
    /// snapshots from the generative model.
    #[arg(long = "snapshot")]
    snapshots: Vec<String>,
    /// Number of generated stimulus snapshots per task.
    #[arg(long, default_value_t = 20)]
    stimuli: usize,
    /// Evaluate every valid cell instead of generated stimuli. Off-path
    /// cells are near-impossible for any few-sample estimator, so this
    /// measures coverage rather than estimator quality.
    #[arg(long)]
    sweep: bool,
    /// Observed inventory for keys domains (e.g. "held=P"): conditions
    /// generated stimuli and is appended to swept cells.
    #[arg(long, default_value = "")]
    context: String,
    /// Independent trials per task.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Per-trial sample count(s); repeat the flag to evaluate several.
    #[arg(long = "samples", default_values_t = [10usize])]
    samples: Vec<usize>,
    /// Ground-truth sample count for the bidirectional estimator.
    #[arg(long = "gt-samples", default_value_t = 1000)]
    gt_samples: usize,
    /// If > 0, cross-check ground truth against rejection at this budget.
    #[arg(long = "gt-rejection-samples", default_value_t = 0)]
    gt_rejection_samples: usize,
    /// File of "row,col" lines to exclude from sweeps.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Also write the JSON report here (stdout gets CSV).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorrectnessArgs {
    /// Total samples per estimator per cell (split over 25 replicates).
    #[arg(long, default_value_t = 25_000)]
    samples: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    /// Domain description file.
    #[arg(long)]
    domain: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Bdpt)]
    method: MethodArg,
    /// Samples per goal per cell.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Inventory context appended to swept cells (keys domains).
    #[arg(long, default_value = "")]
    context: String,
    /// File of "row,col" lines to gray out.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Output base path: writes <out>.ppm and <out>.json. Omit for JSON on
    /// stdout only.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            EXIT_CONFIG_ERROR
        }
    };
    eprintln!("completed in {:.2}s", started.elapsed().as_secs_f64());
    std::process::exit(code);
}

fn run(command: Command) -> Result<i32, String> {
    match command {
        Command::Infer(args) => {
            let parsed = load_domain(&args.domain)?;
            let report = run_infer(
                &parsed,
                &args.snapshot,
                args.method.into(),
                &args.sampler.config(args.samples),
                &args.policy.config(),
                &GoalPrior::Uniform,
            )?;
            let json = to_pretty_json(&report);
            print!("{json}");
            write_out(args.out.as_deref(), &json)?;
            Ok(0)
        }
        Command::Benchmark(args) => {
            let tasks = match &args.domain {
                Some(path) => {
                    let parsed = load_domain(path)?;
                    let name = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "task".into());
                    let snapshots = if !args.snapshots.is_empty() {
                        SnapshotSet::Literals(args.snapshots.clone())
                    } else if args.sweep {
                        SnapshotSet::SweepCells
                    } else {
                        SnapshotSet::Generated { count: args.stimuli }
                    };
                    vec![TaskDef {
                        name,
                        domain: parsed,
                        context: args.context.clone(),
                        snapshots,
                        cache_rollouts: None,
                        beta: None,
                        alpha: None,
                        depth: None,
                    }]
                }
                None => builtin_tasks(),
            };
            let opts = BenchmarkOptions {
                trials: args.trials,
                trial_samples: args.samples.clone(),
                gt_samples: args.gt_samples,
                gt_rejection_samples: args.gt_rejection_samples,
                sampler: args.sampler.config(args.samples[0]),
                policy: args.policy.config(),
                prior: GoalPrior::Uniform,
                mask: load_mask(args.mask.as_deref())?,
            };
            let report = run_benchmark(&tasks, &opts)?;
            print!("{}", report.to_csv());
            write_out(args.out.as_deref(), &to_pretty_json(&report))?;
            Ok(0)
        }
        Command::Correctness(args) => {
            let opts = CorrectnessOptions {
                samples: args.samples,
                sampler: args.sampler.config(args.samples),
                policy: args.policy.config(),
                ..CorrectnessOptions::default()
            };
            let report = run_correctness(&opts)?;
            let json = to_pretty_json(&report);
            print!("{json}");
            write_out(args.out.as_deref(), &json)?;
            if report.pass {
                eprintln!(
                    "correctness: PASS (max |z| = {:.3}, max relative deviation = {:.4})",
                    report.max_abs_z, report.max_relative_deviation
                );
                Ok(0)
            } else {
                eprintln!(
                    "correctness: FAIL (max |z| = {:.3} exceeds 3)",
                    report.max_abs_z
                );
                Ok(EXIT_CORRECTNESS_FAILURE)
            }
        }
        Command::Heatmap(args) => {
            let parsed = load_domain(&args.domain)?;
            let opts = HeatmapOptions {
                method: args.method.into(),
                sampler: args.sampler.config(args.samples),
                policy: args.policy.config(),
                prior: GoalPrior::Uniform,
                context: args.context.clone(),
                mask: load_mask(args.mask.as_deref())?,
            };
            let report = render_heatmap(&parsed, &opts)?;
            let json = to_pretty_json(&report);
            match &args.out {
                Some(base) => {
                    let ppm_path = with_suffix(base, "ppm");
                    let json_path = with_suffix(base, "json");
                    fs::write(&ppm_path, report.to_ppm())
                        .map_err(|e| format!("writing {}: {e}", ppm_path.display()))?;
                    fs::write(&json_path, &json)
                        .map_err(|e| format!("writing {}: {e}", json_path.display()))?;
                    eprintln!(
                        "wrote {} and {}",
                        ppm_path.display(),
                        json_path.display()
                    );
                }
                None => print!("{json}"),
            }
            Ok(0)
        }
    }
}

fn load_domain(path: &std::path::Path) -> Result<ParsedDomain, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    parse_domain(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_mask(path: Option<&std::path::Path>) -> Result<Vec<(usize, usize)>, String> {
    match path {
        None => Ok(Vec::new()),
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| format!("reading {}: {e}", p.display()))?;
            parse_mask(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

fn write_out(path: Option<&std::path::Path>, contents: &str) -> Result<(), String> {
    if let Some(p) = path {
        fs::write(p, contents).map_err(|e| format!("writing {}: {e}", p.display()))?;
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn with_suffix(base: &std::path::Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}
