//! Goal inference from a single observed state of a goal-directed MDP.
//!
//! An agent starts somewhere (drawn from a known start prior), picks a goal, and
//! walks toward it under a Boltzmann-rational policy. We observe one *snapshot*
//! `x` of that walk — a single state, no actions, no time index — and want the
//! posterior over which goal the agent is pursuing, plus statistics of the paths
//! it plausibly took.
//!
//! The likelihood of a snapshot under goal `g` sums over every policy path `π`
//! that passes through `x`, weighting each by `1/|π|` (a snapshot is equally
//! likely to be taken anywhere along a path, so shorter paths concentrate more
//! likelihood per state):
//!
//! ```text
//! p(x | g) = Σ_{π ∋ x} p(start(π)) · p(π | g) · |π|⁻¹
//! ```
//!
//! Two Monte Carlo estimators of this sum are provided:
//!
//! * **Rejection sampling** — roll complete trajectories forward from the start
//!   prior and keep `1/|π|` for those that happen to visit `x`. Simple, but
//!   wasteful when `x` is rarely visited.
//! * **Bidirectional path sampling** — split every path at `x`: roll the policy
//!   forward from `x` to an end state, then trace *backwards* from `x` toward
//!   the start prior using importance-sampled predecessor steps and Russian
//!   roulette, optionally connecting to a reusable cache of forward rollouts.
//!   Every sample passes through `x` by construction, so none are wasted.
//!
//! Both estimators are unbiased for the same sum; the test suite checks them
//! against exhaustive path enumeration on small domains.
//!
//! # Quick start
//!
//! ```
//! use snaptrace::domains::ChainDomain;
//! use snaptrace::mdp::{Domain, GoalId};
//! use snaptrace::policy::{Policy, PolicyConfig};
//! use snaptrace::sampler::{estimate_likelihood, Method, SamplerConfig};
//!
//! // Four cells 0..=3, rightward moves only, goal at cell 3, uniform start
//! // over {0, 1, 2}. The likelihood of observing the agent at cell 1 is
//! // (1/3)(1/4) + (1/3)(1/3) = 7/36.
//! let chain = ChainDomain::new(4, false, vec![3], vec![0, 1, 2]).unwrap();
//! let goal = GoalId(0);
//! let policy = Policy::new(&chain, goal, &PolicyConfig::default()).unwrap();
//! // `use_cache: false` keeps the samples i.i.d., so the standard error of
//! // the mean is an honest tolerance. (With a shared rollout cache the
//! // samples correlate through it; see `sampler` for details.)
//! let config = SamplerConfig {
//!     n_samples: 20_000,
//!     use_cache: false,
//!     ..SamplerConfig::default()
//! };
//! let est = estimate_likelihood(&chain, &policy, &1, goal, &config, Method::Bdpt);
//! assert!((est.mean - 7.0 / 36.0).abs() < 4.0 * est.std_error());
//! ```
//!
//! The `snaptrace` binary exposes the same machinery as a CLI (`infer`,
//! `benchmark`, `correctness`, `heatmap`); see the repository README for the
//! domain file grammar and report formats.

pub mod bench;
pub mod domains;
pub mod mdp;
pub mod policy;
pub mod posterior;
pub mod rng;
pub mod sampler;

pub use mdp::{Domain, GoalId, StartPrior, Transition};
pub use policy::{PathCost, Policy, PolicyConfig, PolicyMode};
pub use posterior::{GoalPosterior, GoalPrior, PosteriorStatus};
pub use sampler::{
    BdptCache, LikelihoodEstimate, Method, PathSample, SampleOrigin, SamplerConfig,
};
