//! Built-in fixture texts and the benchmark task suite.
//!
//! The benchmark rows mirror the six tasks of the quality table: the
//! two-door grid, the start-anywhere grid, the keys room swept at three
//! inventories (no key / holding P / holding G), and the blocks table at a
//! fixed set of partially stacked snapshots.

use crate::domains::{parse_domain, ParsedDomain};

/// Names of the fixtures compiled into the binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureName {
    GridTwoDoors,
    GridStartAnywhere,
    KeysTwoDoors,
    BlocksWords,
    Chain,
}

/// The fixture file text, identical to the copy shipped in `fixtures/`.
pub fn fixture_text(name: FixtureName) -> &'static str {
    match name {
        FixtureName::GridTwoDoors => include_str!("../../../../fixtures/grid_two_doors.txt"),
        FixtureName::GridStartAnywhere => {
            include_str!("../../../../fixtures/grid_start_anywhere.txt")
        }
        FixtureName::KeysTwoDoors => include_str!("../../../../fixtures/keys_two_doors.txt"),
        FixtureName::BlocksWords => include_str!("../../../../fixtures/blocks_words.txt"),
        FixtureName::Chain => include_str!("../../../../fixtures/chain.txt"),
    }
}

/// Which snapshots a benchmark task evaluates.
#[derive(Debug, Clone)]
pub enum SnapshotSet {
    /// Snapshot states drawn from the generative model itself: goal uniform,
    /// trajectory from the policy, snapshot uniform along the trajectory —
    /// exactly the observation model the likelihood integrates over. Keys
    /// tasks additionally condition the draw on the task's held-key
    /// inventory ("observed holding the pink key"). Deduplicated; drawn once
    /// per task from a seeded stream, so the stimulus set is a deterministic
    /// function of the root seed.
    Generated { count: usize },
    /// Every non-wall, non-masked cell whose state is valid at the task's
    /// inventory context. Cells whose converged ground truth has no valid
    /// samples (unreachable given the inventory) are excluded from the
    /// averages, mirroring the shaded-cell exclusions of the source tables.
    /// Off-plausible-path cells make every few-sample estimator score near
    /// TV = 1, so this set measures coverage rather than estimator quality.
    SweepCells,
    /// An explicit list of snapshot literals.
    Literals(Vec<String>),
}

/// One benchmark row: a domain, an inventory context, and a snapshot set.
#[derive(Debug, Clone)]
pub struct TaskDef {
    pub name: String,
    pub domain: ParsedDomain,
    /// Inventory clauses (keys domains), e.g. `held=P`: appended to swept
    /// cells, and used as the held-key condition for generated stimuli.
    /// Empty means empty-handed.
    pub context: String,
    pub snapshots: SnapshotSet,
    /// Rollout-cache size override. Priors with many support states (the
    /// 720 block scatters) need a denser cache for reliable connections.
    pub cache_rollouts: Option<usize>,
    /// Per-task calibration overrides; `None` inherits the run-wide config.
    /// These are experiment knobs the source analysis leaves unstated, so
    /// each task carries the values its published numbers imply.
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub depth: Option<f64>,
}

/// Blocks snapshots: one or two moves into plausible word constructions,
/// written as `|`-separated stacks bottom-to-top.
pub const BLOCKS_SNAPSHOTS: [&str; 8] = [
    "ea||r|n|s|t",
    "|a|r|ne|s|t",
    "e||ra|n|s|t",
    "e|a|r|n|st|",
    "ear|||n|s|t",
    "|a|r|ne|st|",
    "nes|a|r|||t",
    "st|a|r|ne||",
];

/// The six built-in benchmark tasks.
pub fn builtin_tasks() -> Vec<TaskDef> {
    let parse = |name: FixtureName| {
        parse_domain(fixture_text(name)).expect("built-in fixtures always parse")
    };
    vec![
        TaskDef {
            name: "grid_two_doors".into(),
            domain: parse(FixtureName::GridTwoDoors),
            context: String::new(),
            snapshots: SnapshotSet::Generated { count: 100 },
            cache_rollouts: None,
            beta: Some(3.0),
            alpha: Some(4.0),
            depth: Some(100.0),
        },
        TaskDef {
            name: "grid_start_anywhere".into(),
            domain: parse(FixtureName::GridStartAnywhere),
            context: String::new(),
            snapshots: SnapshotSet::Generated { count: 100 },
            cache_rollouts: None,
            beta: Some(3.0),
            alpha: Some(4.0),
            depth: Some(100.0),
        },
        TaskDef {
            name: "keys_no_key".into(),
            domain: parse(FixtureName::KeysTwoDoors),
            context: String::new(),
            snapshots: SnapshotSet::Generated { count: 20 },
            cache_rollouts: None,
            beta: Some(3.0),
            alpha: Some(4.0),
            depth: Some(100.0),
        },
        TaskDef {
            name: "keys_pink_key".into(),
            domain: parse(FixtureName::KeysTwoDoors),
            context: "held=P".into(),
            snapshots: SnapshotSet::Generated { count: 20 },
            cache_rollouts: None,
            beta: Some(3.0),
            alpha: Some(4.0),
            depth: Some(100.0),
        },
        TaskDef {
            name: "keys_green_key".into(),
            domain: parse(FixtureName::KeysTwoDoors),
            context: "held=G".into(),
            snapshots: SnapshotSet::Generated { count: 20 },
            cache_rollouts: None,
            beta: Some(3.0),
            alpha: Some(4.0),
            depth: Some(100.0),
        },
        TaskDef {
            name: "blocks".into(),
            domain: parse(FixtureName::BlocksWords),
            context: String::new(),
            snapshots: SnapshotSet::Literals(
                BLOCKS_SNAPSHOTS.iter().map(|s| s.to_string()).collect(),
            ),
            cache_rollouts: Some(2000),
            beta: None,
            alpha: Some(4.0),
            depth: Some(100.0),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_parse() {
        for name in [
            FixtureName::GridTwoDoors,
            FixtureName::GridStartAnywhere,
            FixtureName::KeysTwoDoors,
            FixtureName::BlocksWords,
            FixtureName::Chain,
        ] {
            parse_domain(fixture_text(name)).unwrap();
        }
    }

    #[test]
    fn task_suite_shape() {
        let tasks = builtin_tasks();
        assert_eq!(tasks.len(), 6);
        assert_eq!(tasks[0].name, "grid_two_doors");
        assert!(matches!(tasks[5].snapshots, SnapshotSet::Literals(ref v) if v.len() == 8));
    }

    #[test]
    fn blocks_snapshots_parse() {
        let ParsedDomain::Blocks(blocks) =
            parse_domain(fixture_text(FixtureName::BlocksWords)).unwrap()
        else {
            panic!("expected blocks");
        };
        for spec in BLOCKS_SNAPSHOTS {
            blocks.parse_snapshot(spec).unwrap();
        }
    }
}
