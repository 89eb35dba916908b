//! Concrete goal-directed environments.
//!
//! Every domain implements [`crate::mdp::Domain`]: enumerable forward and
//! backward dynamics, a set of goal hypotheses, and a start prior. The
//! estimators and the policy layer are generic over this trait, so each
//! domain only describes its mechanics.
//!
//! * [`ChainDomain`] — a 1-D corridor; small enough to enumerate every path
//!   by hand, which makes it the reference domain for exactness tests.
//! * [`GridDomain`] — a 2-D room with walls and doors; goals are gem cells.
//! * [`KeysDomain`] — a grid with keys, locked doors, and an inventory; the
//!   state space is (cell, held keys, opened doors).
//! * [`BlocksDomain`] — table-top block stacking toward a target word; goals
//!   are dictionary words, end states are any arrangement spelling the word.
//!
//! Grid-like domains are written in a small text format parsed by
//! [`parse_domain`]; see the repository's `fixtures/` directory for examples.

mod blocks;
mod chain;
mod grid;
mod keys;
mod parser;

pub use blocks::{BlockMove, BlocksDomain, BlocksStart, BlocksState};
pub use chain::{ChainDomain, ChainMove};
pub use grid::{GridDomain, GridMove, GridStart};
pub use keys::{KeysAction, KeysDomain, KeysState};
pub use parser::{parse_domain, parse_mask, ParseError, ParsedDomain};

use thiserror::Error;

/// Construction-time validation failures for concrete domains.
#[derive(Debug, Error)]
pub enum DomainError {
    #[error("domain needs at least one goal")]
    NoGoals,
    #[error("goal {goal} has no end states")]
    EmptyEndSet { goal: usize },
    #[error("cell {0} is out of range")]
    CellOutOfRange(usize),
    #[error("domain needs at least one start state")]
    NoStarts,
    #[error("more than {max} {kind}")]
    TooManyMarkers { kind: &'static str, max: usize },
    #[error("duplicate {kind} {label:?}")]
    DuplicateMarker { kind: &'static str, label: char },
    #[error("marker placed on wall cell {0}")]
    MarkerOnWall(usize),
    #[error("word uses letter {letter:?} more often than the table provides")]
    UnspellableWord { letter: char },
    #[error("blocks need at least two table slots")]
    TooFewSlots,
    #[error(transparent)]
    Prior(#[from] crate::mdp::MdpError),
}
