//! 2-D gridworld: walls, gems as goals, four-directional movement.
//!
//! States are cells in row-major order (`cell = row * width + col`). Each
//! goal is one gem cell; stepping onto it ends the episode for that goal.
//! Other goals' gems are ordinary floor. The start prior is either a set of
//! entryway cells or uniform over every non-wall, non-gem cell.

use crate::domains::DomainError;
use crate::mdp::{Domain, GoalId, StartPrior, Transition};

/// Four-directional movement, ordered by the row-major index of the target
/// cell (north < west < east < south) so successor lists come out sorted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GridMove {
    North,
    West,
    East,
    South,
}

impl GridMove {
    const ALL: [GridMove; 4] = [
        GridMove::North,
        GridMove::West,
        GridMove::East,
        GridMove::South,
    ];

    /// Target of this move from `(row, col)`, if it stays on the board.
    fn apply(
        self,
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    ) -> Option<(usize, usize)> {
        match self {
            GridMove::North => (row > 0).then(|| (row - 1, col)),
            GridMove::West => (col > 0).then(|| (row, col - 1)),
            GridMove::East => (col + 1 < width).then(|| (row, col + 1)),
            GridMove::South => (row + 1 < height).then(|| (row + 1, col)),
        }
    }

    /// The move that undoes this one.
    pub(crate) fn inverse(self) -> GridMove {
        match self {
            GridMove::North => GridMove::South,
            GridMove::West => GridMove::East,
            GridMove::East => GridMove::West,
            GridMove::South => GridMove::North,
        }
    }
}

/// How initial cells are distributed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridStart {
    /// Uniform over the listed entryway cells.
    Entryways(Vec<usize>),
    /// Uniform over every non-wall, non-gem cell.
    Anywhere,
}

/// See the module docs.
#[derive(Debug, Clone)]
pub struct GridDomain {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    /// Goal index → (cell, label letter), ordered by label.
    gems: Vec<(usize, char)>,
    prior: StartPrior<usize>,
}

impl GridDomain {
    /// Build a grid. `walls` is row-major with `width * height` entries;
    /// gems must sit on distinct floor cells; entryways must be floor and
    /// not gems. Gems are sorted by label to fix the goal order.
    pub fn new(
        width: usize,
        height: usize,
        walls: Vec<bool>,
        mut gems: Vec<(usize, char)>,
        start: GridStart,
    ) -> Result<Self, DomainError> {
        let n = width * height;
        assert_eq!(walls.len(), n, "walls must cover the board");
        if gems.is_empty() {
            return Err(DomainError::NoGoals);
        }
        gems.sort_by_key(|&(_, label)| label);
        for &(cell, _) in &gems {
            if cell >= n {
                return Err(DomainError::CellOutOfRange(cell));
            }
        }
        let start_cells = match start {
            GridStart::Entryways(cells) => {
                for &cell in &cells {
                    if cell >= n {
                        return Err(DomainError::CellOutOfRange(cell));
                    }
                }
                cells
            }
            GridStart::Anywhere => (0..n)
                .filter(|&c| !walls[c] && !gems.iter().any(|&(g, _)| g == c))
                .collect(),
        };
        if start_cells.is_empty() {
            return Err(DomainError::NoStarts);
        }
        let prior = StartPrior::uniform(start_cells)?;
        Ok(Self {
            width,
            height,
            walls,
            gems,
            prior,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.width, cell % self.width)
    }

    pub fn is_wall(&self, cell: usize) -> bool {
        self.walls[cell]
    }

    /// Goal index → (cell, label), in goal order.
    pub fn gems(&self) -> &[(usize, char)] {
        &self.gems
    }

    /// Parse a `row,col` snapshot of a floor cell.
    pub fn parse_snapshot(&self, spec: &str) -> Result<usize, String> {
        let cell = parse_cell(spec, self.width, self.height)?;
        if self.walls[cell] {
            return Err(format!("snapshot {spec} is a wall cell"));
        }
        Ok(cell)
    }

    fn neighbors(&self, cell: usize) -> impl Iterator<Item = (usize, GridMove)> + '_ {
        let (row, col) = self.coords(cell);
        GridMove::ALL.into_iter().filter_map(move |mv| {
            let (r, c) = mv.apply(row, col, self.width, self.height)?;
            let next = self.cell(r, c);
            (!self.walls[next]).then_some((next, mv))
        })
    }
}

/// Parse `row,col` against the given board size.
pub(crate) fn parse_cell(spec: &str, width: usize, height: usize) -> Result<usize, String> {
    let (r, c) = spec
        .split_once(',')
        .ok_or_else(|| format!("expected `row,col`, got `{spec}`"))?;
    let row: usize = r
        .trim()
        .parse()
        .map_err(|_| format!("bad row in `{spec}`"))?;
    let col: usize = c
        .trim()
        .parse()
        .map_err(|_| format!("bad column in `{spec}`"))?;
    if row >= height || col >= width {
        return Err(format!(
            "cell {row},{col} outside the {height}x{width} board"
        ));
    }
    Ok(row * width + col)
}

impl Domain for GridDomain {
    type State = usize;
    type Action = GridMove;

    fn goal_count(&self) -> usize {
        self.gems.len()
    }

    fn goal_label(&self, goal: GoalId) -> String {
        format!("gem {}", self.gems[goal.0].1)
    }

    fn successors(&self, state: &usize, goal: GoalId) -> Vec<Transition<usize, GridMove>> {
        if self.is_end_state(state, goal) {
            return Vec::new();
        }
        self.neighbors(*state)
            .map(|(next, mv)| Transition {
                next_state: next,
                action: mv,
                prob: 1.0,
            })
            .collect()
    }

    fn predecessors(&self, state: &usize, goal: GoalId) -> Vec<(usize, GridMove)> {
        // Moves are symmetric: p reaches `state` via `mv` iff `state`
        // reaches p via the inverse move. End states are absorbing and never
        // proposed as predecessors.
        self.neighbors(*state)
            .filter(|(prev, _)| !self.is_end_state(prev, goal))
            .map(|(prev, mv)| (prev, mv.inverse()))
            .collect()
    }

    fn is_end_state(&self, state: &usize, goal: GoalId) -> bool {
        self.gems[goal.0].0 == *state
    }

    fn end_states(&self, goal: GoalId) -> Vec<usize> {
        vec![self.gems[goal.0].0]
    }

    fn start_prior(&self) -> &StartPrior<usize> {
        &self.prior
    }

    fn move_lower_bound(&self, from: &usize, to: &usize) -> f64 {
        let (fr, fc) = self.coords(*from);
        let (tr, tc) = self.coords(*to);
        (fr.abs_diff(tr) + fc.abs_diff(tc)) as f64
    }
}
