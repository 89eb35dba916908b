//! Gridworld with colored keys and doors.
//!
//! A state is `(cell, held keys, open doors)`, the masks encoded as bits
//! over the key/door tables (each sorted by cell, which fixes bit order and
//! makes the encoding canonical). Moving into a closed door requires a held
//! key of the door's color; the move records the door as permanently open
//! and the key stays in hand (unlocking does not consume it). Picking a key
//! up is an explicit action, available while the key is still on the floor
//! — i.e. it is not currently held. Key colors are unique, so a color names
//! a single key and each door pairs with exactly one key.

use crate::domains::grid::{parse_cell, GridMove};
use crate::domains::DomainError;
use crate::mdp::{Domain, GoalId, StartPrior, Transition};

/// Move, or pick up the key on the current cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum KeysAction {
    Move(GridMove),
    Pickup,
}

/// Cell plus inventory and door bookkeeping. Bit `i` of `keys` means key
/// `i` is held; bit `j` of `doors` means door `j` stands open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeysState {
    pub cell: usize,
    pub keys: u8,
    pub doors: u8,
}

/// A gem, key, or door placed on a cell, tagged with its color letter.
type Marker = (usize, char);

/// See the module docs.
#[derive(Debug, Clone)]
pub struct KeysDomain {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    /// Goal index → (cell, label letter), ordered by label.
    gems: Vec<Marker>,
    /// Key index → (cell, color), ordered by cell.
    keys: Vec<Marker>,
    /// Door index → (cell, color), ordered by cell.
    doors: Vec<Marker>,
    prior: StartPrior<KeysState>,
}

impl KeysDomain {
    /// Build a keys domain. Walls are row-major over `width * height`.
    /// Entry cells start with nothing held and nothing open. At most eight
    /// keys and eight doors fit the bit masks, and key colors must be
    /// unique so that a color names a single key: `held=` clauses and the
    /// door–key pairing stay unambiguous.
    pub fn new(
        width: usize,
        height: usize,
        walls: Vec<bool>,
        mut gems: Vec<Marker>,
        mut keys: Vec<Marker>,
        mut doors: Vec<Marker>,
        entry_cells: Vec<usize>,
    ) -> Result<Self, DomainError> {
        let n = width * height;
        assert_eq!(walls.len(), n, "walls must cover the board");
        if gems.is_empty() {
            return Err(DomainError::NoGoals);
        }
        gems.sort_by_key(|&(_, label)| label);
        keys.sort_by_key(|&(cell, _)| cell);
        doors.sort_by_key(|&(cell, _)| cell);
        if keys.len() > 8 {
            return Err(DomainError::TooManyMarkers { kind: "keys", max: 8 });
        }
        if doors.len() > 8 {
            return Err(DomainError::TooManyMarkers { kind: "doors", max: 8 });
        }
        for (i, &(_, color)) in keys.iter().enumerate() {
            if keys[..i].iter().any(|&(_, c)| c == color) {
                return Err(DomainError::DuplicateMarker { kind: "key color", label: color });
            }
        }
        for &(cell, _) in gems.iter().chain(&keys).chain(&doors) {
            if cell >= n {
                return Err(DomainError::CellOutOfRange(cell));
            }
            if walls[cell] {
                return Err(DomainError::MarkerOnWall(cell));
            }
        }
        // No `@` marker: the agent may have started empty-handed on any plain
        // floor cell (not a wall, gem, key, or door cell), mirroring the grid
        // domain's start-anywhere rule.
        let entry_cells: Vec<usize> = if entry_cells.is_empty() {
            (0..n)
                .filter(|&c| {
                    !walls[c]
                        && !gems.iter().any(|&(g, _)| g == c)
                        && !keys.iter().any(|&(k, _)| k == c)
                        && !doors.iter().any(|&(d, _)| d == c)
                })
                .collect()
        } else {
            entry_cells
        };
        if entry_cells.is_empty() {
            return Err(DomainError::NoStarts);
        }
        let starts: Vec<KeysState> = entry_cells
            .iter()
            .map(|&cell| {
                if cell >= n {
                    return Err(DomainError::CellOutOfRange(cell));
                }
                Ok(KeysState { cell, keys: 0, doors: 0 })
            })
            .collect::<Result<_, _>>()?;
        let prior = StartPrior::uniform(starts)?;
        Ok(Self { width, height, walls, gems, keys, doors, prior })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.width, cell % self.width)
    }

    pub fn is_wall(&self, cell: usize) -> bool {
        self.walls[cell]
    }

    pub fn gems(&self) -> &[Marker] {
        &self.gems
    }

    pub fn keys(&self) -> &[Marker] {
        &self.keys
    }

    pub fn doors(&self) -> &[Marker] {
        &self.doors
    }

    fn door_index(&self, cell: usize) -> Option<usize> {
        self.doors.iter().position(|&(c, _)| c == cell)
    }

    fn key_index(&self, cell: usize) -> Option<usize> {
        self.keys.iter().position(|&(c, _)| c == cell)
    }

    /// Held key of this color, if any.
    fn held_key_of_color(&self, keys_mask: u8, color: char) -> Option<usize> {
        self.keys
            .iter()
            .position(|&(_, c)| c == color)
            .filter(|&i| keys_mask & (1 << i) != 0)
    }

    /// Whether any door of this color is open. Opening needs the color's
    /// key in hand and keys are never dropped, so an open door means the
    /// key left the floor — the masks where it is neither held nor on the
    /// floor are unreachable, and this predicate keeps walks out of them.
    fn color_door_open(&self, doors_mask: u8, color: char) -> bool {
        self.doors
            .iter()
            .enumerate()
            .any(|(j, &(_, c))| c == color && doors_mask & (1 << j) != 0)
    }

    fn neighbors(&self, cell: usize) -> impl Iterator<Item = (usize, GridMove)> + '_ {
        let (row, col) = self.coords(cell);
        let (width, height) = (self.width, self.height);
        [GridMove::North, GridMove::West, GridMove::East, GridMove::South]
            .into_iter()
            .filter_map(move |mv| {
                let (r, c) = match mv {
                    GridMove::North => (row.checked_sub(1)?, col),
                    GridMove::West => (row, col.checked_sub(1)?),
                    GridMove::East if col + 1 < width => (row, col + 1),
                    GridMove::South if row + 1 < height => (row + 1, col),
                    _ => return None,
                };
                let next = r * width + c;
                (!self.walls[next]).then_some((next, mv))
            })
    }

    /// Parse `row,col[;held=PG][;open=r1,c1+r2,c2]` into a state. `held`
    /// lists key colors; `open` lists door cells. A key may be held with
    /// its door open — that is the normal state after unlocking.
    pub fn parse_snapshot(&self, spec: &str) -> Result<KeysState, String> {
        let mut parts = spec.split(';');
        let cell_part = parts.next().unwrap_or("").trim();
        let cell = parse_cell(cell_part, self.width, self.height)?;
        if self.walls[cell] {
            return Err(format!("snapshot cell `{cell_part}` is a wall"));
        }
        let (keys, doors) = self.parse_context_parts(parts)?;
        if let Some(j) = self.door_index(cell) {
            if doors & (1 << j) == 0 {
                return Err(format!(
                    "snapshot stands on door {} which the spec leaves closed",
                    self.doors[j].1
                ));
            }
        }
        Ok(KeysState { cell, keys, doors })
    }

    /// Parse just the `held=` / `open=` clauses (both optional, `;`
    /// separated) into (keys mask, doors mask). Used by heatmap sweeps to
    /// fix an inventory while roaming the cell.
    pub fn parse_context(&self, spec: &str) -> Result<(u8, u8), String> {
        let parts = spec.split(';').filter(|p| !p.trim().is_empty());
        self.parse_context_parts(parts)
    }

    fn parse_context_parts<'a>(
        &self,
        parts: impl Iterator<Item = &'a str>,
    ) -> Result<(u8, u8), String> {
        let mut keys_mask = 0u8;
        let mut doors_mask = 0u8;
        for part in parts {
            let part = part.trim();
            if let Some(colors) = part.strip_prefix("held=") {
                for color in colors.chars().filter(|c| *c != ',') {
                    let i = self
                        .keys
                        .iter()
                        .position(|&(_, c)| c == color)
                        .ok_or_else(|| format!("no key of color {color}"))?;
                    keys_mask |= 1 << i;
                }
            } else if let Some(cells) = part.strip_prefix("open=") {
                for cell_spec in cells.split('+') {
                    let cell = parse_cell(cell_spec, self.width, self.height)?;
                    let j = self
                        .door_index(cell)
                        .ok_or_else(|| format!("no door at `{cell_spec}`"))?;
                    doors_mask |= 1 << j;
                }
            } else {
                return Err(format!("expected `held=` or `open=`, got `{part}`"));
            }
        }
        Ok((keys_mask, doors_mask))
    }
}

impl Domain for KeysDomain {
    type State = KeysState;
    type Action = KeysAction;

    fn goal_count(&self) -> usize {
        self.gems.len()
    }

    fn goal_label(&self, goal: GoalId) -> String {
        format!("gem {}", self.gems[goal.0].1)
    }

    fn successors(&self, state: &KeysState, goal: GoalId) -> Vec<Transition<KeysState, KeysAction>> {
        if self.is_end_state(state, goal) {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(5);
        for (next_cell, mv) in self.neighbors(state.cell) {
            let next = if let Some(j) = self.door_index(next_cell) {
                if state.doors & (1 << j) != 0 {
                    // Door already open: walk through.
                    KeysState { cell: next_cell, ..*state }
                } else if self.held_key_of_color(state.keys, self.doors[j].1).is_some() {
                    // Unlock: the door stays open, the key stays in hand.
                    KeysState {
                        cell: next_cell,
                        doors: state.doors | (1 << j),
                        ..*state
                    }
                } else {
                    continue;
                }
            } else {
                KeysState { cell: next_cell, ..*state }
            };
            out.push(Transition { next_state: next, action: KeysAction::Move(mv), prob: 1.0 });
        }
        if let Some(i) = self.key_index(state.cell) {
            let on_floor = state.keys & (1 << i) == 0
                && !self.color_door_open(state.doors, self.keys[i].1);
            if on_floor {
                out.push(Transition {
                    next_state: KeysState { keys: state.keys | (1 << i), ..*state },
                    action: KeysAction::Pickup,
                    prob: 1.0,
                });
            }
        }
        out
    }

    fn predecessors(&self, state: &KeysState, goal: GoalId) -> Vec<(KeysState, KeysAction)> {
        let mut out = Vec::new();
        let arrival_door = self.door_index(state.cell);
        for (prev_cell, mv) in self.neighbors(state.cell) {
            if self.is_end_state(&KeysState { cell: prev_cell, ..*state }, goal) {
                continue;
            }
            let arrive = KeysAction::Move(mv.inverse());
            match arrival_door {
                Some(j) if state.doors & (1 << j) != 0 => {
                    // Walked through while already open...
                    out.push((KeysState { cell: prev_cell, ..*state }, arrive));
                    // ...or this very move unlocked it: the key (still in
                    // hand now) was in hand then too, the door was closed.
                    if self.held_key_of_color(state.keys, self.doors[j].1).is_some() {
                        out.push((
                            KeysState {
                                cell: prev_cell,
                                doors: state.doors & !(1 << j),
                                ..*state
                            },
                            arrive,
                        ));
                    }
                }
                Some(_) => {
                    // Standing on a closed door cannot be entered by a move.
                }
                None => out.push((KeysState { cell: prev_cell, ..*state }, arrive)),
            }
        }
        if let Some(i) = self.key_index(state.cell) {
            let was_pickup = state.keys & (1 << i) != 0
                && !self.color_door_open(state.doors, self.keys[i].1);
            if was_pickup {
                let prev = KeysState { keys: state.keys & !(1 << i), ..*state };
                if !self.is_end_state(&prev, goal) {
                    out.push((prev, KeysAction::Pickup));
                }
            }
        }
        out
    }

    fn is_end_state(&self, state: &KeysState, goal: GoalId) -> bool {
        self.gems[goal.0].0 == state.cell
    }

    fn end_states(&self, goal: GoalId) -> Vec<KeysState> {
        // Every inventory/door combination at the gem cell is absorbing.
        // Combinations no forward path produces are harmless as search
        // seeds: backward edges from them stay inside unreachable masks.
        let cell = self.gems[goal.0].0;
        let mut out = Vec::new();
        for keys in 0..(1u16 << self.keys.len()) {
            for doors in 0..(1u16 << self.doors.len()) {
                out.push(KeysState { cell, keys: keys as u8, doors: doors as u8 });
            }
        }
        out
    }

    fn start_prior(&self) -> &StartPrior<KeysState> {
        &self.prior
    }

    fn move_lower_bound(&self, from: &KeysState, to: &KeysState) -> f64 {
        let (fr, fc) = self.coords(from.cell);
        let (tr, tc) = self.coords(to.cell);
        (fr.abs_diff(tr) + fc.abs_diff(tc)) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1×6 corridor: gem g | floor | door K | floor | key K | entry.
    fn corridor() -> KeysDomain {
        KeysDomain::new(
            6,
            1,
            vec![false; 6],
            vec![(0, 'g')],
            vec![(4, 'K')],
            vec![(2, 'K')],
            vec![5],
        )
        .unwrap()
    }

    fn st(cell: usize, keys: u8, doors: u8) -> KeysState {
        KeysState { cell, keys, doors }
    }

    #[test]
    fn closed_door_blocks_without_key() {
        let d = corridor();
        let succ = d.successors(&st(3, 0, 0), GoalId(0));
        assert_eq!(succ.len(), 1, "only east is open: {succ:?}");
        assert_eq!(succ[0].next_state, st(4, 0, 0));
    }

    #[test]
    fn unlocking_opens_the_door_and_keeps_the_key() {
        let d = corridor();
        let succ = d.successors(&st(3, 0b1, 0), GoalId(0));
        let west = succ
            .iter()
            .find(|t| t.action == KeysAction::Move(GridMove::West))
            .expect("held key unlocks the door");
        assert_eq!(west.next_state, st(2, 0b1, 0b1));
    }

    #[test]
    fn pickup_only_while_on_floor() {
        let d = corridor();
        let has_pickup = |state: &KeysState| {
            d.successors(state, GoalId(0))
                .iter()
                .any(|t| t.action == KeysAction::Pickup)
        };
        assert!(has_pickup(&st(4, 0, 0)), "fresh key");
        assert!(!has_pickup(&st(4, 0b1, 0)), "already held");
        // An open door means the key left the floor; the unheld mask is
        // unreachable and the guard keeps walks from wandering into it.
        assert!(!has_pickup(&st(4, 0, 0b1)), "open door, key not on floor");
    }

    #[test]
    fn start_prior_is_empty_handed_entry() {
        let d = corridor();
        assert_eq!(d.start_prior().support(), &[(st(5, 0, 0), 1.0)]);
    }

    #[test]
    fn end_states_cover_all_masks() {
        let d = corridor();
        let ends = d.end_states(GoalId(0));
        assert_eq!(ends.len(), 4);
        assert!(ends.iter().all(|s| s.cell == 0));
    }

    #[test]
    fn gem_is_reachable_with_the_key() {
        // Forward breadth-first search from the entry must reach the gem.
        let d = corridor();
        let goal = GoalId(0);
        let mut frontier = vec![st(5, 0, 0)];
        let mut seen = std::collections::HashSet::new();
        let mut reached = false;
        while let Some(s) = frontier.pop() {
            if d.is_end_state(&s, goal) {
                reached = true;
                continue;
            }
            for t in d.successors(&s, goal) {
                if seen.insert(t.next_state) {
                    frontier.push(t.next_state);
                }
            }
        }
        assert!(reached, "corridor gem should be reachable");
    }

    #[test]
    fn round_trip_over_the_full_product_space() {
        let d = corridor();
        let goal = GoalId(0);
        let all_states = (0..6).flat_map(|cell| {
            (0..2u8).flat_map(move |keys| (0..2u8).map(move |doors| st(cell, keys, doors)))
        });
        for s in all_states {
            for t in d.successors(&s, goal) {
                assert!(
                    d.predecessors(&t.next_state, goal).contains(&(s, t.action)),
                    "missing inverse of {s:?} -> {:?}",
                    t.next_state
                );
            }
            for (p, a) in d.predecessors(&s, goal) {
                assert!(
                    d.successors(&p, goal)
                        .iter()
                        .any(|t| t.next_state == s && t.action == a),
                    "phantom predecessor {p:?} of {s:?}"
                );
                assert!(!d.is_end_state(&p, goal));
            }
        }
    }

    #[test]
    fn open_door_cell_has_both_arrival_predecessors() {
        let d = corridor();
        let preds = d.predecessors(&st(2, 0b1, 0b1), GoalId(0));
        // From cells 1 and 3, each either through the already-open door or
        // as the unlocking move itself (door back closed, key in hand both
        // ways since unlocking keeps it).
        assert_eq!(preds.len(), 4, "{preds:?}");
        assert!(preds.contains(&(st(3, 0b1, 0), KeysAction::Move(GridMove::West))));
        assert!(preds.contains(&(st(3, 0b1, 0b1), KeysAction::Move(GridMove::West))));
        // Empty-handed on the open door: the unlocking move is impossible
        // (the key would still be in hand), so only walked-through remains.
        let preds = d.predecessors(&st(2, 0, 0b1), GoalId(0));
        assert_eq!(preds.len(), 2, "{preds:?}");
        assert!(preds.contains(&(st(3, 0, 0b1), KeysAction::Move(GridMove::West))));
    }

    #[test]
    fn closed_door_standing_has_no_movement_predecessors() {
        let d = corridor();
        let preds = d.predecessors(&st(2, 0, 0), GoalId(0));
        assert!(preds.is_empty(), "{preds:?}");
    }

    #[test]
    fn snapshot_parsing() {
        let d = corridor();
        assert_eq!(d.parse_snapshot("0,3"), Ok(st(3, 0, 0)));
        assert_eq!(d.parse_snapshot("0,3;held=K"), Ok(st(3, 0b1, 0)));
        assert_eq!(d.parse_snapshot("0,1;open=0,2"), Ok(st(1, 0, 0b1)));
        assert_eq!(d.parse_snapshot("0,2;open=0,2"), Ok(st(2, 0, 0b1)));
        assert!(d.parse_snapshot("0,2").is_err(), "standing on a closed door");
        assert!(d.parse_snapshot("0,3;held=Q").is_err(), "unknown color");
        assert_eq!(
            d.parse_snapshot("0,3;held=K;open=0,2"),
            Ok(st(3, 0b1, 0b1)),
            "held with its door open is the normal post-unlock state"
        );
        assert_eq!(d.parse_context("held=K"), Ok((0b1, 0)));
        assert_eq!(d.parse_context(""), Ok((0, 0)));
    }

    #[test]
    fn duplicate_key_color_rejected() {
        let err = KeysDomain::new(
            6,
            1,
            vec![false; 6],
            vec![(0, 'g')],
            vec![(3, 'K'), (4, 'K')],
            vec![(2, 'K')],
            vec![5],
        )
        .unwrap_err();
        assert!(matches!(err, DomainError::DuplicateMarker { .. }));
    }
}
