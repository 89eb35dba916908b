//! Lettered blocks on table slots; goals are dictionary words.
//!
//! A state is one stack per slot, serialized left-to-right with letters
//! bottom-to-top, which is canonical because slots are fixed positions. The
//! single action moves the top block of one slot onto another slot. An
//! episode ends for goal `w` as soon as some slot's stack spells `w` exactly,
//! bottom-to-top. Letters are distinct, so any word is spellable iff its
//! letters form a subset of the table's.

use crate::domains::DomainError;
use crate::mdp::{Domain, GoalId, StartPrior, Transition};

/// Move the top block of `from` onto `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct BlockMove {
    pub from: usize,
    pub to: usize,
}

/// One stack of letter indices per slot, bottom-to-top.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlocksState {
    pub stacks: Vec<Vec<u8>>,
}

/// How initial configurations are distributed.
#[derive(Debug, Clone)]
pub enum BlocksStart {
    /// Uniform over every configuration with each block alone in a slot.
    UniformScatter,
    /// Uniform over an explicit list of configurations.
    Explicit(Vec<BlocksState>),
}

/// See the module docs.
#[derive(Debug, Clone)]
pub struct BlocksDomain {
    letters: Vec<char>,
    slots: usize,
    /// Goal index → word as letter indices, in dictionary order as listed.
    words: Vec<Vec<u8>>,
    word_labels: Vec<String>,
    prior: StartPrior<BlocksState>,
}

impl BlocksDomain {
    /// Build a blocks domain from distinct letters, a slot count, and a
    /// dictionary. Goals keep the dictionary's listed order.
    pub fn new(
        letters: Vec<char>,
        slots: usize,
        dictionary: Vec<String>,
        start: BlocksStart,
    ) -> Result<Self, DomainError> {
        if letters.is_empty() || letters.len() > 8 {
            return Err(DomainError::TooManyMarkers { kind: "letters", max: 8 });
        }
        for (i, &ch) in letters.iter().enumerate() {
            if letters[..i].contains(&ch) {
                return Err(DomainError::DuplicateMarker { kind: "letter", label: ch });
            }
        }
        if slots < 2 {
            return Err(DomainError::TooFewSlots);
        }
        if dictionary.is_empty() {
            return Err(DomainError::NoGoals);
        }
        let mut words = Vec::with_capacity(dictionary.len());
        for word in &dictionary {
            let mut indices = Vec::with_capacity(word.len());
            for ch in word.chars() {
                let i = letters
                    .iter()
                    .position(|&l| l == ch)
                    .ok_or(DomainError::UnspellableWord { letter: ch })?;
                let i = i as u8;
                if indices.contains(&i) {
                    // Distinct letters: a repeated letter can never be stacked.
                    return Err(DomainError::UnspellableWord { letter: ch });
                }
                indices.push(i);
            }
            if indices.is_empty() {
                return Err(DomainError::NoGoals);
            }
            words.push(indices);
        }
        let starts = match start {
            BlocksStart::UniformScatter => {
                if slots < letters.len() {
                    return Err(DomainError::NoStarts);
                }
                scatter_configs(letters.len(), slots)
            }
            BlocksStart::Explicit(list) => list,
        };
        if starts.is_empty() {
            return Err(DomainError::NoStarts);
        }
        let prior = StartPrior::uniform(starts)?;
        Ok(Self { letters, slots, words, word_labels: dictionary, prior })
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Serialize a state as `|`-separated stacks, letters bottom-to-top.
    pub fn format_state(&self, state: &BlocksState) -> String {
        state
            .stacks
            .iter()
            .map(|stack| stack.iter().map(|&i| self.letters[i as usize]).collect::<String>())
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Parse the `format_state` form: exactly `slots` fields, every letter
    /// used exactly once.
    pub fn parse_snapshot(&self, spec: &str) -> Result<BlocksState, String> {
        let fields: Vec<&str> = spec.split('|').collect();
        if fields.len() != self.slots {
            return Err(format!(
                "expected {} `|`-separated stacks, got {}",
                self.slots,
                fields.len()
            ));
        }
        let mut seen = vec![false; self.letters.len()];
        let mut stacks = Vec::with_capacity(self.slots);
        for field in fields {
            let mut stack = Vec::new();
            for ch in field.trim().chars() {
                let i = self
                    .letters
                    .iter()
                    .position(|&l| l == ch)
                    .ok_or_else(|| format!("unknown block letter `{ch}`"))?;
                if seen[i] {
                    return Err(format!("block `{ch}` appears twice"));
                }
                seen[i] = true;
                stack.push(i as u8);
            }
            stacks.push(stack);
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(format!("block `{}` is missing", self.letters[i]));
        }
        Ok(BlocksState { stacks })
    }

    /// Whether the block labeled `letter` changes position anywhere along
    /// the trace — i.e. was moved at least once.
    pub fn block_touched(&self, trace: &[BlocksState], letter: char) -> bool {
        let Some(idx) = self.letters.iter().position(|&l| l == letter) else {
            return false;
        };
        let pos = |state: &BlocksState| {
            state.stacks.iter().enumerate().find_map(|(slot, stack)| {
                stack
                    .iter()
                    .position(|&b| b == idx as u8)
                    .map(|height| (slot, height))
            })
        };
        trace.windows(2).any(|w| pos(&w[0]) != pos(&w[1]))
    }

    /// Letter positions as (slot, height) in letter-index order.
    fn positions(&self, state: &BlocksState) -> Vec<(usize, usize)> {
        let mut pos = vec![(usize::MAX, usize::MAX); self.letters.len()];
        for (slot, stack) in state.stacks.iter().enumerate() {
            for (height, &b) in stack.iter().enumerate() {
                pos[b as usize] = (slot, height);
            }
        }
        pos
    }
}

/// All configurations with each of `n` blocks alone in one of `slots`
/// slots: ordered injections, enumerated in lexicographic slot order.
fn scatter_configs(n: usize, slots: usize) -> Vec<BlocksState> {
    let mut out = Vec::new();
    let mut assignment = Vec::with_capacity(n);
    let mut used = vec![false; slots];
    fn rec(
        block: usize,
        n: usize,
        slots: usize,
        used: &mut Vec<bool>,
        assignment: &mut Vec<usize>,
        out: &mut Vec<BlocksState>,
    ) {
        if block == n {
            let mut stacks = vec![Vec::new(); slots];
            for (b, &slot) in assignment.iter().enumerate() {
                stacks[slot].push(b as u8);
            }
            out.push(BlocksState { stacks });
            return;
        }
        for slot in 0..slots {
            if !used[slot] {
                used[slot] = true;
                assignment.push(slot);
                rec(block + 1, n, slots, used, assignment, out);
                assignment.pop();
                used[slot] = false;
            }
        }
    }
    rec(0, n, slots, &mut used, &mut assignment, &mut out);
    out
}

impl Domain for BlocksDomain {
    type State = BlocksState;
    type Action = BlockMove;

    fn goal_count(&self) -> usize {
        self.words.len()
    }

    fn goal_label(&self, goal: GoalId) -> String {
        self.word_labels[goal.0].clone()
    }

    fn successors(
        &self,
        state: &BlocksState,
        goal: GoalId,
    ) -> Vec<Transition<BlocksState, BlockMove>> {
        if self.is_end_state(state, goal) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for from in 0..self.slots {
            if state.stacks[from].is_empty() {
                continue;
            }
            for to in 0..self.slots {
                if to == from {
                    continue;
                }
                let mut next = state.clone();
                let block = next.stacks[from].pop().expect("checked nonempty");
                next.stacks[to].push(block);
                out.push(Transition {
                    next_state: next,
                    action: BlockMove { from, to },
                    prob: 1.0,
                });
            }
        }
        out
    }

    fn predecessors(&self, state: &BlocksState, goal: GoalId) -> Vec<(BlocksState, BlockMove)> {
        // The block now on top of `to` arrived from the top of any other
        // slot; undoing the move reconstructs that slot.
        let mut out = Vec::new();
        for to in 0..self.slots {
            if state.stacks[to].is_empty() {
                continue;
            }
            for from in 0..self.slots {
                if from == to {
                    continue;
                }
                let mut prev = state.clone();
                let block = prev.stacks[to].pop().expect("checked nonempty");
                prev.stacks[from].push(block);
                if !self.is_end_state(&prev, goal) {
                    out.push((prev, BlockMove { from, to }));
                }
            }
        }
        out
    }

    fn is_end_state(&self, state: &BlocksState, goal: GoalId) -> bool {
        let word = &self.words[goal.0];
        state.stacks.iter().any(|stack| stack == word)
    }

    fn end_states(&self, goal: GoalId) -> Vec<BlocksState> {
        // The word occupies one slot; the remaining letters fill the other
        // slots in every (assignment, stack-order) combination. A config is
        // produced exactly once: the slot assignment and within-slot orders
        // determine the generating choice.
        let word = &self.words[goal.0];
        let rest: Vec<u8> = (0..self.letters.len() as u8)
            .filter(|b| !word.contains(b))
            .collect();
        let mut out = Vec::new();
        for word_slot in 0..self.slots {
            let other_slots: Vec<usize> =
                (0..self.slots).filter(|&s| s != word_slot).collect();
            let mut assignment = vec![0usize; rest.len()];
            enumerate_assignments(&rest, &other_slots, 0, &mut assignment, &mut |asg| {
                let mut groups: Vec<Vec<u8>> = vec![Vec::new(); self.slots];
                for (i, &b) in rest.iter().enumerate() {
                    groups[asg[i]].push(b);
                }
                let mut stacks_sets: Vec<Vec<Vec<u8>>> = vec![Vec::new(); self.slots];
                for slot in 0..self.slots {
                    stacks_sets[slot] = if slot == word_slot {
                        vec![word.clone()]
                    } else {
                        permutations(&groups[slot])
                    };
                }
                cartesian_stacks(&stacks_sets, &mut |stacks| {
                    out.push(BlocksState { stacks: stacks.to_vec() });
                });
            });
        }
        out
    }

    fn start_prior(&self) -> &StartPrior<BlocksState> {
        &self.prior
    }

    fn move_lower_bound(&self, from: &BlocksState, to: &BlocksState) -> f64 {
        // Each move relocates exactly one block and leaves every other
        // block's (slot, height) unchanged, so the number of blocks whose
        // position differs is a consistent lower bound.
        let a = self.positions(from);
        let b = self.positions(to);
        a.iter().zip(&b).filter(|(x, y)| x != y).count() as f64
    }
}

/// All functions from `items` into `slots`, reported via `emit`.
fn enumerate_assignments(
    items: &[u8],
    slots: &[usize],
    i: usize,
    assignment: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if i == items.len() {
        emit(assignment);
        return;
    }
    for &slot in slots {
        assignment[i] = slot;
        enumerate_assignments(items, slots, i + 1, assignment, emit);
    }
}

/// All orderings of `items` (distinct), as candidate stack contents.
fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

/// Cartesian product over per-slot stack candidates.
fn cartesian_stacks(sets: &[Vec<Vec<u8>>], emit: &mut impl FnMut(&[Vec<u8>])) {
    fn rec(
        sets: &[Vec<Vec<u8>>],
        i: usize,
        current: &mut Vec<Vec<u8>>,
        emit: &mut impl FnMut(&[Vec<u8>]),
    ) {
        if i == sets.len() {
            emit(current);
            return;
        }
        for stack in &sets[i] {
            current.push(stack.clone());
            rec(sets, i + 1, current, emit);
            current.pop();
        }
    }
    rec(sets, 0, &mut Vec::with_capacity(sets.len()), emit);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn micro() -> BlocksDomain {
        BlocksDomain::new(
            vec!['a', 'b'],
            3,
            vec!["ab".into(), "ba".into()],
            BlocksStart::UniformScatter,
        )
        .unwrap()
    }

    fn parse(d: &BlocksDomain, s: &str) -> BlocksState {
        d.parse_snapshot(s).unwrap()
    }

    #[test]
    fn scatter_prior_counts_ordered_injections() {
        let d = micro();
        // 2 blocks into 3 slots, each alone: 3 * 2 = 6 configurations.
        assert_eq!(d.start_prior().len(), 6);
        let scatter = parse(&d, "a|b|");
        assert!((d.start_prior().mass(&scatter) - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn four_moves_from_a_two_block_scatter() {
        let d = micro();
        let s = parse(&d, "a|b|");
        let succ = d.successors(&s, GoalId(0));
        assert_eq!(succ.len(), 4);
        let stacked = parse(&d, "|ba|");
        assert!(succ
            .iter()
            .any(|t| t.next_state == stacked && t.action == BlockMove { from: 0, to: 1 }));
    }

    #[test]
    fn word_must_match_exactly_bottom_to_top() {
        let d = micro();
        let ab = parse(&d, "ab||");
        assert!(d.is_end_state(&ab, GoalId(0)), "spells ab");
        assert!(!d.is_end_state(&ab, GoalId(1)), "does not spell ba");
        assert!(d.successors(&ab, GoalId(0)).is_empty());
        assert!(!d.successors(&ab, GoalId(1)).is_empty());
    }

    #[test]
    fn end_states_enumerate_word_slots_and_leftovers() {
        let d = micro();
        // Both letters are in the word, so only the word slot varies.
        assert_eq!(d.end_states(GoalId(0)).len(), 3);

        // With a spare letter: 3 word slots x 2 slots for `c` = 6.
        let d3 = BlocksDomain::new(
            vec!['a', 'b', 'c'],
            3,
            vec!["ab".into()],
            BlocksStart::UniformScatter,
        )
        .unwrap();
        let ends = d3.end_states(GoalId(0));
        assert_eq!(ends.len(), 6);
        for e in &ends {
            assert!(d3.is_end_state(&e, GoalId(0)));
        }
    }

    #[test]
    fn end_enumeration_matches_a_brute_force_scan() {
        // Enumerate the reachable space from one scatter and compare the
        // end-state predicate against the generated list.
        let d3 = BlocksDomain::new(
            vec!['a', 'b', 'c'],
            3,
            vec!["ab".into()],
            BlocksStart::UniformScatter,
        )
        .unwrap();
        let goal = GoalId(0);
        let mut seen = std::collections::HashSet::new();
        let mut frontier = vec![parse(&d3, "a|b|c")];
        seen.insert(frontier[0].clone());
        while let Some(s) = frontier.pop() {
            for t in d3.successors(&s, goal) {
                if seen.insert(t.next_state.clone()) {
                    frontier.push(t.next_state);
                }
            }
        }
        // 3 distinct blocks over 3 labeled slots give 3! * C(5,2) = 60
        // configurations, but the three full towers [a,b,c] are unreachable
        // under goal `ab`: stacking b onto a is already absorbing, so c can
        // never land on top.
        assert_eq!(seen.len(), 57);
        let listed: std::collections::HashSet<_> =
            d3.end_states(goal).into_iter().collect();
        for s in &seen {
            assert_eq!(
                listed.contains(s),
                d3.is_end_state(s, goal),
                "end mismatch for {}",
                d3.format_state(s)
            );
        }
        // Every generated end state is also reachable here.
        assert!(listed.iter().all(|s| seen.contains(s)));
    }

    #[test]
    fn round_trip_over_a_reachable_space() {
        let d = micro();
        let goal = GoalId(1);
        let mut seen = std::collections::HashSet::new();
        let mut frontier = vec![parse(&d, "a|b|")];
        seen.insert(frontier[0].clone());
        while let Some(s) = frontier.pop() {
            for t in d.successors(&s, goal) {
                if seen.insert(t.next_state.clone()) {
                    frontier.push(t.next_state);
                }
            }
        }
        for s in &seen {
            for t in d.successors(s, goal) {
                assert!(
                    d.predecessors(&t.next_state, goal)
                        .iter()
                        .any(|(p, a)| p == s && *a == t.action),
                    "missing inverse of {} -> {}",
                    d.format_state(s),
                    d.format_state(&t.next_state)
                );
            }
            for (p, a) in d.predecessors(s, goal) {
                assert!(
                    d.successors(&p, goal)
                        .iter()
                        .any(|t| t.next_state == *s && t.action == a),
                    "phantom predecessor {} of {}",
                    d.format_state(&p),
                    d.format_state(s)
                );
                assert!(!d.is_end_state(&p, goal));
            }
        }
    }

    #[test]
    fn position_hamming_lower_bound() {
        let d = micro();
        let scatter = parse(&d, "a|b|");
        let stacked = parse(&d, "|ba|");
        // `a` moved; `b` kept (slot 1, height 0).
        assert_eq!(d.move_lower_bound(&scatter, &stacked), 1.0);
        assert_eq!(d.move_lower_bound(&scatter, &scatter), 0.0);
    }

    #[test]
    fn snapshot_parse_errors() {
        let d = micro();
        assert!(d.parse_snapshot("a|b").is_err(), "slot count");
        assert!(d.parse_snapshot("a|a|").is_err(), "duplicate");
        assert!(d.parse_snapshot("a||").is_err(), "missing b");
        assert!(d.parse_snapshot("a|x|").is_err(), "unknown letter");
        let s = parse(&d, "ba||");
        assert_eq!(d.format_state(&s), "ba||");
    }

    #[test]
    fn touched_tracks_position_changes() {
        let d = micro();
        let trace = vec![parse(&d, "a|b|"), parse(&d, "|b|a"), parse(&d, "|ba|")];
        assert!(d.block_touched(&trace, 'a'));
        assert!(!d.block_touched(&trace[..2].to_vec(), 'b'));
        assert!(d.block_touched(&trace, 'a'));
        assert!(!d.block_touched(&trace, 'z'), "unknown letters are never touched");
    }

    #[test]
    fn construction_errors() {
        let dup = BlocksDomain::new(
            vec!['a', 'a'],
            3,
            vec!["aa".into()],
            BlocksStart::UniformScatter,
        );
        assert!(matches!(dup, Err(DomainError::DuplicateMarker { .. })));
        let unspell = BlocksDomain::new(
            vec!['a', 'b'],
            3,
            vec!["ax".into()],
            BlocksStart::UniformScatter,
        );
        assert!(matches!(unspell, Err(DomainError::UnspellableWord { .. })));
        let cramped = BlocksDomain::new(
            vec!['a', 'b', 'c'],
            2,
            vec!["ab".into()],
            BlocksStart::UniformScatter,
        );
        assert!(matches!(cramped, Err(DomainError::NoStarts)));
    }
}
