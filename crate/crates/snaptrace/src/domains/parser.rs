//! Text format for domain fixtures.
//!
//! Three layouts share one entry point, [`parse_domain`]:
//!
//! * `chain:` header — a 1-D corridor:
//!   ```text
//!   chain: 4
//!   moves: right        // or `both`
//!   goals: 3            // one goal per listed cell
//!   starts: 0 1 2
//!   ```
//! * `letters:` header — block stacking:
//!   ```text
//!   letters: a e n r s t
//!   slots: 6
//!   words: earn near rats star nest
//!   start: e|a|r|n|s|t  // optional; repeated lines form an explicit prior
//!   ```
//! * anything else — an ASCII room, one glyph per cell: `#` wall, `.` floor,
//!   lowercase gem, uppercase key, `@` entryway. Doors live in bracketed
//!   annotation lines after the map, e.g. `[P] 2,1` for a P-colored door on
//!   row 2, column 1. A map with keys or doors becomes a [`KeysDomain`]
//!   (entryways required); otherwise a [`GridDomain`], where zero `@` means
//!   a uniform start anywhere off the walls and gems.
//!
//! `//` starts a comment anywhere; blank lines separate sections.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use crate::domains::{
    BlocksDomain, BlocksStart, ChainDomain, DomainError, GridDomain, GridStart, KeysDomain,
};
use crate::mdp::Domain;

/// A fixture file problem, pointing at the offending line when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-indexed line, or 0 for whole-file problems.
    pub line: usize,
    /// 1-indexed column, or 0 when only the line is meaningful.
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, col: usize, message: impl Into<String>) -> Self {
        Self { line, col, message: message.into() }
    }

    fn on_line(line: usize, message: impl Into<String>) -> Self {
        Self::at(line, 0, message)
    }

    fn whole_file(message: impl Into<String>) -> Self {
        Self::at(0, 0, message)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.col) {
            (0, _) => write!(f, "{}", self.message),
            (l, 0) => write!(f, "line {l}: {}", self.message),
            (l, c) => write!(f, "line {l}, column {c}: {}", self.message),
        }
    }
}

impl std::error::Error for ParseError {}

impl From<DomainError> for ParseError {
    fn from(err: DomainError) -> Self {
        ParseError::whole_file(err.to_string())
    }
}

/// A fixture file's domain, dispatched by layout.
#[derive(Debug, Clone)]
pub enum ParsedDomain {
    Chain(ChainDomain),
    Grid(GridDomain),
    Keys(KeysDomain),
    Blocks(BlocksDomain),
}

impl ParsedDomain {
    pub fn kind(&self) -> &'static str {
        match self {
            ParsedDomain::Chain(_) => "chain",
            ParsedDomain::Grid(_) => "grid",
            ParsedDomain::Keys(_) => "keys",
            ParsedDomain::Blocks(_) => "blocks",
        }
    }

    pub fn goal_count(&self) -> usize {
        match self {
            ParsedDomain::Chain(d) => d.goal_count(),
            ParsedDomain::Grid(d) => d.goal_count(),
            ParsedDomain::Keys(d) => d.goal_count(),
            ParsedDomain::Blocks(d) => d.goal_count(),
        }
    }

    pub fn goal_labels(&self) -> Vec<String> {
        let labels = |count: usize, f: &dyn Fn(crate::mdp::GoalId) -> String| {
            (0..count).map(|i| f(crate::mdp::GoalId(i))).collect()
        };
        match self {
            ParsedDomain::Chain(d) => labels(d.goal_count(), &|g| d.goal_label(g)),
            ParsedDomain::Grid(d) => labels(d.goal_count(), &|g| d.goal_label(g)),
            ParsedDomain::Keys(d) => labels(d.goal_count(), &|g| d.goal_label(g)),
            ParsedDomain::Blocks(d) => labels(d.goal_count(), &|g| d.goal_label(g)),
        }
    }
}

/// Strip `//` comments and trailing whitespace, keeping 1-indexed lines.
fn meaningful_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, raw)| {
            let body = match raw.find("//") {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            (i + 1, body.trim_end())
        })
        .filter(|(_, body)| !body.trim().is_empty())
        .collect()
}

/// Parse a fixture file. See the module docs for the format.
pub fn parse_domain(text: &str) -> Result<ParsedDomain, ParseError> {
    let lines = meaningful_lines(text);
    let Some(&(_, first)) = lines.first() else {
        return Err(ParseError::whole_file("empty domain file"));
    };
    if first.trim_start().starts_with("chain:") {
        parse_chain(&lines).map(ParsedDomain::Chain)
    } else if first.trim_start().starts_with("letters:") {
        parse_blocks(&lines).map(ParsedDomain::Blocks)
    } else {
        parse_room(&lines)
    }
}

/// Parse a mask file: one excluded `row,col` cell per line.
pub fn parse_mask(text: &str) -> Result<Vec<(usize, usize)>, ParseError> {
    let mut out = Vec::new();
    for (line, body) in meaningful_lines(text) {
        let body = body.trim();
        let (r, c) = body
            .split_once(',')
            .ok_or_else(|| ParseError::on_line(line, format!("expected `row,col`, got `{body}`")))?;
        let row = r.trim().parse::<usize>().map_err(|_| {
            ParseError::on_line(line, format!("bad row in `{body}`"))
        })?;
        let col = c.trim().parse::<usize>().map_err(|_| {
            ParseError::on_line(line, format!("bad column in `{body}`"))
        })?;
        out.push((row, col));
    }
    Ok(out)
}

/// `key: value` lines in order, with duplicate detection left to callers.
fn split_kv(line_no: usize, body: &str) -> Result<(String, String), ParseError> {
    let (key, value) = body
        .split_once(':')
        .ok_or_else(|| ParseError::on_line(line_no, format!("expected `key: value`, got `{body}`")))?;
    Ok((key.trim().to_string(), value.trim().to_string()))
}

fn parse_usize_list(line_no: usize, value: &str) -> Result<Vec<usize>, ParseError> {
    value
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| ParseError::on_line(line_no, format!("`{tok}` is not a number")))
        })
        .collect()
}

fn parse_chain(lines: &[(usize, &str)]) -> Result<ChainDomain, ParseError> {
    let mut cells = None;
    let mut bidirectional = false;
    let mut goals = None;
    let mut starts = None;
    for &(line_no, body) in lines {
        let (key, value) = split_kv(line_no, body)?;
        match key.as_str() {
            "chain" => {
                cells = Some(value.parse::<usize>().map_err(|_| {
                    ParseError::on_line(line_no, format!("bad cell count `{value}`"))
                })?);
            }
            "moves" => {
                bidirectional = match value.as_str() {
                    "right" => false,
                    "both" => true,
                    other => {
                        return Err(ParseError::on_line(
                            line_no,
                            format!("moves must be `right` or `both`, got `{other}`"),
                        ))
                    }
                };
            }
            "goals" => goals = Some(parse_usize_list(line_no, &value)?),
            "starts" => starts = Some(parse_usize_list(line_no, &value)?),
            other => {
                return Err(ParseError::on_line(line_no, format!("unknown chain key `{other}`")))
            }
        }
    }
    let cells = cells.ok_or_else(|| ParseError::whole_file("chain file needs `chain: <cells>`"))?;
    let goals = goals.ok_or_else(|| ParseError::whole_file("chain file needs `goals:`"))?;
    let starts = starts.ok_or_else(|| ParseError::whole_file("chain file needs `starts:`"))?;
    Ok(ChainDomain::new(cells, bidirectional, goals, starts)?)
}

fn parse_blocks(lines: &[(usize, &str)]) -> Result<BlocksDomain, ParseError> {
    let mut letters: Option<Vec<char>> = None;
    let mut slots = None;
    let mut words: Option<Vec<String>> = None;
    let mut explicit_starts: Vec<(usize, String)> = Vec::new();
    for &(line_no, body) in lines {
        let (key, value) = split_kv(line_no, body)?;
        match key.as_str() {
            "letters" => {
                let mut list = Vec::new();
                for tok in value.split_whitespace() {
                    let mut chars = tok.chars();
                    let (Some(ch), None) = (chars.next(), chars.next()) else {
                        return Err(ParseError::on_line(
                            line_no,
                            format!("letters must be single characters, got `{tok}`"),
                        ));
                    };
                    if !ch.is_ascii_lowercase() {
                        return Err(ParseError::on_line(
                            line_no,
                            format!("letters must be lowercase ascii, got `{ch}`"),
                        ));
                    }
                    list.push(ch);
                }
                letters = Some(list);
            }
            "slots" => {
                slots = Some(value.parse::<usize>().map_err(|_| {
                    ParseError::on_line(line_no, format!("bad slot count `{value}`"))
                })?);
            }
            "words" => {
                words = Some(value.split_whitespace().map(str::to_string).collect());
            }
            "start" => explicit_starts.push((line_no, value)),
            other => {
                return Err(ParseError::on_line(line_no, format!("unknown blocks key `{other}`")))
            }
        }
    }
    let letters = letters.ok_or_else(|| ParseError::whole_file("blocks file needs `letters:`"))?;
    let slots = slots.ok_or_else(|| ParseError::whole_file("blocks file needs `slots:`"))?;
    let words = words.ok_or_else(|| ParseError::whole_file("blocks file needs `words:`"))?;

    if explicit_starts.is_empty() {
        return Ok(BlocksDomain::new(letters, slots, words, BlocksStart::UniformScatter)?);
    }
    // Parse explicit starts against a scratch domain with the same layout.
    let scratch =
        BlocksDomain::new(letters.clone(), slots, words.clone(), BlocksStart::UniformScatter)?;
    let configs = explicit_starts
        .into_iter()
        .map(|(line_no, spec)| {
            scratch
                .parse_snapshot(&spec)
                .map_err(|msg| ParseError::on_line(line_no, msg))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BlocksDomain::new(letters, slots, words, BlocksStart::Explicit(configs))?)
}

fn parse_room(lines: &[(usize, &str)]) -> Result<ParsedDomain, ParseError> {
    // Split map rows from annotation lines: a row is made of glyphs, an
    // annotation starts with `[`.
    let mut rows: Vec<(usize, &str)> = Vec::new();
    let mut annotations: Vec<(usize, &str)> = Vec::new();
    for &(line_no, body) in lines {
        if body.trim_start().starts_with('[') {
            annotations.push((line_no, body));
        } else if annotations.is_empty() {
            rows.push((line_no, body));
        } else {
            return Err(ParseError::on_line(line_no, "map rows after annotations"));
        }
    }
    if rows.is_empty() {
        return Err(ParseError::whole_file("no map rows"));
    }
    let width = rows[0].1.chars().count();
    let height = rows.len();
    let mut walls = vec![false; width * height];
    let mut gems: Vec<(usize, char)> = Vec::new();
    let mut keys: Vec<(usize, char)> = Vec::new();
    let mut entries: Vec<usize> = Vec::new();
    for (r, &(line_no, body)) in rows.iter().enumerate() {
        let row_width = body.chars().count();
        if row_width != width {
            return Err(ParseError::on_line(
                line_no,
                format!("row is {row_width} cells wide, expected {width}"),
            ));
        }
        for (c, glyph) in body.chars().enumerate() {
            let cell = r * width + c;
            match glyph {
                '#' => walls[cell] = true,
                '.' => {}
                '@' => entries.push(cell),
                g if g.is_ascii_lowercase() => {
                    if gems.iter().any(|&(_, l)| l == g) {
                        return Err(ParseError::at(line_no, c + 1, format!("duplicate gem `{g}`")));
                    }
                    gems.push((cell, g));
                }
                g if g.is_ascii_uppercase() => {
                    if keys.iter().any(|&(_, l)| l == g) {
                        return Err(ParseError::at(
                            line_no,
                            c + 1,
                            format!("duplicate key color `{g}`"),
                        ));
                    }
                    keys.push((cell, g));
                }
                other => {
                    return Err(ParseError::at(line_no, c + 1, format!("unknown glyph `{other}`")))
                }
            }
        }
    }

    let mut doors: Vec<(usize, char)> = Vec::new();
    for (line_no, body) in annotations {
        let body = body.trim();
        let rest = body
            .strip_prefix('[')
            .ok_or_else(|| ParseError::on_line(line_no, "annotation must start with `[`"))?;
        let (color, coords) = rest
            .split_once(']')
            .ok_or_else(|| ParseError::on_line(line_no, "annotation missing `]`"))?;
        let color = color.trim();
        let mut chars = color.chars();
        let (Some(color), None) = (chars.next(), chars.next()) else {
            return Err(ParseError::on_line(line_no, format!("door color must be one letter, got `{color}`")));
        };
        if !color.is_ascii_uppercase() {
            return Err(ParseError::on_line(
                line_no,
                format!("door color must be uppercase, got `{color}`"),
            ));
        }
        let coords = coords.trim();
        let (r, c) = coords.split_once(',').ok_or_else(|| {
            ParseError::on_line(line_no, format!("expected `row,col` after `]`, got `{coords}`"))
        })?;
        let row: usize = r.trim().parse().map_err(|_| {
            ParseError::on_line(line_no, format!("bad door row `{}`", r.trim()))
        })?;
        let col: usize = c.trim().parse().map_err(|_| {
            ParseError::on_line(line_no, format!("bad door column `{}`", c.trim()))
        })?;
        if row >= height || col >= width {
            return Err(ParseError::on_line(
                line_no,
                format!("door at {row},{col} is outside the {height}x{width} map"),
            ));
        }
        let cell = row * width + col;
        if walls[cell]
            || gems.iter().any(|&(g, _)| g == cell)
            || keys.iter().any(|&(k, _)| k == cell)
            || entries.contains(&cell)
        {
            return Err(ParseError::on_line(
                line_no,
                format!("door at {row},{col} must sit on plain floor"),
            ));
        }
        if doors.iter().any(|&(d, _)| d == cell) {
            return Err(ParseError::on_line(line_no, format!("two doors at {row},{col}")));
        }
        if !keys.iter().any(|&(_, k)| k == color) {
            return Err(ParseError::on_line(
                line_no,
                format!("door color `{color}` has no matching key"),
            ));
        }
        doors.push((cell, color));
    }

    if gems.is_empty() {
        return Err(ParseError::whole_file("map has no gems"));
    }

    let parsed = if keys.is_empty() && doors.is_empty() {
        let start = if entries.is_empty() {
            GridStart::Anywhere
        } else {
            GridStart::Entryways(entries.clone())
        };
        ParsedDomain::Grid(GridDomain::new(width, height, walls.clone(), gems.clone(), start)?)
    } else {
        // No `@` marker: KeysDomain falls back to a start-anywhere prior over
        // plain floor cells, like the grid domain.
        ParsedDomain::Keys(KeysDomain::new(
            width,
            height,
            walls.clone(),
            gems.clone(),
            keys,
            doors,
            entries.clone(),
        )?)
    };

    // Reachability sanity: treating all doors as open, every gem must be
    // reachable from some start cell. Catches walled-off layouts early.
    let starts: Vec<usize> = if entries.is_empty() {
        (0..width * height)
            .filter(|&cell| !walls[cell] && !gems.iter().any(|&(g, _)| g == cell))
            .collect()
    } else {
        entries
    };
    let mut reached: HashSet<usize> = starts.iter().copied().collect();
    let mut queue: VecDeque<usize> = starts.into_iter().collect();
    while let Some(cell) = queue.pop_front() {
        let (r, c) = (cell / width, cell % width);
        let mut push = |cell: usize| {
            if !walls[cell] && reached.insert(cell) {
                queue.push_back(cell);
            }
        };
        if r > 0 {
            push(cell - width);
        }
        if c > 0 {
            push(cell - 1);
        }
        if c + 1 < width {
            push(cell + 1);
        }
        if r + 1 < height {
            push(cell + width);
        }
    }
    for &(cell, label) in &gems {
        if !reached.contains(&cell) {
            return Err(ParseError::whole_file(format!(
                "gem `{label}` is walled off from every start"
            )));
        }
    }

    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::GoalId;

    const TWO_GEM_ROOM: &str = "\
#####
#r.g#
#...#
#.@.#
#####
";

    #[test]
    fn grid_with_entryway() {
        let ParsedDomain::Grid(grid) = parse_domain(TWO_GEM_ROOM).unwrap() else {
            panic!("expected a grid");
        };
        assert_eq!((grid.width(), grid.height()), (5, 5));
        assert_eq!(grid.gems(), &[(grid.cell(1, 3), 'g'), (grid.cell(1, 1), 'r')]);
        assert_eq!(grid.start_prior().support(), &[(grid.cell(3, 2), 1.0)]);
        assert!(grid.is_wall(0));
    }

    #[test]
    fn grid_without_entryway_starts_anywhere() {
        let text = TWO_GEM_ROOM.replace('@', ".");
        let ParsedDomain::Grid(grid) = parse_domain(&text).unwrap() else {
            panic!("expected a grid");
        };
        // 3x3 open interior minus two gems.
        assert_eq!(grid.start_prior().len(), 7);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = format!("// a room\n\n{TWO_GEM_ROOM}\n// trailing note\n");
        assert!(parse_domain(&text).is_ok());
    }

    #[test]
    fn keys_map_with_door_annotations() {
        let text = "\
######
#g..K#
#....#
#.@..#
######

[K] 1,2
";
        let ParsedDomain::Keys(keys) = parse_domain(text).unwrap() else {
            panic!("expected keys");
        };
        assert_eq!(keys.keys(), &[(keys.cell(1, 4), 'K')]);
        assert_eq!(keys.doors(), &[(keys.cell(1, 2), 'K')]);
        assert_eq!(keys.gems(), &[(keys.cell(1, 1), 'g')]);
        assert_eq!(keys.start_prior().len(), 1);
    }

    #[test]
    fn chain_file() {
        let text = "\
chain: 4
moves: right
goals: 3
starts: 0 1 2
";
        let ParsedDomain::Chain(chain) = parse_domain(text).unwrap() else {
            panic!("expected chain");
        };
        assert_eq!(chain.goal_count(), 1);
        assert_eq!(chain.end_states(GoalId(0)), vec![3]);
        assert_eq!(chain.start_prior().len(), 3);
    }

    #[test]
    fn blocks_file_with_explicit_starts() {
        let text = "\
letters: a b
slots: 3
words: ab ba
start: a|b|
start: b|a|
";
        let ParsedDomain::Blocks(blocks) = parse_domain(text).unwrap() else {
            panic!("expected blocks");
        };
        assert_eq!(blocks.goal_count(), 2);
        assert_eq!(blocks.start_prior().len(), 2);
    }

    #[test]
    fn blocks_file_uniform_scatter() {
        let text = "letters: a b\nslots: 3\nwords: ab\n";
        let ParsedDomain::Blocks(blocks) = parse_domain(text).unwrap() else {
            panic!("expected blocks");
        };
        assert_eq!(blocks.start_prior().len(), 6);
    }

    #[test]
    fn error_positions_are_reported() {
        let unknown = parse_domain("###\n#?#\n###\n").unwrap_err();
        assert_eq!((unknown.line, unknown.col), (2, 2));

        let ragged = parse_domain("####\n#r.#\n###\n").unwrap_err();
        assert_eq!(ragged.line, 3);

        let dup = parse_domain("####\n#rr#\n####\n").unwrap_err();
        assert_eq!((dup.line, dup.col), (2, 3));
        assert!(dup.message.contains("duplicate gem"));
    }

    #[test]
    fn door_validation() {
        let no_key = "\
####
#g.#
#@.#
####

[K] 1,2
";
        let err = parse_domain(no_key).unwrap_err();
        assert!(err.message.contains("no matching key"), "{err}");

        let on_wall = "\
####
#gK#
#@.#
####

[K] 0,0
";
        let err = parse_domain(on_wall).unwrap_err();
        assert!(err.message.contains("plain floor"), "{err}");
    }

    #[test]
    fn keys_without_entryway_start_anywhere() {
        let text = "\
####
#gK#
#..#
####

[K] 2,1
";
        let ParsedDomain::Keys(d) = parse_domain(text).unwrap() else {
            panic!("keys map should parse as a keys domain");
        };
        // Plain floor only: not the gem, key, or door cells. That leaves the
        // single cell (2,2).
        let support = d.start_prior().support();
        assert_eq!(support.len(), 1);
        assert_eq!(support[0].0.cell, 2 * 4 + 2);
        assert_eq!(support[0].0.keys, 0);
        assert_eq!(support[0].0.doors, 0);
    }

    #[test]
    fn walled_off_gem_is_rejected() {
        let text = "\
#####
#g#.#
###@#
#####
";
        let err = parse_domain(text).unwrap_err();
        assert!(err.message.contains("walled off"), "{err}");
    }

    #[test]
    fn mask_files() {
        let mask = parse_mask("// excluded cells\n1,2\n3,4\n").unwrap();
        assert_eq!(mask, vec![(1, 2), (3, 4)]);
        assert!(parse_mask("nope\n").is_err());
    }
}
