//! The six text encodings of a world state and their parsers.
//!
//! Every encoding carries the same information (grid size, agent cell, goal
//! cell) and round-trips exactly through [`decode`]. Lines are separated by
//! a single `\n` with no trailing newline.
//!
//! | encoding             | shape                                                        |
//! |----------------------|--------------------------------------------------------------|
//! | `JSON_COORDS`        | `{"grid_size": 5, "agent": {"x": 2, "y": 3}, "goal": {...}}` |
//! | `CHESS_NOTATION`     | `Grid: 5x5 (files a-e, ranks 1-5). Agent: c2. Goal: e5.`     |
//! | `SYMBOL_GRID`        | `Grid (top row first):` + N rows over `.`, `A`, `G`          |
//! | `WORD_GRID`          | `Grid (top row first):` + N rows of `Empty`/`Agent`/`Goal`   |
//! | `ROW_DESCRIPTION`    | `The grid has N rows and N columns.` + `Row k: ...` lines    |
//! | `COLUMN_DESCRIPTION` | same preamble + `Column j: ...` lines                        |
//!
//! Chess ranks count from the bottom row (rank 1 = `y = N - 1`); row and
//! column numbers in the prose encodings are 1-based from the top/left.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Coord, GridState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SirError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid world state: {0}")]
    Semantic(String),
    #[error("state cannot be encoded: {0}")]
    Unrepresentable(String),
    #[error("unknown representation {0:?}")]
    UnknownType(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SirType {
    JsonCoords,
    ChessNotation,
    SymbolGrid,
    WordGrid,
    RowDescription,
    ColumnDescription,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SirClass {
    Cartesian,
    Topographic,
    Textual,
}

impl SirClass {
    pub const ALL: [SirClass; 3] = [SirClass::Cartesian, SirClass::Topographic, SirClass::Textual];

    pub fn as_str(self) -> &'static str {
        match self {
            SirClass::Cartesian => "cartesian",
            SirClass::Topographic => "topographic",
            SirClass::Textual => "textual",
        }
    }
}

impl SirType {
    pub const ALL: [SirType; 6] = [
        SirType::JsonCoords,
        SirType::ChessNotation,
        SirType::SymbolGrid,
        SirType::WordGrid,
        SirType::RowDescription,
        SirType::ColumnDescription,
    ];

    pub fn class(self) -> SirClass {
        sir_class(self)
    }

    /// Canonical upper-case name, as used in config and record files.
    pub fn name(self) -> &'static str {
        match self {
            SirType::JsonCoords => "JSON_COORDS",
            SirType::ChessNotation => "CHESS_NOTATION",
            SirType::SymbolGrid => "SYMBOL_GRID",
            SirType::WordGrid => "WORD_GRID",
            SirType::RowDescription => "ROW_DESCRIPTION",
            SirType::ColumnDescription => "COLUMN_DESCRIPTION",
        }
    }

    /// Lower-case name for file and trial identifiers.
    pub fn slug(self) -> &'static str {
        match self {
            SirType::JsonCoords => "json_coords",
            SirType::ChessNotation => "chess_notation",
            SirType::SymbolGrid => "symbol_grid",
            SirType::WordGrid => "word_grid",
            SirType::RowDescription => "row_description",
            SirType::ColumnDescription => "column_description",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// The other encoding of the same class.
    pub fn sibling(self) -> SirType {
        SirType::ALL
            .into_iter()
            .find(|&t| t != self && t.class() == self.class())
            .expect("every class has two members")
    }
}

impl fmt::Display for SirType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SirType {
    type Err = SirError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase().replace('-', "_");
        let found = match lower.as_str() {
            "json" => Some(SirType::JsonCoords),
            "chess" => Some(SirType::ChessNotation),
            "symbol" => Some(SirType::SymbolGrid),
            "word" => Some(SirType::WordGrid),
            "row" => Some(SirType::RowDescription),
            "column" => Some(SirType::ColumnDescription),
            other => SirType::ALL.into_iter().find(|t| t.slug() == other),
        };
        found.ok_or_else(|| SirError::UnknownType(s.to_string()))
    }
}

pub fn sir_class(sir: SirType) -> SirClass {
    match sir {
        SirType::JsonCoords | SirType::ChessNotation => SirClass::Cartesian,
        SirType::SymbolGrid | SirType::WordGrid => SirClass::Topographic,
        SirType::RowDescription | SirType::ColumnDescription => SirClass::Textual,
    }
}

const GRID_PREAMBLE: &str = "Grid (top row first):";
const MAX_CHESS_FILES: usize = 26;

/// Renders `state` in the canonical text for `sir`.
pub fn encode(state: &GridState, sir: SirType) -> Result<String, SirError> {
    if state.at_goal() {
        return Err(SirError::Unrepresentable(
            "agent and goal share a cell".into(),
        ));
    }
    let n = state.size;
    let (a, g) = (state.agent, state.goal);
    let text = match sir {
        SirType::JsonCoords => format!(
            "{{\"grid_size\": {n}, \"agent\": {{\"x\": {}, \"y\": {}}}, \"goal\": {{\"x\": {}, \"y\": {}}}}}",
            a.x, a.y, g.x, g.y
        ),
        SirType::ChessNotation => {
            if n > MAX_CHESS_FILES {
                return Err(SirError::Unrepresentable(format!(
                    "chess notation supports at most {MAX_CHESS_FILES} files"
                )));
            }
            format!(
                "Grid: {n}x{n} (files a-{}, ranks 1-{n}). Agent: {}. Goal: {}.",
                file_letter(n - 1),
                chess_square(a, n),
                chess_square(g, n)
            )
        }
        SirType::SymbolGrid => {
            let mut lines = vec![GRID_PREAMBLE.to_string()];
            for y in 0..n {
                lines.push(
                    (0..n)
                        .map(|x| match cell_content(state, Coord::new(x, y)) {
                            Cell::Agent => 'A',
                            Cell::Goal => 'G',
                            Cell::Empty => '.',
                        })
                        .collect(),
                );
            }
            lines.join("\n")
        }
        SirType::WordGrid => {
            let mut lines = vec![GRID_PREAMBLE.to_string()];
            for y in 0..n {
                let words: Vec<&str> = (0..n)
                    .map(|x| cell_content(state, Coord::new(x, y)).word())
                    .collect();
                lines.push(words.join(" "));
            }
            lines.join("\n")
        }
        SirType::RowDescription | SirType::ColumnDescription => {
            let by_row = sir == SirType::RowDescription;
            let (line_word, pos_word) = if by_row { ("Row", "column") } else { ("Column", "row") };
            let mut lines = vec![format!("The grid has {n} rows and {n} columns.")];
            let line_of = |c: Coord| if by_row { (c.y, c.x) } else { (c.x, c.y) };
            for k in 0..n {
                let mut clauses = Vec::new();
                for (label, c) in [("Agent", a), ("Goal", g)] {
                    let (line, pos) = line_of(c);
                    if line == k {
                        clauses.push(format!("the {label} is in {pos_word} {}", pos + 1));
                    }
                }
                let body = if clauses.is_empty() { "empty".to_string() } else { clauses.join(" and ") };
                lines.push(format!("{line_word} {}: {body}", k + 1));
            }
            lines.join("\n")
        }
    };
    Ok(text)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cell {
    Empty,
    Agent,
    Goal,
}

impl Cell {
    fn word(self) -> &'static str {
        match self {
            Cell::Empty => "Empty",
            Cell::Agent => "Agent",
            Cell::Goal => "Goal",
        }
    }
}

fn cell_content(state: &GridState, c: Coord) -> Cell {
    if c == state.agent {
        Cell::Agent
    } else if c == state.goal {
        Cell::Goal
    } else {
        Cell::Empty
    }
}

fn file_letter(x: usize) -> char {
    (b'a' + x as u8) as char
}

fn chess_square(c: Coord, n: usize) -> String {
    format!("{}{}", file_letter(c.x), n - c.y)
}

/// Parses canonical text for `sir` back into a state.
pub fn decode(text: &str, sir: SirType) -> Result<GridState, SirError> {
    let text = text.strip_suffix('\n').unwrap_or(text);
    let (size, agent, goal) = match sir {
        SirType::JsonCoords => decode_json(text)?,
        SirType::ChessNotation => decode_chess(text)?,
        SirType::SymbolGrid | SirType::WordGrid => decode_grid(text, sir == SirType::WordGrid)?,
        SirType::RowDescription | SirType::ColumnDescription => {
            decode_prose(text, sir == SirType::RowDescription)?
        }
    };
    finish(size, agent, goal)
}

fn finish(size: usize, agent: Option<Coord>, goal: Option<Coord>) -> Result<GridState, SirError> {
    if size < 2 {
        return Err(SirError::Semantic(format!("grid size {size} is below 2")));
    }
    let agent = agent.ok_or_else(|| SirError::Semantic("no agent".into()))?;
    let goal = goal.ok_or_else(|| SirError::Semantic("no goal".into()))?;
    for (name, c) in [("agent", agent), ("goal", goal)] {
        if c.x >= size || c.y >= size {
            return Err(SirError::Semantic(format!(
                "{name} {c} is outside a {size}x{size} grid"
            )));
        }
    }
    if agent == goal {
        return Err(SirError::Semantic("agent and goal share a cell".into()));
    }
    Ok(GridState { size, agent, goal })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonPoint {
    x: usize,
    y: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonWorld {
    grid_size: usize,
    agent: JsonPoint,
    goal: JsonPoint,
}

fn decode_json(text: &str) -> Result<(usize, Option<Coord>, Option<Coord>), SirError> {
    let w: JsonWorld = serde_json::from_str(text).map_err(|e| SirError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok((
        w.grid_size,
        Some(Coord::new(w.agent.x, w.agent.y)),
        Some(Coord::new(w.goal.x, w.goal.y)),
    ))
}

/// Byte cursor over a single input with line/column error reporting.
struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn error(&self, message: impl Into<String>) -> SirError {
        let before = &self.text[..self.pos];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        SirError::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn expect(&mut self, lit: &str) -> Result<(), SirError> {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            Ok(())
        } else {
            // Point at the first byte that differs.
            let same = self.rest().bytes().zip(lit.bytes()).take_while(|(a, b)| a == b).count();
            let at = Cursor {
                text: self.text,
                pos: self.pos + same,
            };
            Err(at.error(format!("expected {lit:?}")))
        }
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<usize, SirError> {
        let digits = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            return Err(self.error("expected a number"));
        }
        let value = self.rest()[..digits]
            .parse()
            .map_err(|_| self.error("number out of range"))?;
        self.pos += digits;
        Ok(value)
    }

    fn letter(&mut self) -> Result<char, SirError> {
        match self.rest().chars().next() {
            Some(c) if c.is_ascii_lowercase() => {
                self.pos += 1;
                Ok(c)
            }
            _ => Err(self.error("expected a file letter a-z")),
        }
    }

    fn end(&self) -> Result<(), SirError> {
        if self.rest().is_empty() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing text"))
        }
    }
}

fn decode_chess(text: &str) -> Result<(usize, Option<Coord>, Option<Coord>), SirError> {
    let mut c = Cursor::new(text);
    c.expect("Grid: ")?;
    let n = c.number()?;
    c.expect("x")?;
    let n2 = c.number()?;
    if n != n2 {
        return Err(SirError::Semantic(format!("non-square grid {n}x{n2}")));
    }
    if !(2..=MAX_CHESS_FILES).contains(&n) {
        return Err(SirError::Semantic(format!("chess grid size {n} out of range")));
    }
    c.expect(" (files a-")?;
    let last = c.letter()?;
    if last != file_letter(n - 1) {
        return Err(SirError::Semantic(format!("file range a-{last} does not match size {n}")));
    }
    c.expect(", ranks 1-")?;
    if c.number()? != n {
        return Err(SirError::Semantic("rank range does not match size".into()));
    }
    c.expect("). Agent: ")?;
    let agent = chess_coord(&mut c, n)?;
    c.expect(". Goal: ")?;
    let goal = chess_coord(&mut c, n)?;
    c.expect(".")?;
    c.end()?;
    Ok((n, Some(agent), Some(goal)))
}

fn chess_coord(c: &mut Cursor<'_>, n: usize) -> Result<Coord, SirError> {
    let file = c.letter()?;
    let rank = c.number()?;
    let x = (file as u8 - b'a') as usize;
    if rank == 0 || rank > n || x >= n {
        return Err(SirError::Semantic(format!("square {file}{rank} is off the board")));
    }
    Ok(Coord::new(x, n - rank))
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> SirError {
    SirError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn place(slot: &mut Option<Coord>, c: Coord, what: &str) -> Result<(), SirError> {
    if slot.replace(c).is_some() {
        return Err(SirError::Semantic(format!("more than one {what}")));
    }
    Ok(())
}

fn decode_grid(text: &str, words: bool) -> Result<(usize, Option<Coord>, Option<Coord>), SirError> {
    let mut lines = text.split('\n');
    match lines.next() {
        Some(GRID_PREAMBLE) => {}
        _ => return Err(parse_error(1, 1, format!("expected {GRID_PREAMBLE:?}"))),
    }
    let rows: Vec<&str> = lines.collect();
    let n = rows.len();
    let (mut agent, mut goal) = (None, None);
    for (y, row) in rows.iter().enumerate() {
        let line = y + 2;
        let cells: Vec<(usize, &str)> = if words {
            let mut col = 1;
            row.split(' ')
                .map(|tok| {
                    let at = col;
                    col += tok.chars().count() + 1;
                    (at, tok)
                })
                .collect()
        } else {
            row.char_indices()
                .enumerate()
                .map(|(k, (i, c))| (k + 1, &row[i..i + c.len_utf8()]))
                .collect()
        };
        if cells.len() != n {
            return Err(parse_error(
                line,
                1,
                format!("row has {} cells, expected {n}", cells.len()),
            ));
        }
        for (x, (col, tok)) in cells.into_iter().enumerate() {
            let here = Coord::new(x, y);
            match (words, tok) {
                (false, ".") | (true, "Empty") => {}
                (false, "A") | (true, "Agent") => place(&mut agent, here, "agent")?,
                (false, "G") | (true, "Goal") => place(&mut goal, here, "goal")?,
                _ => return Err(parse_error(line, col, format!("unexpected cell {tok:?}"))),
            }
        }
    }
    Ok((n, agent, goal))
}

fn decode_prose(text: &str, by_row: bool) -> Result<(usize, Option<Coord>, Option<Coord>), SirError> {
    let mut lines = text.split('\n');
    let first = lines.next().unwrap_or("");
    let mut c = Cursor::new(first);
    c.expect("The grid has ")?;
    let n = c.number()?;
    c.expect(" rows and ")?;
    let m = c.number()?;
    c.expect(" columns.")?;
    c.end()?;
    if n != m {
        return Err(SirError::Semantic(format!("non-square grid {n}x{m}")));
    }
    let (line_word, pos_word) = if by_row { ("Row ", "column ") } else { ("Column ", "row ") };
    let body: Vec<&str> = lines.collect();
    if body.len() != n {
        return Err(parse_error(
            body.len().min(n) + 2,
            1,
            format!("expected {n} description lines, found {}", body.len()),
        ));
    }
    let (mut agent, mut goal) = (None, None);
    for (k, line) in body.iter().enumerate() {
        let located = |e: SirError| match e {
            SirError::Parse { column, message, .. } => SirError::Parse {
                line: k + 2,
                column,
                message,
            },
            other => other,
        };
        let mut c = Cursor::new(line);
        c.expect(line_word).map_err(located)?;
        let idx = c.number().map_err(located)?;
        if idx != k + 1 {
            return Err(located(c.error(format!("expected index {}", k + 1))));
        }
        c.expect(": ").map_err(located)?;
        if !c.eat("empty") {
            loop {
                c.expect("the ").map_err(located)?;
                let is_agent = if c.eat("Agent") {
                    true
                } else if c.eat("Goal") {
                    false
                } else {
                    return Err(located(c.error("expected \"Agent\" or \"Goal\"")));
                };
                c.expect(" is in ").map_err(located)?;
                c.expect(pos_word).map_err(located)?;
                let pos = c.number().map_err(located)?;
                if pos == 0 || pos > n {
                    return Err(SirError::Semantic(format!("{pos_word}{pos} out of range")));
                }
                let here = if by_row {
                    Coord::new(pos - 1, k)
                } else {
                    Coord::new(k, pos - 1)
                };
                if is_agent {
                    place(&mut agent, here, "agent")?;
                } else {
                    place(&mut goal, here, "goal")?;
                }
                if !c.eat(" and ") {
                    break;
                }
            }
        }
        c.end().map_err(located)?;
    }
    Ok((n, agent, goal))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> GridState {
        GridState::new(5, Coord::new(2, 3), Coord::new(4, 0)).unwrap()
    }

    #[test]
    fn json_example() {
        assert_eq!(
            encode(&example(), SirType::JsonCoords).unwrap(),
            r#"{"grid_size": 5, "agent": {"x": 2, "y": 3}, "goal": {"x": 4, "y": 0}}"#
        );
    }

    #[test]
    fn chess_example() {
        assert_eq!(
            encode(&example(), SirType::ChessNotation).unwrap(),
            "Grid: 5x5 (files a-e, ranks 1-5). Agent: c2. Goal: e5."
        );
    }

    #[test]
    fn symbol_grid_example() {
        let text = encode(&example(), SirType::SymbolGrid).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, ["Grid (top row first):", "....G", ".....", ".....", "..A..", "....."]);
    }

    #[test]
    fn word_grid_example() {
        let text = encode(&example(), SirType::WordGrid).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "Empty Empty Empty Empty Goal");
        assert_eq!(text.lines().nth(4).unwrap(), "Empty Empty Agent Empty Empty");
    }

    #[test]
    fn prose_examples() {
        let rows = encode(&example(), SirType::RowDescription).unwrap();
        assert_eq!(
            rows,
            "The grid has 5 rows and 5 columns.\nRow 1: the Goal is in column 5\nRow 2: empty\nRow 3: empty\nRow 4: the Agent is in column 3\nRow 5: empty"
        );
        let cols = encode(&example(), SirType::ColumnDescription).unwrap();
        assert_eq!(
            cols,
            "The grid has 5 rows and 5 columns.\nColumn 1: empty\nColumn 2: empty\nColumn 3: the Agent is in row 4\nColumn 4: empty\nColumn 5: the Goal is in row 1"
        );
        let same_row = GridState::new(5, Coord::new(4, 1), Coord::new(0, 1)).unwrap();
        let text = encode(&same_row, SirType::RowDescription).unwrap();
        assert_eq!(text.lines().nth(2).unwrap(), "Row 2: the Agent is in column 5 and the Goal is in column 1");
        assert_eq!(decode(&text, SirType::RowDescription).unwrap(), same_row);
    }

    #[test]
    fn classes() {
        assert_eq!(sir_class(SirType::JsonCoords), SirClass::Cartesian);
        assert_eq!(sir_class(SirType::WordGrid), SirClass::Topographic);
        assert_eq!(sir_class(SirType::RowDescription), SirClass::Textual);
        for class in SirClass::ALL {
            assert_eq!(SirType::ALL.iter().filter(|t| t.class() == class).count(), 2);
        }
        assert_eq!(SirType::ChessNotation.sibling(), SirType::JsonCoords);
    }

    #[test]
    fn json_out_of_range() {
        let err = decode(
            r#"{"grid_size": 5, "agent": {"x": 5, "y": 0}, "goal": {"x": 1, "y": 1}}"#,
            SirType::JsonCoords,
        )
        .unwrap_err();
        assert!(matches!(err, SirError::Semantic(_)), "{err}");
    }

    #[test]
    fn json_malformed_reports_position() {
        let err = decode(r#"{"grid_size": 5, "agent": "#, SirType::JsonCoords).unwrap_err();
        assert!(matches!(err, SirError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn symbol_grid_duplicate_agent() {
        let text = "Grid (top row first):\nA...G\n.....\n.....\n..A..\n.....";
        assert!(matches!(decode(text, SirType::SymbolGrid), Err(SirError::Semantic(_))));
    }

    #[test]
    fn symbol_grid_missing_goal() {
        let text = "Grid (top row first):\nA....\n.....\n.....\n.....\n.....";
        assert!(matches!(decode(text, SirType::SymbolGrid), Err(SirError::Semantic(_))));
    }

    #[test]
    fn symbol_grid_bad_cell_position() {
        let text = "Grid (top row first):\n....G\n..x..\n.....\n..A..\n.....";
        assert_eq!(
            decode(text, SirType::SymbolGrid).unwrap_err(),
            SirError::Parse { line: 3, column: 3, message: "unexpected cell \"x\"".into() }
        );
    }

    #[test]
    fn chess_malformed() {
        let err = decode("Grid: 5x5 (files a-e, ranks 1-5). Agent c2. Goal: e5.", SirType::ChessNotation)
            .unwrap_err();
        assert!(matches!(err, SirError::Parse { line: 1, column: 40, .. }), "{err}");
        let err = decode("Grid: 5x5 (files a-e, ranks 1-5). Agent: f2. Goal: e5.", SirType::ChessNotation)
            .unwrap_err();
        assert!(matches!(err, SirError::Semantic(_)));
    }

    #[test]
    fn prose_duplicate_goal() {
        let text = "The grid has 3 rows and 3 columns.\nRow 1: the Goal is in column 1\nRow 2: the Agent is in column 2\nRow 3: the Goal is in column 3";
        assert!(matches!(decode(text, SirType::RowDescription), Err(SirError::Semantic(_))));
    }

    #[test]
    fn terminal_state_is_unrepresentable() {
        let s = GridState::new(5, Coord::new(1, 1), Coord::new(1, 1)).unwrap();
        assert!(matches!(encode(&s, SirType::SymbolGrid), Err(SirError::Unrepresentable(_))));
    }

    #[test]
    fn parse_names() {
        assert_eq!("JSON_COORDS".parse::<SirType>().unwrap(), SirType::JsonCoords);
        assert_eq!("word".parse::<SirType>().unwrap(), SirType::WordGrid);
        assert_eq!("column-description".parse::<SirType>().unwrap(), SirType::ColumnDescription);
        assert!("hex".parse::<SirType>().is_err());
    }
}
