//! Environment rules.
//!
//! Coordinates have their origin at the top-left cell: `x` grows to the
//! right, `y` grows downward, so `UP` decreases `y`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub x: usize,
    pub y: usize,
}

impl Coord {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    /// All moves, in the fixed tie-break order.
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Up => "UP",
            Action::Down => "DOWN",
            Action::Left => "LEFT",
            Action::Right => "RIGHT",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Action::ALL.into_iter().find(|a| a.as_str() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrialOutcome {
    Success,
    MaxStepsExceeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridState {
    pub size: usize,
    pub agent: Coord,
    pub goal: Coord,
}

impl GridState {
    /// Validates bounds and size; `agent == goal` is allowed here because
    /// it is the terminal state of a successful trial.
    pub fn new(size: usize, agent: Coord, goal: Coord) -> Result<Self, GridError> {
        if size < 2 {
            return Err(GridError::InvalidConfiguration(format!(
                "grid size {size} is below 2"
            )));
        }
        for (name, c) in [("agent", agent), ("goal", goal)] {
            if c.x >= size || c.y >= size {
                return Err(GridError::InvalidState(format!(
                    "{name} {c} outside a {size}x{size} grid"
                )));
            }
        }
        Ok(Self { size, agent, goal })
    }

    pub fn distance(&self) -> usize {
        manhattan(self.agent, self.goal)
    }

    pub fn at_goal(&self) -> bool {
        self.agent == self.goal
    }

    /// Every state with `agent != goal` on an `size × size` grid, goal-major
    /// in row-major cell order.
    pub fn enumerate_open(size: usize) -> Vec<GridState> {
        let cells: Vec<Coord> = (0..size)
            .flat_map(|y| (0..size).map(move |x| Coord::new(x, y)))
            .collect();
        let mut out = Vec::with_capacity(cells.len() * (cells.len() - 1));
        for &goal in &cells {
            for &agent in &cells {
                if agent != goal {
                    out.push(GridState { size, agent, goal });
                }
            }
        }
        out
    }
}

pub fn manhattan(a: Coord, b: Coord) -> usize {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
}

/// Step budget for a grid of side `size`.
pub fn max_steps(size: usize) -> usize {
    2 * size
}

/// Samples a starting state: the goal uniformly over all cells, then the
/// agent uniformly over the cells at Manhattan distance two or more.
pub fn new_trial<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Result<GridState, GridError> {
    if size < 3 {
        return Err(GridError::InvalidConfiguration(format!(
            "grid size {size} cannot place the agent two steps from the goal"
        )));
    }
    let goal = Coord::new(rng.random_range(0..size), rng.random_range(0..size));
    loop {
        let agent = Coord::new(rng.random_range(0..size), rng.random_range(0..size));
        if manhattan(agent, goal) >= 2 {
            return Ok(GridState { size, agent, goal });
        }
    }
}

/// Moves the agent; a move off the grid leaves the state unchanged and
/// reports `moved = false`.
pub fn apply_action(state: GridState, action: Action) -> (GridState, bool) {
    let (dx, dy) = action.delta();
    let nx = state.agent.x as isize + dx;
    let ny = state.agent.y as isize + dy;
    let limit = state.size as isize;
    if nx < 0 || ny < 0 || nx >= limit || ny >= limit {
        return (state, false);
    }
    let next = GridState {
        agent: Coord::new(nx as usize, ny as usize),
        ..state
    };
    (next, true)
}

/// An action is correct iff it strictly reduces the agent–goal distance.
pub fn is_correct(state: GridState, action: Action) -> Result<bool, GridError> {
    if state.at_goal() {
        return Err(GridError::InvalidState(
            "agent already occupies the goal".into(),
        ));
    }
    let (next, _) = apply_action(state, action);
    Ok(next.distance() < state.distance())
}
