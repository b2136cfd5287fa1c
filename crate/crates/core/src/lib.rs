//! Grid-world spatial orientation task.
//!
//! An agent and a goal sit on an `N × N` grid; at each step a decision-maker
//! sees the world state rendered in one of six text encodings and replies
//! with one of four moves. This crate holds the environment rules, the text
//! codecs, the agents (remote chat endpoint and scripted baselines), the
//! trial/experiment harness and the behavioral metrics computed over
//! persisted trial records.

pub mod agents;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod questions;
pub mod sir;

pub use grid::{Action, Coord, GridError, GridState, TrialOutcome};
pub use sir::{SirClass, SirError, SirType};
