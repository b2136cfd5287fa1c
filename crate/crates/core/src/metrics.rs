//! Behavioural metrics and policy maps over completed trials.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Action, TrialOutcome};
use crate::harness::TrialRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("metric undefined: {0}")]
    Undefined(String),
    #[error("metric not applicable: {0}")]
    Inapplicable(String),
}

pub fn success_rate(trials: &[TrialRecord]) -> Result<f64, MetricError> {
    if trials.is_empty() {
        return Err(MetricError::Undefined("no usable trials".into()));
    }
    let wins = trials.iter().filter(|t| t.outcome == TrialOutcome::Success).count();
    Ok(wins as f64 / trials.len() as f64)
}

/// Initial distance over steps taken, for a successful trial.
pub fn efficiency(trial: &TrialRecord) -> Result<f64, MetricError> {
    if trial.outcome != TrialOutcome::Success {
        return Err(MetricError::Inapplicable(format!("{} did not succeed", trial.trial_id)));
    }
    Ok(trial.initial_distance as f64 / trial.steps.len() as f64)
}

/// Final over initial distance, for a failed trial.
pub fn final_distance_ratio(trial: &TrialRecord) -> Result<f64, MetricError> {
    if trial.outcome != TrialOutcome::MaxStepsExceeded {
        return Err(MetricError::Inapplicable(format!("{} succeeded", trial.trial_id)));
    }
    Ok(trial.final_distance as f64 / trial.initial_distance as f64)
}

/// One aggregated metric for one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub condition: String,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation over √n; NaN when n < 2.
    pub stderr: f64,
    pub n: usize,
}

pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `success_rate`, `efficiency` and `final_distance_ratio` rows for one
/// condition. The two conditional metrics are omitted when no trial
/// qualifies.
pub fn summarize(condition: &str, trials: &[TrialRecord]) -> Result<Vec<MetricRow>, MetricError> {
    success_rate(trials)?;
    let row = |metric: &str, values: Vec<f64>| {
        let (mean, stderr) = mean_stderr(&values);
        MetricRow {
            condition: condition.to_string(),
            metric: metric.to_string(),
            mean,
            stderr,
            n: values.len(),
        }
    };
    let wins: Vec<f64> = trials
        .iter()
        .map(|t| f64::from(u8::from(t.outcome == TrialOutcome::Success)))
        .collect();
    let effs: Vec<f64> = trials.iter().filter_map(|t| efficiency(t).ok()).collect();
    let ratios: Vec<f64> = trials.iter().filter_map(|t| final_distance_ratio(t).ok()).collect();
    let mut rows = vec![row("success_rate", wins)];
    if !effs.is_empty() {
        rows.push(row("efficiency", effs));
    }
    if !ratios.is_empty() {
        rows.push(row("final_distance_ratio", ratios));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCell {
    pub dx: i64,
    pub dy: i64,
    /// Per-action visit counts in `UP, DOWN, LEFT, RIGHT` order.
    pub counts: [usize; 4],
}

impl PolicyCell {
    pub fn visits(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Most frequent action, ties going to the earlier action.
    pub fn modal_action(&self) -> Option<Action> {
        if self.visits() == 0 {
            return None;
        }
        let best = (0..4).fold(0, |b, i| if self.counts[i] > self.counts[b] { i } else { b });
        Some(Action::ALL[best])
    }

    pub fn frequency(&self) -> Option<f64> {
        self.modal_action()
            .map(|a| self.counts[a.index()] as f64 / self.visits() as f64)
    }
}

/// Action counts over the `(2N−1)²` lattice of agent-minus-goal offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyMap {
    pub grid_size: usize,
    /// Row-major over `dy` then `dx`, both ascending; `(0, 0)` included
    /// and always empty.
    pub cells: Vec<PolicyCell>,
}

impl PolicyMap {
    pub fn empty(grid_size: usize) -> Self {
        let r = grid_size as i64 - 1;
        let cells = (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| PolicyCell { dx, dy, counts: [0; 4] }))
            .collect();
        Self { grid_size, cells }
    }

    pub fn radius(&self) -> i64 {
        self.grid_size as i64 - 1
    }

    fn index(&self, dx: i64, dy: i64) -> Option<usize> {
        let r = self.radius();
        if dx.abs() > r || dy.abs() > r {
            return None;
        }
        let side = 2 * r + 1;
        Some(((dy + r) * side + (dx + r)) as usize)
    }

    pub fn cell(&self, dx: i64, dy: i64) -> Option<&PolicyCell> {
        self.index(dx, dy).map(|i| &self.cells[i])
    }

    pub fn total_visits(&self) -> usize {
        self.cells.iter().map(PolicyCell::visits).sum()
    }

    /// Cells with `|dx|, |dy| ≤ radius`.
    pub fn window(&self, radius: i64) -> Vec<&PolicyCell> {
        self.cells
            .iter()
            .filter(|c| c.dx.abs() <= radius && c.dy.abs() <= radius)
            .collect()
    }
}

/// Aggregates every valid-action step by its agent-minus-goal offset.
/// INVALID steps are skipped.
pub fn policy_map<'a, I>(grid_size: usize, trials: I) -> PolicyMap
where
    I: IntoIterator<Item = &'a TrialRecord>,
{
    let mut map = PolicyMap::empty(grid_size);
    for trial in trials {
        for step in &trial.steps {
            let Some(action) = step.action.action() else { continue };
            let s = step.state_before;
            let dx = s.agent.x as i64 - s.goal.x as i64;
            let dy = s.agent.y as i64 - s.goal.y as i64;
            if let Some(i) = map.index(dx, dy) {
                map.cells[i].counts[action.index()] += 1;
            }
        }
    }
    map
}
