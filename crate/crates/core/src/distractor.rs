//! Turns a reduction trace into per-step confidence deltas, distractor
//! records and per-sample statistics.
//!
//! With `s_0` the original score and `s_i` the score after step `i`, the
//! signed step delta is `s_i - s_{i-1}`. A step is significant when
//! `|s_i - s_{i-1}| >= tau`; its removed tokens then form a distractor record.

use serde::{Deserialize, Serialize};

use crate::ddmin::ReductionTrace;
use crate::tokens::Token;

/// Tolerance on the `>= tau` test. In binary, `0.9 - 0.8` is slightly below
/// `0.1`.
pub const SIGNIFICANCE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Threshold(f64);

impl Threshold {
    pub const DEFAULT: Threshold = Threshold(0.1);

    pub fn new(tau: f64) -> Result<Self, String> {
        if tau > 0.0 && tau < 1.0 {
            Ok(Threshold(tau))
        } else {
            Err(format!("threshold {tau} must lie strictly between 0 and 1"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_met_by(self, magnitude: f64) -> bool {
        magnitude >= self.0 - SIGNIFICANCE_EPSILON
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::DEFAULT
    }
}

impl TryFrom<f64> for Threshold {
    type Error = String;

    fn try_from(tau: f64) -> Result<Self, Self::Error> {
        Threshold::new(tau)
    }
}

impl From<Threshold> for f64 {
    fn from(t: Threshold) -> f64 {
        t.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increase,
    Decrease,
    Flat,
}

impl Direction {
    fn of(delta: f64) -> Self {
        if delta > 0.0 {
            Direction::Increase
        } else if delta < 0.0 {
            Direction::Decrease
        } else {
            Direction::Flat
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDelta {
    pub step_index: usize,
    pub delta: f64,
    pub magnitude: f64,
    pub significant: bool,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistractorRecord {
    pub source_id: String,
    pub step_index: usize,
    pub tokens: Vec<Token>,
    pub direction: Direction,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub source_id: String,
    pub n_steps: usize,
    /// Mean of `|Δs_i|` over all steps.
    pub avg_change: f64,
    /// Max of `|Δs_i|` over all steps.
    pub max_change: f64,
    /// Largest positive step delta, 0 if none.
    pub max_increase: f64,
    /// Magnitude of the most negative step delta, 0 if none.
    pub max_decrease: f64,
    pub has_pi: bool,
    pub has_pd: bool,
    /// Signed `s_final - s_0`.
    pub end_to_end_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub deltas: Vec<StepDelta>,
    pub records: Vec<DistractorRecord>,
    pub stats: SampleStats,
}

pub fn analyze(trace: &ReductionTrace, threshold: Threshold) -> Analysis {
    let scores = trace.scores();
    let deltas: Vec<StepDelta> = trace
        .steps
        .iter()
        .zip(scores.windows(2))
        .map(|(step, pair)| {
            let delta = pair[1] - pair[0];
            let magnitude = delta.abs();
            StepDelta {
                step_index: step.step_index,
                delta,
                magnitude,
                significant: threshold.is_met_by(magnitude),
                direction: Direction::of(delta),
            }
        })
        .collect();

    let records: Vec<DistractorRecord> = trace
        .steps
        .iter()
        .zip(&deltas)
        .filter(|(step, d)| d.significant && !step.removed_tokens.is_empty())
        .map(|(step, d)| DistractorRecord {
            source_id: trace.source_id.clone(),
            step_index: step.step_index,
            tokens: step.removed_tokens.clone(),
            direction: d.direction,
            magnitude: d.magnitude,
        })
        .collect();

    let n = deltas.len();
    let avg_change = if n == 0 {
        0.0
    } else {
        deltas.iter().map(|d| d.magnitude).sum::<f64>() / n as f64
    };
    let max_change = deltas.iter().map(|d| d.magnitude).fold(0.0, f64::max);
    let max_increase = deltas.iter().map(|d| d.delta).fold(0.0, f64::max);
    let max_decrease = deltas.iter().map(|d| -d.delta).fold(0.0, f64::max);
    let significant = |dir| deltas.iter().any(|d| d.significant && d.direction == dir);

    let stats = SampleStats {
        source_id: trace.source_id.clone(),
        n_steps: n,
        avg_change,
        max_change,
        max_increase,
        max_decrease,
        has_pi: significant(Direction::Increase),
        has_pd: significant(Direction::Decrease),
        end_to_end_delta: scores[scores.len() - 1] - scores[0],
    };
    Analysis {
        deltas,
        records,
        stats,
    }
}
