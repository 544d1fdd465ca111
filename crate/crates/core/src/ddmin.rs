//! Delta debugging over token sequences.
//!
//! The predicate is "the model still predicts the original label". Every
//! accepted candidate becomes a [`ReductionStep`] carrying the model's
//! prediction on the surviving tokens.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, ModelHandle, Prediction, QueryCache};
use crate::tokens::{Program, Token};

/// Per-sample cap on candidate evaluations.
pub const DEFAULT_QUERY_BUDGET: u64 = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceStatus {
    Complete,
    BudgetExhausted,
    AdapterFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    /// 1-based.
    pub step_index: usize,
    /// Tokens deleted by this step, in program order.
    pub removed_tokens: Vec<Token>,
    /// Original indices of the tokens still present after this step.
    pub surviving_token_indices: Vec<usize>,
    pub prediction: Prediction,
    /// Number of chunks the program was split into when the step was found.
    pub granularity: usize,
    /// Candidate evaluations since the previous accepted step.
    pub queries_spent: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub source_id: String,
    pub original_program: Program,
    pub original_prediction: Prediction,
    pub steps: Vec<ReductionStep>,
    pub final_is_one_minimal: bool,
    /// Candidate evaluations, cache hits included. The query on the original
    /// program is not counted.
    pub total_queries: u64,
    pub status: TraceStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReductionTrace {
    pub fn final_indices(&self) -> Vec<usize> {
        match self.steps.last() {
            Some(step) => step.surviving_token_indices.clone(),
            None => self
                .original_program
                .tokens
                .iter()
                .map(|t| t.index)
                .collect(),
        }
    }

    pub fn final_program(&self) -> Program {
        self.original_program.retain_indices(&self.final_indices())
    }

    /// `[s_0, s_1, ..., s_n]`: the original score followed by each step's.
    pub fn scores(&self) -> Vec<f64> {
        std::iter::once(self.original_prediction.score)
            .chain(self.steps.iter().map(|s| s.prediction.score))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.status == TraceStatus::Complete
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReduceError {
    #[error("cannot reduce an empty program")]
    EmptyProgram,
    #[error("trace status is {0:?}; only complete traces can be checked")]
    Incomplete(TraceStatus),
    #[error(transparent)]
    Query(#[from] ModelError),
}

enum Halt {
    Budget(String),
    Adapter(String),
}

struct Evaluator<'a> {
    model: &'a mut ModelHandle,
    cache: &'a QueryCache,
    budget: Option<u64>,
    queries: u64,
}

impl Evaluator<'_> {
    fn evaluate(&mut self, candidate: &Program) -> Result<Prediction, Halt> {
        if let Some(budget) = self.budget {
            if self.queries >= budget {
                return Err(Halt::Budget(format!("query budget of {budget} exhausted")));
            }
        }
        self.queries += 1;
        match self.model.query(candidate, self.cache) {
            Ok(p) => Ok(p),
            Err(e @ ModelError::BudgetExhausted { .. }) => Err(Halt::Budget(e.to_string())),
            Err(e) => Err(Halt::Adapter(e.to_string())),
        }
    }
}

/// Splits `0..len` into `n` contiguous, non-empty, near-equal chunks.
fn chunk_bounds(len: usize, n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).map(move |i| (i * len / n, (i + 1) * len / n))
}

/// Reduces `program` to a 1-minimal subsequence on which the model predicts
/// the same label, recording each accepted step.
///
/// Candidates at granularity `n` are the `n` chunks (left to right), then the
/// `n` complements (left to right); the first candidate keeping the label
/// wins. A chunk win restarts at granularity 2, a complement win continues at
/// `max(n - 1, 2)`. With no win the granularity doubles, capped at the
/// current length; at single-token granularity with no win the result is
/// 1-minimal.
pub fn reduce(
    program: &Program,
    model: &mut ModelHandle,
    cache: &QueryCache,
    budget: Option<u64>,
) -> Result<ReductionTrace, ReduceError> {
    if program.is_empty() {
        return Err(ReduceError::EmptyProgram);
    }
    let original_prediction = model.query(program, cache)?;
    let target = original_prediction.label.clone();

    let mut ev = Evaluator {
        model,
        cache,
        budget,
        queries: 0,
    };
    // positions into program.tokens
    let mut current: Vec<usize> = (0..program.len()).collect();
    let mut granularity = 2usize;
    let mut steps: Vec<ReductionStep> = Vec::new();
    let mut queries_at_last_step = 0u64;

    let outcome: Result<(), Halt> = 'search: loop {
        let len = current.len();
        if len < 2 {
            break Ok(());
        }
        granularity = granularity.min(len);
        let bounds: Vec<(usize, usize)> = chunk_bounds(len, granularity).collect();

        let mut accepted: Option<(Vec<usize>, Prediction, usize)> = None;
        for &(lo, hi) in &bounds {
            let candidate = current[lo..hi].to_vec();
            match ev.evaluate(&program.select(candidate.iter().copied())) {
                Ok(p) if p.label == target => {
                    accepted = Some((candidate, p, 2));
                    break;
                }
                Ok(_) => {}
                Err(halt) => break 'search Err(halt),
            }
        }
        // at granularity 2 each complement equals the other chunk
        if accepted.is_none() && granularity > 2 {
            for &(lo, hi) in &bounds {
                let candidate: Vec<usize> = current[..lo]
                    .iter()
                    .chain(&current[hi..])
                    .copied()
                    .collect();
                match ev.evaluate(&program.select(candidate.iter().copied())) {
                    Ok(p) if p.label == target => {
                        accepted = Some((candidate, p, (granularity - 1).max(2)));
                        break;
                    }
                    Ok(_) => {}
                    Err(halt) => break 'search Err(halt),
                }
            }
        }

        match accepted {
            Some((candidate, prediction, next_granularity)) => {
                let removed_tokens = {
                    let mut keep = candidate.iter().peekable();
                    current
                        .iter()
                        .filter(|&&pos| {
                            if keep.peek() == Some(&&pos) {
                                keep.next();
                                false
                            } else {
                                true
                            }
                        })
                        .map(|&pos| program.tokens[pos].clone())
                        .collect()
                };
                steps.push(ReductionStep {
                    step_index: steps.len() + 1,
                    removed_tokens,
                    surviving_token_indices: candidate
                        .iter()
                        .map(|&p| program.tokens[p].index)
                        .collect(),
                    prediction,
                    granularity,
                    queries_spent: ev.queries - queries_at_last_step,
                });
                queries_at_last_step = ev.queries;
                current = candidate;
                granularity = next_granularity;
            }
            None if granularity < len => granularity = (granularity * 2).min(len),
            None => break Ok(()),
        }
    };

    let (status, error) = match outcome {
        Ok(()) => (TraceStatus::Complete, None),
        Err(Halt::Budget(msg)) => (TraceStatus::BudgetExhausted, Some(msg)),
        Err(Halt::Adapter(msg)) => (TraceStatus::AdapterFailed, Some(msg)),
    };
    Ok(ReductionTrace {
        source_id: program.source_id.clone(),
        original_program: program.clone(),
        original_prediction,
        steps,
        final_is_one_minimal: status == TraceStatus::Complete,
        total_queries: ev.queries,
        status,
        error,
    })
}

/// Re-checks 1-minimality of a complete trace: deleting any single remaining
/// token must change the label (or leave nothing to query).
pub fn verify_one_minimal(
    trace: &ReductionTrace,
    model: &mut ModelHandle,
    cache: &QueryCache,
) -> Result<bool, ReduceError> {
    if !trace.is_complete() {
        return Err(ReduceError::Incomplete(trace.status));
    }
    let reduced = trace.final_program();
    if reduced.len() <= 1 {
        return Ok(true);
    }
    let target = &trace.original_prediction.label;
    for skip in 0..reduced.len() {
        let candidate = reduced.select((0..reduced.len()).filter(|&i| i != skip));
        if model.query(&candidate, cache)?.label == *target {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_keyword_rule, make_linear_bag, KeywordRuleConfig};
    use crate::tokens::{tokenize, Language};

    fn prog(src: &str) -> Program {
        tokenize("t", src, Language::C).unwrap()
    }

    fn final_texts(trace: &ReductionTrace) -> Vec<String> {
        trace.final_program().texts().map(str::to_string).collect()
    }

    #[test]
    fn bounds_cover_without_gaps() {
        let b: Vec<_> = chunk_bounds(7, 3).collect();
        assert_eq!(b, [(0, 2), (2, 4), (4, 7)]);
        let b: Vec<_> = chunk_bounds(5, 5).collect();
        assert!(b.iter().all(|(lo, hi)| hi - lo == 1));
    }

    #[test]
    fn keeps_the_only_weighted_token() {
        let mut m = make_linear_bag([("a".to_string(), 3.0)].into(), -1.0).unwrap();
        let cache = QueryCache::new();
        let trace = reduce(&prog("a b c"), &mut m, &cache, None).unwrap();
        assert_eq!(trace.status, TraceStatus::Complete);
        assert_eq!(final_texts(&trace), ["a"]);
        assert!((trace.original_prediction.score - 0.8807970779778823).abs() < 1e-12);
        assert!(!trace.steps.is_empty());
        for step in &trace.steps {
            assert_eq!(step.prediction.label, "1");
            assert!((step.prediction.score - 0.8807970779778823).abs() < 1e-12);
        }
        assert!(verify_one_minimal(&trace, &mut m, &cache).unwrap());
    }

    #[test]
    fn single_token_program_has_no_steps() {
        let mut m = make_linear_bag(Default::default(), 1.0).unwrap();
        let trace = reduce(&prog("x"), &mut m, &QueryCache::new(), None).unwrap();
        assert!(trace.steps.is_empty());
        assert!(trace.final_is_one_minimal);
        assert_eq!(trace.total_queries, 0);
        assert!(verify_one_minimal(&trace, &mut m, &QueryCache::new()).unwrap());
    }

    #[test]
    fn keyword_rule_keeps_exactly_one_if() {
        let mut m = make_keyword_rule(KeywordRuleConfig::new(["if"])).unwrap();
        let cache = QueryCache::new();
        let trace = reduce(&prog("if x if"), &mut m, &cache, None).unwrap();
        assert_eq!(final_texts(&trace), ["if"]);
        // first chunk [if] already keeps the label
        assert_eq!(trace.final_indices(), [0]);
        assert!(verify_one_minimal(&trace, &mut m, &cache).unwrap());
    }

    #[test]
    fn empty_program_is_rejected() {
        let mut m = make_linear_bag(Default::default(), 1.0).unwrap();
        assert_eq!(
            reduce(&prog(""), &mut m, &QueryCache::new(), None).unwrap_err(),
            ReduceError::EmptyProgram
        );
    }

    #[test]
    fn truncated_trace_is_not_one_minimal() {
        let mut m = make_linear_bag([("a".to_string(), 3.0)].into(), -1.0).unwrap();
        let cache = QueryCache::new();
        let mut trace = reduce(&prog("a b c d"), &mut m, &cache, None).unwrap();
        trace.steps.clear();
        assert!(!verify_one_minimal(&trace, &mut m, &cache).unwrap());
    }

    #[test]
    fn budget_exhaustion_keeps_partial_trace() {
        let mut m = make_linear_bag([("a".to_string(), 3.0)].into(), -1.0).unwrap();
        let src = "b c d e f g h a";
        let trace = reduce(&prog(src), &mut m, &QueryCache::new(), Some(3)).unwrap();
        assert_eq!(trace.status, TraceStatus::BudgetExhausted);
        assert_eq!(trace.total_queries, 3);
        assert!(!trace.final_is_one_minimal);
        assert!(trace.error.is_some());
        assert!(matches!(
            verify_one_minimal(&trace, &mut m, &QueryCache::new()),
            Err(ReduceError::Incomplete(TraceStatus::BudgetExhausted))
        ));
    }

    #[test]
    fn steps_shrink_and_removed_sets_are_differences() {
        let weights = [("k".to_string(), 2.0), ("d".to_string(), 0.6)].into();
        let mut m = make_linear_bag(weights, -1.0).unwrap();
        let original = prog("x d y k z d w");
        let trace = reduce(&original, &mut m, &QueryCache::new(), None).unwrap();
        let mut prev: Vec<usize> = (0..original.len()).collect();
        for step in &trace.steps {
            assert!(step.surviving_token_indices.len() < prev.len());
            let removed: Vec<usize> = step.removed_tokens.iter().map(|t| t.index).collect();
            let expected: Vec<usize> = prev
                .iter()
                .copied()
                .filter(|i| !step.surviving_token_indices.contains(i))
                .collect();
            assert_eq!(removed, expected);
            prev = step.surviving_token_indices.clone();
        }
        let spent: u64 = trace.steps.iter().map(|s| s.queries_spent).sum();
        assert!(spent <= trace.total_queries);
    }
}
