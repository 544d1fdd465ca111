//! The engine's only view of a code model: a function from a token sequence
//! to a `(label, score)` pair.
//!
//! Built-in analytic models ([`LinearBag`], [`KeywordRule`]) make the whole
//! pipeline checkable in closed form; [`ExternalModel`] bridges to any real
//! model through a line-delimited JSON protocol on stdio.

mod cache;
mod external;
mod keyword;
mod linear;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokens::Program;

pub use cache::{Fingerprint, QueryCache};
pub use external::{AdapterRequest, AdapterResponse, ExternalModel};
pub use keyword::{KeywordRule, KeywordRuleConfig};
pub use linear::{sigmoid, LinearBag, LinearBagConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub score: f64,
}

impl Prediction {
    /// Validates the score range and label. Out-of-range scores are rejected,
    /// never clamped.
    pub fn new(label: impl Into<String>, score: f64) -> Result<Self, String> {
        let label = label.into();
        if label.is_empty() {
            return Err("empty label".to_string());
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(format!("score {score} outside [0, 1]"));
        }
        Ok(Prediction { label, score })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("model configuration error: {0}")]
    Config(String),
    #[error("adapter error on sample `{sample}`: {message}")]
    Adapter { sample: String, message: String },
    #[error("adapter protocol error on sample `{sample}`: {message}")]
    Protocol { sample: String, message: String },
    #[error("query budget of {budget} exhausted")]
    BudgetExhausted { budget: u64 },
}

/// Anything that can score a token sequence.
pub trait CodeModel: Send {
    fn predict(&mut self, program: &Program) -> Result<Prediction, ModelError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    LinearBag,
    KeywordRule,
    External,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::LinearBag => "linear-bag",
            ModelKind::KeywordRule => "keyword-rule",
            ModelKind::External => "external",
        })
    }
}

/// Recipe for building model instances; each worker instantiates its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    LinearBag(LinearBagConfig),
    KeywordRule(KeywordRuleConfig),
    External {
        command: Vec<String>,
        timeout_ms: u64,
    },
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::LinearBag(_) => ModelKind::LinearBag,
            ModelSpec::KeywordRule(_) => ModelKind::KeywordRule,
            ModelSpec::External { .. } => ModelKind::External,
        }
    }

    /// Checks the configuration without starting anything.
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ModelSpec::LinearBag(cfg) => LinearBag::new(cfg.weights.clone(), cfg.bias).map(drop),
            ModelSpec::KeywordRule(cfg) => KeywordRule::new(cfg.clone()).map(drop),
            ModelSpec::External { command, .. } if command.is_empty() => {
                Err(ModelError::Config("empty adapter command".to_string()))
            }
            ModelSpec::External { .. } => Ok(()),
        }
    }

    pub fn instantiate(&self) -> Result<ModelHandle, ModelError> {
        match self {
            ModelSpec::LinearBag(cfg) => make_linear_bag(cfg.weights.clone(), cfg.bias),
            ModelSpec::KeywordRule(cfg) => make_keyword_rule(cfg.clone()),
            ModelSpec::External {
                command,
                timeout_ms,
            } => spawn_external(command.clone(), Duration::from_millis(*timeout_ms)),
        }
    }
}

/// A model instance plus its query accounting.
pub struct ModelHandle {
    kind: ModelKind,
    model: Box<dyn CodeModel>,
    query_budget: Option<u64>,
    queries: u64,
    model_calls: u64,
}

impl fmt::Debug for ModelHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelHandle")
            .field("kind", &self.kind)
            .field("query_budget", &self.query_budget)
            .field("queries", &self.queries)
            .field("model_calls", &self.model_calls)
            .finish()
    }
}

impl ModelHandle {
    pub fn new(kind: ModelKind, model: Box<dyn CodeModel>) -> Self {
        ModelHandle {
            kind,
            model,
            query_budget: None,
            queries: 0,
            model_calls: 0,
        }
    }

    pub fn with_budget(mut self, budget: Option<u64>) -> Self {
        self.query_budget = budget;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Queries answered by this handle, cache hits included.
    pub fn queries(&self) -> u64 {
        self.queries
    }

    /// Queries that actually reached the underlying model.
    pub fn model_calls(&self) -> u64 {
        self.model_calls
    }

    pub fn query(
        &mut self,
        program: &Program,
        cache: &QueryCache,
    ) -> Result<Prediction, ModelError> {
        if let Some(budget) = self.query_budget {
            if self.queries >= budget {
                return Err(ModelError::BudgetExhausted { budget });
            }
        }
        self.queries += 1;
        let fingerprint = Fingerprint::of(program);
        if let Some(hit) = cache.get(&fingerprint) {
            return Ok(hit);
        }
        let prediction = self.model.predict(program)?;
        if let Err(message) = Prediction::new(prediction.label.clone(), prediction.score) {
            return Err(ModelError::Protocol {
                sample: program.source_id.clone(),
                message,
            });
        }
        self.model_calls += 1;
        cache.insert(fingerprint, prediction.clone());
        Ok(prediction)
    }
}

pub fn make_linear_bag(
    weights: BTreeMap<String, f64>,
    bias: f64,
) -> Result<ModelHandle, ModelError> {
    let model = LinearBag::new(weights, bias)?;
    Ok(ModelHandle::new(ModelKind::LinearBag, Box::new(model)))
}

pub fn make_keyword_rule(config: KeywordRuleConfig) -> Result<ModelHandle, ModelError> {
    let model = KeywordRule::new(config)?;
    Ok(ModelHandle::new(ModelKind::KeywordRule, Box::new(model)))
}

/// Starts an adapter process. Spawn failures surface here as configuration
/// errors rather than on the first query.
pub fn spawn_external(command: Vec<String>, timeout: Duration) -> Result<ModelHandle, ModelError> {
    let model = ExternalModel::spawn(command, timeout)?;
    Ok(ModelHandle::new(ModelKind::External, Box::new(model)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokens::{tokenize, Language};

    fn prog(src: &str) -> Program {
        tokenize("t", src, Language::C).unwrap()
    }

    #[test]
    fn cache_serves_repeated_queries() {
        let mut m = make_linear_bag([("if".to_string(), 2.0)].into(), -1.0).unwrap();
        let cache = QueryCache::new();
        let a = m.query(&prog("if"), &cache).unwrap();
        let b = m.query(&prog("if"), &cache).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.hits(), 1);
        assert_eq!(cache.misses(), 1);
        assert_eq!(m.queries(), 2);
        assert_eq!(m.model_calls(), 1);
    }

    #[test]
    fn disabled_cache_always_calls_model() {
        let mut m = make_linear_bag(BTreeMap::new(), 0.0).unwrap();
        let cache = QueryCache::disabled();
        for _ in 0..3 {
            m.query(&prog("x"), &cache).unwrap();
        }
        assert_eq!(m.model_calls(), 3);
        assert_eq!(cache.hits(), 0);
    }

    #[test]
    fn budget_is_enforced() {
        let mut m = make_linear_bag(BTreeMap::new(), 0.0)
            .unwrap()
            .with_budget(Some(2));
        let cache = QueryCache::new();
        m.query(&prog("a"), &cache).unwrap();
        m.query(&prog("b"), &cache).unwrap();
        assert_eq!(
            m.query(&prog("c"), &cache),
            Err(ModelError::BudgetExhausted { budget: 2 })
        );
    }

    struct Broken;
    impl CodeModel for Broken {
        fn predict(&mut self, _: &Program) -> Result<Prediction, ModelError> {
            Ok(Prediction {
                label: "1".into(),
                score: 1.2,
            })
        }
    }

    #[test]
    fn out_of_range_scores_are_rejected_not_clamped() {
        let mut m = ModelHandle::new(ModelKind::External, Box::new(Broken));
        let err = m.query(&prog("x"), &QueryCache::new()).unwrap_err();
        assert!(matches!(err, ModelError::Protocol { .. }), "{err:?}");
        assert!(Prediction::new("1", f64::NAN).is_err());
        assert!(Prediction::new("", 0.5).is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ModelSpec::External {
            command: vec!["python3".into(), "adapter.py".into()],
            timeout_ms: 5000,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ModelSpec>(&json).unwrap(), spec);
    }
}
