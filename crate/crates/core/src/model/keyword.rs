use serde::{Deserialize, Serialize};

use super::{CodeModel, ModelError, Prediction};
use crate::tokens::Program;

fn default_positive() -> String {
    "1".to_string()
}

fn default_negative() -> String {
    "0".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordRuleConfig {
    pub keywords: Vec<String>,
    #[serde(default = "default_positive")]
    pub positive_label: String,
    #[serde(default = "default_negative")]
    pub negative_label: String,
}

impl KeywordRuleConfig {
    pub fn new(keywords: impl IntoIterator<Item = impl Into<String>>) -> Self {
        KeywordRuleConfig {
            keywords: keywords.into_iter().map(Into::into).collect(),
            positive_label: default_positive(),
            negative_label: default_negative(),
        }
    }
}

/// Predicts the positive label iff any keyword occurs. With `k` keyword
/// occurrences the score is `1 - 0.5^(k+1)` (0.75, 0.875, ...); with none it
/// is 0.25.
#[derive(Debug, Clone)]
pub struct KeywordRule {
    config: KeywordRuleConfig,
}

impl KeywordRule {
    pub fn new(config: KeywordRuleConfig) -> Result<Self, ModelError> {
        if config.keywords.is_empty() {
            return Err(ModelError::Config(
                "keyword-rule needs at least one keyword".into(),
            ));
        }
        if config.positive_label.is_empty() || config.negative_label.is_empty() {
            return Err(ModelError::Config(
                "keyword-rule labels must be non-empty".into(),
            ));
        }
        if config.positive_label == config.negative_label {
            return Err(ModelError::Config("keyword-rule labels must differ".into()));
        }
        Ok(KeywordRule { config })
    }
}

impl CodeModel for KeywordRule {
    fn predict(&mut self, program: &Program) -> Result<Prediction, ModelError> {
        let hits = program
            .texts()
            .filter(|t| self.config.keywords.iter().any(|k| k == t))
            .count();
        Ok(if hits == 0 {
            Prediction {
                label: self.config.negative_label.clone(),
                score: 0.25,
            }
        } else {
            let exp = i32::try_from(hits + 1).unwrap_or(i32::MAX);
            Prediction {
                label: self.config.positive_label.clone(),
                score: 1.0 - 0.5f64.powi(exp),
            }
        })
    }
}
