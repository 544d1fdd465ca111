use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CodeModel, ModelError, Prediction};
use crate::tokens::Program;

/// On-disk form of a linear bag-of-tokens model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBagConfig {
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
}

/// Logistic regression over token counts:
/// `score = sigmoid(bias + sum(count(t) * weight(t)))`, label `"1"` iff the
/// score is strictly above 0.5.
#[derive(Debug, Clone)]
pub struct LinearBag {
    weights: BTreeMap<String, f64>,
    bias: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LinearBag {
    pub fn new(weights: BTreeMap<String, f64>, bias: f64) -> Result<Self, ModelError> {
        if !bias.is_finite() {
            return Err(ModelError::Config(format!("non-finite bias {bias}")));
        }
        if let Some((tok, w)) = weights.iter().find(|(_, w)| !w.is_finite()) {
            return Err(ModelError::Config(format!(
                "non-finite weight {w} for token `{tok}`"
            )));
        }
        Ok(LinearBag { weights, bias })
    }

    pub fn from_config(config: &LinearBagConfig) -> Result<Self, ModelError> {
        Self::new(config.weights.clone(), config.bias)
    }

    pub fn weight(&self, token: &str) -> f64 {
        self.weights.get(token).copied().unwrap_or(0.0)
    }

    pub fn logit<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> f64 {
        tokens
            .into_iter()
            .fold(self.bias, |z, t| z + self.weight(t))
    }

    pub fn score<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Prediction {
        let score = sigmoid(self.logit(tokens));
        let label = if score > 0.5 { "1" } else { "0" };
        Prediction {
            label: label.to_string(),
            score,
        }
    }
}

impl CodeModel for LinearBag {
    fn predict(&mut self, program: &Program) -> Result<Prediction, ModelError> {
        Ok(self.score(program.texts()))
    }
}
