//! Binary logistic regression over an encoded feature space.
//!
//! Categoricals are one-hot encoded, continuous features get one
//! standardized column. All public entry points take values in original
//! units.

mod confidence;
mod train;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use confidence::{binary_entropy, ConfidenceMeasure};
pub use train::{train, TrainReport, TrainSettings, TrainingProblem};

use crate::data::{DatasetSchema, FeatureKind, Instance, MadWeights, Value};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Positive,
    Negative,
}

/// Numerically stable logistic function.
pub fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub scale: f64,
}

impl Standardization {
    pub const IDENTITY: Standardization = Standardization {
        mean: 0.0,
        scale: 1.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Feature name to encoded column indices.
    pub encoding: BTreeMap<String, Vec<usize>>,
    pub standardization: BTreeMap<String, Standardization>,
    pub decision_boundary: f64,
    pub mad_weights: MadWeights,
    pub schema_digest: String,
    pub schema: DatasetSchema,
}

/// Builds the column layout for `schema`: one column per level, one per
/// continuous feature, in schema order.
pub fn encoding_for(schema: &DatasetSchema) -> (BTreeMap<String, Vec<usize>>, usize) {
    let mut encoding = BTreeMap::new();
    let mut next = 0;
    for f in &schema.features {
        let width = match &f.kind {
            FeatureKind::Categorical { levels } => levels.len(),
            FeatureKind::Continuous { .. } => 1,
        };
        encoding.insert(f.name.clone(), (next..next + width).collect());
        next += width;
    }
    (encoding, next)
}

impl LogisticModel {
    /// All-zero model with identity standardization and unit MAD weights.
    pub fn zeros(schema: &DatasetSchema) -> Self {
        let (encoding, dim) = encoding_for(schema);
        let standardization = schema
            .features
            .iter()
            .filter(|f| !f.is_categorical())
            .map(|f| (f.name.clone(), Standardization::IDENTITY))
            .collect();
        LogisticModel {
            weights: vec![0.0; dim],
            bias: 0.0,
            encoding,
            standardization,
            decision_boundary: 0.5,
            mad_weights: MadWeights::unit(schema),
            schema_digest: schema.digest(),
            schema: schema.clone(),
        }
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    /// Sets the encoded weight of a continuous feature.
    pub fn with_coefficient(mut self, feature: &str, weight: f64) -> Self {
        let col = self.encoding[feature][0];
        self.weights[col] = weight;
        self
    }

    /// Sets the one-hot weight of a categorical level.
    pub fn with_level_weight(mut self, feature: &str, level: &str, weight: f64) -> Self {
        let f = self.schema.feature(feature).expect("known feature");
        let idx = f
            .grid_index(&Value::Label(level.to_string()))
            .expect("known level");
        let col = self.encoding[feature][idx];
        self.weights[col] = weight;
        self
    }

    pub fn with_standardization(mut self, feature: &str, mean: f64, scale: f64) -> Self {
        self.standardization
            .insert(feature.to_string(), Standardization { mean, scale });
        self
    }

    pub fn with_mad_weights(mut self, mad: MadWeights) -> Self {
        self.mad_weights = mad;
        self
    }

    pub fn with_decision_boundary(mut self, d: f64) -> Self {
        self.decision_boundary = d;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: LogisticModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        let digest = self.schema.digest();
        if digest != self.schema_digest {
            return Err(Error::SchemaMismatch {
                expected: self.schema_digest.clone(),
                actual: digest,
            });
        }
        let (encoding, dim) = encoding_for(&self.schema);
        if encoding != self.encoding || dim != self.weights.len() {
            return Err(Error::Schema("encoding does not match schema".into()));
        }
        for f in self.schema.features.iter().filter(|f| !f.is_categorical()) {
            match self.standardization.get(&f.name) {
                Some(s) if s.scale > 0.0 && s.scale.is_finite() && s.mean.is_finite() => {}
                _ => {
                    return Err(Error::Schema(format!(
                        "`{}` needs a positive standardization scale",
                        f.name
                    )))
                }
            }
        }
        if !(self.decision_boundary > 0.0 && self.decision_boundary < 1.0) {
            return Err(Error::Schema("decision boundary must lie in (0, 1)".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite()) || !self.bias.is_finite() {
            return Err(Error::Schema("non-finite model parameters".into()));
        }
        Ok(())
    }

    /// Ensures a schema supplied separately matches the one the model was
    /// trained on.
    pub fn check_schema(&self, schema: &DatasetSchema) -> Result<()> {
        let actual = schema.digest();
        if actual != self.schema_digest {
            return Err(Error::SchemaMismatch {
                expected: self.schema_digest.clone(),
                actual,
            });
        }
        Ok(())
    }

    /// Logit contribution of one feature taking `value`.
    pub fn contribution(&self, feature: usize, value: &Value) -> f64 {
        let f = &self.schema.features[feature];
        let cols = &self.encoding[&f.name];
        match value {
            Value::Label(_) => f
                .grid_index(value)
                .map(|i| self.weights[cols[i]])
                .unwrap_or(0.0),
            Value::Number(v) => {
                let s = self.standardization[&f.name];
                self.weights[cols[0]] * ((v - s.mean) / s.scale)
            }
        }
    }

    /// Logit for the given per-feature contributions, summed in schema order.
    pub fn logit_from_contributions(&self, contributions: impl IntoIterator<Item = f64>) -> f64 {
        contributions.into_iter().fold(self.bias, |acc, c| acc + c)
    }

    pub fn logit(&self, x: &Instance) -> Result<f64> {
        self.schema.check_instance(x)?;
        Ok(self.logit_unchecked(x))
    }

    pub(crate) fn logit_unchecked(&self, x: &Instance) -> f64 {
        let values = self.schema.ordered(x);
        self.logit_from_contributions(
            values
                .iter()
                .enumerate()
                .map(|(i, v)| self.contribution(i, v)),
        )
    }

    /// Encoded row for `x` (standardized continuous, one-hot categorical).
    pub fn encode(&self, x: &Instance) -> Vec<f64> {
        let mut row = vec![0.0; self.weights.len()];
        for f in &self.schema.features {
            let cols = &self.encoding[&f.name];
            match x.get(&f.name) {
                Some(v @ Value::Label(_)) => {
                    if let Some(i) = f.grid_index(v) {
                        row[cols[i]] = 1.0;
                    }
                }
                Some(Value::Number(v)) => {
                    let s = self.standardization[&f.name];
                    row[cols[0]] = (v - s.mean) / s.scale;
                }
                None => {}
            }
        }
        row
    }

    pub fn predict_proba(&self, x: &Instance) -> Result<f64> {
        Ok(sigmoid(self.logit(x)?))
    }

    pub fn class_of(&self, p: f64) -> Class {
        if p >= self.decision_boundary {
            Class::Positive
        } else {
            Class::Negative
        }
    }

    pub fn predict_class(&self, x: &Instance) -> Result<Class> {
        Ok(self.class_of(self.predict_proba(x)?))
    }

    pub fn confidence(&self, x: &Instance, measure: ConfidenceMeasure) -> Result<f64> {
        Ok(measure.score(self.predict_proba(x)?))
    }

    /// The logit value at which the decision boundary sits.
    pub fn boundary_logit(&self) -> f64 {
        let d = self.decision_boundary;
        (d / (1.0 - d)).ln()
    }

    /// Largest absolute encoded weight for a feature; zero means the feature
    /// has no effect on predictions.
    pub fn feature_weight_norm(&self, feature: &str) -> f64 {
        self.encoding
            .get(feature)
            .map(|cols| cols.iter().map(|&c| self.weights[c].abs()).fold(0.0, f64::max))
            .unwrap_or(0.0)
    }
}
