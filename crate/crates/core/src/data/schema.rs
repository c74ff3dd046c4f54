use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Tolerance used when checking that `step` tiles `[c_min, c_max]`.
const GRID_TOLERANCE: f64 = 1e-9;

/// A single feature value: a level label for categoricals, a real for
/// continuous features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Label(String),
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(*v),
            Value::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Label(s) => Some(s),
            Value::Number(_) => None,
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Number(v)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Label(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Label(s)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Label(s) => f.write_str(s),
            Value::Number(v) => f.write_str(&format_number(*v)),
        }
    }
}

/// Human formatting for grid values: drops accumulated float noise from
/// `c_min + i * step` and prints integers without a fractional part.
pub fn format_number(v: f64) -> String {
    let rounded = (v * 1e9).round() / 1e9;
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical { levels: Vec<String> },
    Continuous { c_min: f64, c_max: f64, step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
    #[serde(default = "default_mutable")]
    pub mutable: bool,
}

fn default_mutable() -> bool {
    true
}

impl FeatureSchema {
    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        FeatureSchema {
            name: name.to_string(),
            kind: FeatureKind::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
            },
            mutable: true,
        }
    }

    pub fn continuous(name: &str, c_min: f64, c_max: f64, step: f64) -> Self {
        FeatureSchema {
            name: name.to_string(),
            kind: FeatureKind::Continuous { c_min, c_max, step },
            mutable: true,
        }
    }

    pub fn immutable(mut self) -> Self {
        self.mutable = false;
        self
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Schema("feature with empty name".into()));
        }
        match &self.kind {
            FeatureKind::Categorical { levels } => {
                if levels.is_empty() {
                    return Err(Error::Schema(format!("`{}` has no levels", self.name)));
                }
                let unique: BTreeSet<&String> = levels.iter().collect();
                if unique.len() != levels.len() {
                    return Err(Error::Schema(format!("`{}` has duplicate levels", self.name)));
                }
            }
            FeatureKind::Continuous { c_min, c_max, step } => {
                if !(c_min.is_finite() && c_max.is_finite() && step.is_finite()) {
                    return Err(Error::Schema(format!("`{}` has non-finite bounds", self.name)));
                }
                if c_min >= c_max {
                    return Err(Error::Schema(format!("`{}` needs c_min < c_max", self.name)));
                }
                if *step <= 0.0 {
                    return Err(Error::Schema(format!("`{}` needs step > 0", self.name)));
                }
                let span = c_max - c_min;
                let intervals = (span / step).round();
                if (intervals * step - span).abs() > GRID_TOLERANCE * span.abs().max(1.0) {
                    return Err(Error::Schema(format!(
                        "`{}`: step {step} does not divide [{c_min}, {c_max}]",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of admissible grid values: `|levels|` or `(c_max - c_min)/step + 1`.
    pub fn grid_len(&self) -> usize {
        match &self.kind {
            FeatureKind::Categorical { levels } => levels.len(),
            FeatureKind::Continuous { c_min, c_max, step } => {
                ((c_max - c_min) / step + GRID_TOLERANCE).floor() as usize + 1
            }
        }
    }

    /// The `i`-th grid value. Continuous grids end exactly at `c_max`.
    pub fn grid_value(&self, i: usize) -> Value {
        match &self.kind {
            FeatureKind::Categorical { levels } => Value::Label(levels[i].clone()),
            FeatureKind::Continuous { c_min, c_max, step } => {
                if i + 1 == self.grid_len() {
                    Value::Number(*c_max)
                } else {
                    Value::Number(c_min + i as f64 * step)
                }
            }
        }
    }

    pub fn grid(&self) -> Vec<Value> {
        (0..self.grid_len()).map(|i| self.grid_value(i)).collect()
    }

    /// Grid index of `value`, if it sits on the grid.
    pub fn grid_index(&self, value: &Value) -> Option<usize> {
        match (&self.kind, value) {
            (FeatureKind::Categorical { levels }, Value::Label(l)) => {
                levels.iter().position(|x| x == l)
            }
            (FeatureKind::Continuous { c_min, step, .. }, Value::Number(v)) => {
                let pos = (v - c_min) / step;
                let i = pos.round();
                if i < 0.0 || i as usize >= self.grid_len() {
                    return None;
                }
                ((pos - i).abs() <= GRID_TOLERANCE).then_some(i as usize)
            }
            _ => None,
        }
    }

    pub fn check_value(&self, value: &Value) -> Result<()> {
        match (&self.kind, value) {
            (FeatureKind::Categorical { levels }, Value::Label(l)) => {
                if levels.contains(l) {
                    Ok(())
                } else {
                    Err(Error::value(&self.name, format!("`{l}` is not one of {levels:?}")))
                }
            }
            (FeatureKind::Continuous { c_min, c_max, .. }, Value::Number(v)) => {
                let slack = GRID_TOLERANCE * (c_max - c_min).abs().max(1.0);
                if v.is_finite() && *v >= c_min - slack && *v <= c_max + slack {
                    Ok(())
                } else {
                    Err(Error::value(&self.name, format!("{v} outside [{c_min}, {c_max}]")))
                }
            }
            (FeatureKind::Categorical { .. }, Value::Number(v)) => {
                Err(Error::value(&self.name, format!("expected a level label, got {v}")))
            }
            (FeatureKind::Continuous { .. }, Value::Label(l)) => {
                Err(Error::value(&self.name, format!("expected a number, got `{l}`")))
            }
        }
    }

    /// Parses a raw CSV cell into a value of this feature's kind.
    pub fn parse_cell(&self, cell: &str) -> Result<Value> {
        let value = match self.kind {
            FeatureKind::Categorical { .. } => Value::Label(cell.to_string()),
            FeatureKind::Continuous { .. } => {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| Error::value(&self.name, format!("cannot parse `{cell}` as a number")))?;
                Value::Number(v)
            }
        };
        self.check_value(&value)?;
        Ok(value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub features: Vec<FeatureSchema>,
    pub target: String,
    pub positive_label: String,
    pub negative_label: String,
}

impl DatasetSchema {
    pub fn new(
        features: Vec<FeatureSchema>,
        target: &str,
        positive_label: &str,
        negative_label: &str,
    ) -> Result<Self> {
        let schema = DatasetSchema {
            features,
            target: target.to_string(),
            positive_label: positive_label.to_string(),
            negative_label: negative_label.to_string(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema: DatasetSchema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for f in &self.features {
            f.validate()?;
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature `{}`", f.name)));
            }
        }
        if seen.contains(self.target.as_str()) {
            return Err(Error::Schema(format!("target `{}` is also a feature", self.target)));
        }
        if self.positive_label == self.negative_label {
            return Err(Error::Schema("positive and negative labels coincide".into()));
        }
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn feature(&self, name: &str) -> Result<&FeatureSchema> {
        Ok(&self.features[self.index_of(name)?])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn class_label(&self, class: crate::model::Class) -> &str {
        match class {
            crate::model::Class::Positive => &self.positive_label,
            crate::model::Class::Negative => &self.negative_label,
        }
    }

    /// SHA-256 over the canonical JSON form; ties model files to schemas.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Validates `instance` against every feature of the schema.
    pub fn check_instance(&self, instance: &Instance) -> Result<()> {
        for f in &self.features {
            let v = instance
                .get(&f.name)
                .ok_or_else(|| Error::value(&f.name, "missing from instance"))?;
            f.check_value(v)?;
        }
        if let Some(extra) = instance.values.keys().find(|k| self.index_of(k).is_err()) {
            return Err(Error::UnknownFeature(extra.clone()));
        }
        Ok(())
    }

    /// Values of `instance` in schema order. Assumes the instance was checked.
    pub fn ordered<'a>(&self, instance: &'a Instance) -> Vec<&'a Value> {
        self.features
            .iter()
            .map(|f| &instance.values[&f.name])
            .collect()
    }
}

/// A full feature assignment keyed by feature name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instance {
    pub values: BTreeMap<String, Value>,
}

impl Instance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.values.insert(name.to_string(), value.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    pub fn set(&mut self, name: &str, value: Value) {
        self.values.insert(name.to_string(), value);
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl FromIterator<(String, Value)> for Instance {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Instance {
            values: iter.into_iter().collect(),
        }
    }
}
