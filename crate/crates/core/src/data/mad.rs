use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::Labeled;
use super::schema::{DatasetSchema, FeatureKind, Instance, Value};
use crate::{Error, Result};

/// Cost of changing a categorical feature to any other level.
pub const CATEGORICAL_CHANGE_COST: f64 = 1.0;

/// Makes the standard deviation comparable to MAD under normality.
pub const STD_CONSISTENCY: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightBasis {
    /// `1 / MAD`
    Mad,
    /// `1 / (1.4826 * sigma)`, used when MAD is zero.
    ScaledStd,
    CategoricalUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeight {
    pub weight: f64,
    pub basis: WeightBasis,
}

/// Per-feature weights of the l1 distance between an instance and its
/// counterfactual. Features listed in `excluded` are constant in the data and
/// never changed by the search.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MadWeights {
    pub weights: BTreeMap<String, FeatureWeight>,
    #[serde(default)]
    pub excluded: Vec<String>,
}

impl MadWeights {
    /// Unit weight for every feature.
    pub fn unit(schema: &DatasetSchema) -> Self {
        let weights = schema
            .features
            .iter()
            .map(|f| {
                let basis = if f.is_categorical() {
                    WeightBasis::CategoricalUnit
                } else {
                    WeightBasis::Mad
                };
                (f.name.clone(), FeatureWeight { weight: 1.0, basis })
            })
            .collect();
        MadWeights {
            weights,
            excluded: Vec::new(),
        }
    }

    /// Overrides the weight of one continuous feature.
    pub fn with_weight(mut self, name: &str, weight: f64) -> Self {
        self.weights.insert(
            name.to_string(),
            FeatureWeight {
                weight,
                basis: WeightBasis::Mad,
            },
        );
        self
    }

    pub fn weight(&self, name: &str) -> Option<f64> {
        self.weights.get(name).map(|w| w.weight)
    }

    pub fn is_searchable(&self, name: &str) -> bool {
        self.weights.contains_key(name)
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .weights
            .iter()
            .filter(|(_, w)| w.basis == WeightBasis::ScaledStd)
            .map(|(name, _)| format!("`{name}` has zero MAD; weighted by 1/(1.4826 sd) instead"))
            .collect();
        out.extend(
            self.excluded
                .iter()
                .map(|name| format!("`{name}` is constant in the data and excluded from search")),
        );
        out
    }

    /// Cost of moving one feature from `old` to `new`.
    pub fn change_cost(&self, name: &str, old: &Value, new: &Value) -> f64 {
        if old == new {
            return 0.0;
        }
        let Some(w) = self.weights.get(name) else {
            return f64::INFINITY;
        };
        match (old, new) {
            (Value::Number(a), Value::Number(b)) => w.weight * (a - b).abs(),
            _ => CATEGORICAL_CHANGE_COST,
        }
    }

    /// Weighted l1 distance, accumulated in schema order.
    pub fn distance(&self, schema: &DatasetSchema, x: &Instance, other: &Instance) -> f64 {
        schema.features.iter().fold(0.0, |acc, f| {
            match (x.get(&f.name), other.get(&f.name)) {
                (Some(a), Some(b)) => acc + self.change_cost(&f.name, a, b),
                _ => f64::INFINITY,
            }
        })
    }
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median absolute deviation from the median.
pub fn mad(values: &[f64]) -> f64 {
    let m = median(values);
    let deviations: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&deviations)
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

pub fn compute_mad_weights(instances: &[Labeled], schema: &DatasetSchema) -> Result<MadWeights> {
    if instances.len() < 2 {
        return Err(Error::Data("MAD weights need at least 2 instances".into()));
    }
    let mut out = MadWeights::default();
    for f in &schema.features {
        if let FeatureKind::Categorical { .. } = f.kind {
            out.weights.insert(
                f.name.clone(),
                FeatureWeight {
                    weight: CATEGORICAL_CHANGE_COST,
                    basis: WeightBasis::CategoricalUnit,
                },
            );
            continue;
        }
        let column: Vec<f64> = instances
            .iter()
            .map(|r| {
                r.instance
                    .get(&f.name)
                    .and_then(Value::as_number)
                    .ok_or_else(|| Error::value(&f.name, "missing numeric value"))
            })
            .collect::<Result<_>>()?;
        let m = mad(&column);
        if m > 0.0 {
            out.weights.insert(
                f.name.clone(),
                FeatureWeight {
                    weight: 1.0 / m,
                    basis: WeightBasis::Mad,
                },
            );
            continue;
        }
        let sd = sample_std(&column);
        if sd > 0.0 {
            log::warn!("`{}` has zero MAD, falling back to scaled standard deviation", f.name);
            out.weights.insert(
                f.name.clone(),
                FeatureWeight {
                    weight: 1.0 / (STD_CONSISTENCY * sd),
                    basis: WeightBasis::ScaledStd,
                },
            );
        } else {
            log::warn!("`{}` is constant; excluded from counterfactual search", f.name);
            out.excluded.push(f.name.clone());
        }
    }
    Ok(out)
}
