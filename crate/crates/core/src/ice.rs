//! Individual conditional expectation of the confidence score: hold `x`
//! fixed, sweep one feature over its grid, and record `U` at each value.

use serde::{Deserialize, Serialize};

use crate::data::{FeatureKind, Instance, Value};
use crate::model::{ConfidenceMeasure, LogisticModel};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub value: Value,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IceProfile {
    pub feature: String,
    pub measure: ConfidenceMeasure,
    /// Label of the class predicted for the factual instance.
    pub predicted_class: String,
    /// In grid order; an off-grid factual value is inserted at its place.
    pub points: Vec<ProfilePoint>,
    pub factual_index: usize,
}

impl IceProfile {
    pub fn factual(&self) -> &ProfilePoint {
        &self.points[self.factual_index]
    }

    pub fn confidences(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.confidence).collect()
    }
}

pub fn ice_profile(
    model: &LogisticModel,
    x: &Instance,
    feature: &str,
    measure: ConfidenceMeasure,
) -> Result<IceProfile> {
    let schema = &model.schema;
    let f = schema.feature(feature)?;
    schema.check_instance(x)?;
    let factual = x.get(feature).expect("checked instance").clone();

    let mut values = f.grid();
    let factual_index = match (f.grid_index(&factual), &f.kind) {
        (Some(i), _) => {
            // Show the factual value exactly as given.
            values[i] = factual.clone();
            i
        }
        (None, FeatureKind::Continuous { .. }) => {
            let v = factual.as_number().expect("checked instance");
            let at = values
                .iter()
                .position(|g| g.as_number().is_some_and(|g| g > v))
                .unwrap_or(values.len());
            values.insert(at, factual.clone());
            at
        }
        (None, FeatureKind::Categorical { .. }) => unreachable!("checked instance"),
    };

    let mut probe = x.clone();
    let points = values
        .into_iter()
        .map(|value| {
            probe.set(feature, value.clone());
            let confidence = model.confidence(&probe, measure)?;
            Ok(ProfilePoint { value, confidence })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(IceProfile {
        feature: feature.to_string(),
        measure,
        predicted_class: schema.class_label(model.predict_class(x)?).to_string(),
        points,
        factual_index,
    })
}

/// Values of the highest and lowest confidence; the earliest point wins ties.
pub fn ice_extremes(profile: &IceProfile) -> Option<(Value, Value)> {
    let first = profile.points.first()?;
    let (mut hi, mut lo) = (first, first);
    for p in &profile.points[1..] {
        if p.confidence > hi.confidence {
            hi = p;
        }
        if p.confidence < lo.confidence {
            lo = p;
        }
    }
    Some((hi.value.clone(), lo.value.clone()))
}
