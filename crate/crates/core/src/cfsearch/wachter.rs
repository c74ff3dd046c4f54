//! Prediction counterfactuals in the style of Wachter et al.: flip the class
//! while staying close, minimizing `lambda * (P(x') - D)^2 + d(x, x')`.

use serde::{Deserialize, Serialize};

use super::space::SearchSpace;
use super::{
    build_result, default_k, infeasible, resolve_mutable, BindingConstraint, Direction, Outcome,
    ResolvedQuery,
};
use crate::data::Instance;
use crate::model::{Class, ConfidenceMeasure, LogisticModel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WachterQuery {
    pub x: Instance,
    /// Class label the counterfactual must receive.
    pub desired_class: String,
    pub lambda: f64,
    #[serde(default)]
    pub mutable_features: Option<Vec<String>>,
    #[serde(default = "default_k")]
    pub max_changed: usize,
}

impl WachterQuery {
    pub fn new(x: Instance, desired_class: impl Into<String>, lambda: f64) -> Self {
        WachterQuery {
            x,
            desired_class: desired_class.into(),
            lambda,
            mutable_features: None,
            max_changed: default_k(),
        }
    }
}

/// The result reports `threshold = D` and the direction the probability had
/// to move; its `objective` is the Wachter loss.
pub fn solve_wachter(model: &LogisticModel, query: &WachterQuery) -> Result<Outcome> {
    let schema = &model.schema;
    schema.check_instance(&query.x)?;
    let desired = if query.desired_class == schema.positive_label {
        Class::Positive
    } else if query.desired_class == schema.negative_label {
        Class::Negative
    } else {
        return Err(Error::query(
            "desired_class",
            format!("`{}` is not a class label", query.desired_class),
        ));
    };
    if model.predict_class(&query.x)? == desired {
        return Err(Error::query("desired_class", "x is already predicted as the desired class"));
    }
    if !(query.lambda.is_finite() && query.lambda >= 0.0) {
        return Err(Error::query("lambda", "must be a finite non-negative number"));
    }

    let d = model.decision_boundary;
    let direction = match desired {
        Class::Positive => Direction::Increase,
        Class::Negative => Direction::Decrease,
    };
    let rq = ResolvedQuery {
        threshold: d,
        epsilon: 0.0,
        direction,
        measure: ConfidenceMeasure::Margin,
        k: query.max_changed,
        mutable: resolve_mutable(model, query.mutable_features.as_deref())?,
    };
    let space = SearchSpace::new(model, &query.x, &rq);
    if space.features.is_empty() {
        return Ok(infeasible(&rq, BindingConstraint::NoMutableFeatures, 0));
    }
    let lambda = query.lambda;
    let search = space.branch_and_bound(rq.k, &[], |p| {
        (p.class == desired).then(|| p.distance + lambda * (p.probability - d).powi(2))
    });
    Ok(match search.best {
        Some(best) => Outcome::Found(build_result(&space, &best)),
        None => infeasible(&rq, BindingConstraint::ClassFlip, search.points),
    })
}
