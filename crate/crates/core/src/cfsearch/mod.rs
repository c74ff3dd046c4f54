//! Confidence counterfactual search.
//!
//! For an instance `x` with confidence `U(x)`, find `x'` minimizing
//!
//! ```text
//! ||x - x'||_{1,w} + |U(x') - T|
//! ```
//!
//! subject to `U(x') >= T + eps` (increase) or `U(x') <= T - eps` (decrease),
//! and `x'` keeping the predicted class of `x`. The search runs over the
//! schema grid: categorical levels and continuous values `c_min + i * step`.
//! At most `k` mutable features may change.

mod analytic;
mod oracle;
mod space;
mod wachter;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use analytic::analytic_single_feature;
pub use oracle::{oracle_solve, ORACLE_GRID_LIMIT};
pub use wachter::{solve_wachter, WachterQuery};

use crate::data::{Instance, Value};
use crate::model::{Class, ConfidenceMeasure, LogisticModel};
use crate::{Error, Result};
use space::{Evaluated, SearchSpace};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_CHANGED: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Increase => "increase",
            Direction::Decrease => "decrease",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "increase" | "greater" | "up" => Ok(Direction::Increase),
            "decrease" | "less" | "down" => Ok(Direction::Decrease),
            other => Err(Error::query("direction", format!("expected increase or decrease, got `{other}`"))),
        }
    }
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_k() -> usize {
    DEFAULT_MAX_CHANGED
}

/// "Why is the confidence `U(x)` rather than above (or below) `T`?"
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceQuery {
    pub x: Instance,
    /// Target threshold; defaults to `U(x)` itself.
    #[serde(default)]
    pub threshold: Option<f64>,
    pub direction: Direction,
    /// Features allowed to change; defaults to every schema-mutable feature.
    #[serde(default)]
    pub mutable_features: Option<Vec<String>>,
    #[serde(default = "default_k")]
    pub max_changed: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub measure: ConfidenceMeasure,
}

impl ConfidenceQuery {
    pub fn new(x: Instance, threshold: f64, direction: Direction) -> Self {
        ConfidenceQuery {
            x,
            threshold: Some(threshold),
            direction,
            mutable_features: None,
            max_changed: DEFAULT_MAX_CHANGED,
            epsilon: DEFAULT_EPSILON,
            measure: ConfidenceMeasure::Margin,
        }
    }

    pub fn with_mutable(mut self, names: &[&str]) -> Self {
        self.mutable_features = Some(names.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.max_changed = k;
        self
    }

    pub fn with_measure(mut self, measure: ConfidenceMeasure) -> Self {
        self.measure = measure;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }
}

/// A query checked against a model, with defaults filled in.
#[derive(Debug, Clone)]
pub(crate) struct ResolvedQuery {
    pub threshold: f64,
    pub epsilon: f64,
    pub direction: Direction,
    pub measure: ConfidenceMeasure,
    pub k: usize,
    /// Schema indices of features the query allows to change, ascending.
    pub mutable: Vec<usize>,
}

/// Resolves `names` (or every schema-mutable feature) to schema indices.
pub(crate) fn resolve_mutable(model: &LogisticModel, names: Option<&[String]>) -> Result<Vec<usize>> {
    let schema = &model.schema;
    let mut out = match names {
        None => (0..schema.features.len())
            .filter(|&i| schema.features[i].mutable)
            .collect::<Vec<_>>(),
        Some(names) => {
            let mut idx = Vec::with_capacity(names.len());
            for name in names {
                let i = schema.index_of(name)?;
                if !schema.features[i].mutable {
                    return Err(Error::query(
                        "mutable_features",
                        format!("`{name}` is immutable in the schema"),
                    ));
                }
                idx.push(i);
            }
            idx
        }
    };
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub(crate) fn resolve(model: &LogisticModel, query: &ConfidenceQuery) -> Result<ResolvedQuery> {
    model.schema.check_instance(&query.x)?;
    let factual_confidence = model.confidence(&query.x, query.measure)?;
    let threshold = query.threshold.unwrap_or(factual_confidence);
    if !(threshold.is_finite() && (0.0..=1.0).contains(&threshold)) {
        return Err(Error::query("threshold", format!("{threshold} is outside [0, 1]")));
    }
    if !(query.epsilon.is_finite() && query.epsilon >= 0.0) {
        return Err(Error::query("epsilon", "must be a finite non-negative number"));
    }
    let eps = query.epsilon;
    match query.direction {
        Direction::Increase if threshold <= factual_confidence - eps => {
            return Err(Error::query(
                "threshold",
                format!("increase needs T above U(x) = {factual_confidence:.6}, got {threshold}"),
            ))
        }
        Direction::Decrease if threshold >= factual_confidence + eps => {
            return Err(Error::query(
                "threshold",
                format!("decrease needs T below U(x) = {factual_confidence:.6}, got {threshold}"),
            ))
        }
        _ => {}
    }
    Ok(ResolvedQuery {
        threshold,
        epsilon: eps,
        direction: query.direction,
        measure: query.measure,
        k: query.max_changed,
        mutable: resolve_mutable(model, query.mutable_features.as_deref())?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangedFeature {
    pub feature: String,
    pub old: Value,
    pub new: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualResult {
    pub feasible: bool,
    pub x_prime: Instance,
    /// `U(x')`
    pub confidence: f64,
    pub probability: f64,
    pub predicted_class: Class,
    pub predicted_label: String,
    /// Changed features in schema order.
    pub changed: Vec<ChangedFeature>,
    pub distance: f64,
    pub objective: f64,
    pub threshold: f64,
    pub direction: Direction,
    pub measure: ConfidenceMeasure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingConstraint {
    /// Nothing is allowed to change.
    NoMutableFeatures,
    /// `T + eps > 1` or `T - eps < 0`: no confidence can satisfy it.
    ThresholdOutOfRange,
    /// No point within the change budget reaches the threshold.
    Threshold,
    /// Points reach the threshold, but only by crossing the decision boundary.
    SameClass,
    /// No point within the change budget reaches the desired class.
    ClassFlip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibleReport {
    pub feasible: bool,
    pub binding_constraint: BindingConstraint,
    pub message: String,
    pub threshold: f64,
    pub direction: Direction,
    pub points_examined: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome {
    Found(CounterfactualResult),
    Infeasible(InfeasibleReport),
}

impl Outcome {
    pub fn result(&self) -> Option<&CounterfactualResult> {
        match self {
            Outcome::Found(r) => Some(r),
            Outcome::Infeasible(_) => None,
        }
    }

    pub fn into_result(self) -> Option<CounterfactualResult> {
        match self {
            Outcome::Found(r) => Some(r),
            Outcome::Infeasible(_) => None,
        }
    }

    pub fn objective(&self) -> f64 {
        self.result().map_or(f64::INFINITY, |r| r.objective)
    }
}

fn infeasible(
    rq: &ResolvedQuery,
    constraint: BindingConstraint,
    points_examined: u64,
) -> Outcome {
    let message = match constraint {
        BindingConstraint::NoMutableFeatures => "no mutable feature can be changed".to_string(),
        BindingConstraint::ThresholdOutOfRange => format!(
            "confidence can never be {} {:.1}%",
            if rq.direction == Direction::Increase { "above" } else { "below" },
            rq.threshold * 100.0
        ),
        BindingConstraint::Threshold => format!(
            "no change of at most {} feature(s) moves the confidence {} {:.1}%",
            rq.k,
            if rq.direction == Direction::Increase { "above" } else { "below" },
            rq.threshold * 100.0
        ),
        BindingConstraint::SameClass => {
            "every change that reaches the threshold also flips the predicted class".to_string()
        }
        BindingConstraint::ClassFlip => {
            format!("no change of at most {} feature(s) flips the predicted class", rq.k)
        }
    };
    Outcome::Infeasible(InfeasibleReport {
        feasible: false,
        binding_constraint: constraint,
        message,
        threshold: rq.threshold,
        direction: rq.direction,
        points_examined,
    })
}

/// Exits early when the threshold cannot be met by any confidence value.
fn precheck(rq: &ResolvedQuery) -> Option<BindingConstraint> {
    let out_of_range = match rq.direction {
        Direction::Increase => rq.threshold + rq.epsilon >= 1.0,
        Direction::Decrease => rq.threshold - rq.epsilon < 0.0,
    };
    out_of_range.then_some(BindingConstraint::ThresholdOutOfRange)
}

pub(crate) fn build_result(space: &SearchSpace<'_>, best: &Evaluated) -> CounterfactualResult {
    let model = space.model;
    let x_prime = space.instance_for(&best.changes);
    let changed = best
        .changes
        .iter()
        .map(|&(j, ref cand)| ChangedFeature {
            feature: model.schema.features[j].name.clone(),
            old: space.factual[j].clone(),
            new: cand.value.clone(),
        })
        .collect();
    CounterfactualResult {
        feasible: true,
        x_prime,
        confidence: best.point.confidence,
        probability: best.point.probability,
        predicted_class: best.point.class,
        predicted_label: model.schema.class_label(best.point.class).to_string(),
        changed,
        distance: best.point.distance,
        objective: best.objective,
        threshold: space.threshold,
        direction: space.direction,
        measure: space.measure,
    }
}

/// Exact minimizer over the admissible grid, by branch and bound seeded with
/// the analytic single-feature candidates.
pub fn solve(model: &LogisticModel, query: &ConfidenceQuery) -> Result<Outcome> {
    let rq = resolve(model, query)?;
    if let Some(c) = precheck(&rq) {
        return Ok(infeasible(&rq, c, 0));
    }
    let space = SearchSpace::new(model, &query.x, &rq);
    if space.features.is_empty() || rq.k == 0 {
        // Only x itself is admissible.
        let root = space.evaluate(&[]);
        if let Some(e) = space.confidence_objective(root, Vec::new()) {
            return Ok(Outcome::Found(build_result(&space, &e)));
        }
        let c = if space.features.is_empty() {
            BindingConstraint::NoMutableFeatures
        } else if space.threshold_ok(&root) {
            BindingConstraint::SameClass
        } else {
            BindingConstraint::Threshold
        };
        return Ok(infeasible(&rq, c, 1));
    }

    let seeds: Vec<_> = space
        .features
        .iter()
        .filter_map(|&j| analytic::candidate_in_space(&space, j))
        .collect();
    let search = space.branch_and_bound(rq.k, &seeds, |e| space.confidence_objective_of(e));
    match search.best {
        Some(best) => Ok(Outcome::Found(build_result(&space, &best))),
        None => {
            let c = if search.threshold_hits > 0 {
                BindingConstraint::SameClass
            } else {
                BindingConstraint::Threshold
            };
            Ok(infeasible(&rq, c, search.points))
        }
    }
}
