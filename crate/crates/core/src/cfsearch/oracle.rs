//! Brute-force reference solver.
//!
//! Enumerates every subset of at most `k` mutable features and every grid
//! value for each, scoring points through the public model API rather than
//! the search space's incremental evaluator.

use std::cmp::Ordering;

use itertools::Itertools;

use super::{
    infeasible, precheck, resolve, BindingConstraint, ChangedFeature, ConfidenceQuery,
    CounterfactualResult, Direction, Outcome,
};
use crate::data::{Instance, Value};
use crate::model::{sigmoid, LogisticModel};
use crate::{Error, Result};

/// Refuses to enumerate more points than this.
pub const ORACLE_GRID_LIMIT: u128 = 10_000_000;

struct Best {
    objective: f64,
    /// `(feature name, grid index)` sorted by name.
    key: Vec<(String, usize)>,
    x_prime: Instance,
    changed: Vec<ChangedFeature>,
    confidence: f64,
    probability: f64,
    distance: f64,
}

fn better(objective: f64, key: &[(String, usize)], best: &Best) -> bool {
    let ord = objective
        .total_cmp(&best.objective)
        .then(key.len().cmp(&best.key.len()))
        .then_with(|| {
            let a: Vec<&str> = key.iter().map(|(n, _)| n.as_str()).collect();
            let b: Vec<&str> = best.key.iter().map(|(n, _)| n.as_str()).collect();
            a.cmp(&b)
        })
        .then_with(|| {
            let a: Vec<usize> = key.iter().map(|&(_, g)| g).collect();
            let b: Vec<usize> = best.key.iter().map(|&(_, g)| g).collect();
            a.cmp(&b)
        });
    ord == Ordering::Less
}

pub fn oracle_solve(model: &LogisticModel, query: &ConfidenceQuery) -> Result<Outcome> {
    let rq = resolve(model, query)?;
    if let Some(c) = precheck(&rq) {
        return Ok(infeasible(&rq, c, 0));
    }
    let schema = &model.schema;
    let mad = &model.mad_weights;
    let x = &query.x;
    let factual_class = model.predict_class(x)?;

    // Per feature: every grid index except the factual value's.
    let features: Vec<usize> = rq
        .mutable
        .iter()
        .copied()
        .filter(|&j| mad.is_searchable(&schema.features[j].name))
        .collect();
    let choices: Vec<Vec<usize>> = features
        .iter()
        .map(|&j| {
            let f = &schema.features[j];
            let own = f.grid_index(x.get(&f.name).expect("checked instance"));
            (0..f.grid_len()).filter(|&g| Some(g) != own).collect()
        })
        .collect();

    let k = rq.k.min(features.len());
    let mut total: u128 = 1;
    for size in 1..=k {
        for subset in (0..features.len()).combinations(size) {
            total += subset.iter().map(|&i| choices[i].len() as u128).product::<u128>();
        }
    }
    if total > ORACLE_GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points: total,
            limit: ORACLE_GRID_LIMIT,
        });
    }

    let threshold_ok = |u: f64| match rq.direction {
        Direction::Increase => u >= rq.threshold + rq.epsilon,
        Direction::Decrease => u <= rq.threshold - rq.epsilon,
    };
    let mut best: Option<Best> = None;
    let mut points = 0u64;
    let mut hits = 0u64;
    let mut visit = |assignment: &[(usize, usize)]| {
        let mut xp = x.clone();
        let mut key = Vec::with_capacity(assignment.len());
        let mut changed = Vec::with_capacity(assignment.len());
        for &(j, g) in assignment {
            let f = &schema.features[j];
            let v = f.grid_value(g);
            changed.push(ChangedFeature {
                feature: f.name.clone(),
                old: x.get(&f.name).cloned().unwrap_or(Value::Number(f64::NAN)),
                new: v.clone(),
            });
            key.push((f.name.clone(), g));
            xp.set(&f.name, v);
        }
        key.sort();
        points += 1;
        let probability = sigmoid(model.logit_unchecked(&xp));
        let confidence = rq.measure.score(probability);
        if !threshold_ok(confidence) {
            return;
        }
        hits += 1;
        if model.class_of(probability) != factual_class {
            return;
        }
        let distance = mad.distance(schema, x, &xp);
        let objective = distance + (confidence - rq.threshold).abs();
        if best.as_ref().is_none_or(|b| better(objective, &key, b)) {
            best = Some(Best {
                objective,
                key,
                x_prime: xp,
                changed,
                confidence,
                probability,
                distance,
            });
        }
    };

    visit(&[]);
    for size in 1..=k {
        for subset in (0..features.len()).combinations(size) {
            for values in subset.iter().map(|&i| choices[i].iter().copied()).multi_cartesian_product() {
                let assignment: Vec<(usize, usize)> =
                    subset.iter().map(|&i| features[i]).zip(values).collect();
                visit(&assignment);
            }
        }
    }

    Ok(match best {
        Some(b) => {
            let class = model.class_of(b.probability);
            Outcome::Found(CounterfactualResult {
                feasible: true,
                x_prime: b.x_prime,
                confidence: b.confidence,
                probability: b.probability,
                predicted_class: class,
                predicted_label: schema.class_label(class).to_string(),
                changed: b.changed,
                distance: b.distance,
                objective: b.objective,
                threshold: rq.threshold,
                direction: rq.direction,
                measure: rq.measure,
            })
        }
        None => {
            let c = if features.is_empty() {
                BindingConstraint::NoMutableFeatures
            } else if hits > 0 {
                BindingConstraint::SameClass
            } else {
                BindingConstraint::Threshold
            };
            infeasible(&rq, c, points)
        }
    })
}
