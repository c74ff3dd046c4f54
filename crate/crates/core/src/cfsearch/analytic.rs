//! Single-feature fast path.
//!
//! With one continuous feature moving, the logit is linear in its value, and
//! every confidence measure is a function of `|y|`. The threshold therefore
//! maps to a logit magnitude `m` (for margin, `m = 2 atanh(T)`), and the
//! nearest value reaching it can be solved for directly and snapped to the
//! grid.

use super::space::{Cand, SearchSpace};
use super::{build_result, resolve, ConfidenceQuery, CounterfactualResult, Direction};
use crate::data::FeatureKind;
use crate::model::LogisticModel;
use crate::{Error, Result};

/// Nearest admissible grid value of `feature` that satisfies the query with
/// every other feature held fixed. `None` when the feature has no effect or
/// the threshold cannot be reached along it.
pub fn analytic_single_feature(
    model: &LogisticModel,
    query: &ConfidenceQuery,
    feature: &str,
) -> Result<Option<CounterfactualResult>> {
    let rq = resolve(model, query)?;
    let j = model.schema.index_of(feature)?;
    if model.schema.features[j].is_categorical() {
        return Err(Error::query("feature", format!("`{feature}` is not continuous")));
    }
    if !rq.mutable.contains(&j) {
        return Err(Error::query("feature", format!("`{feature}` is not mutable in this query")));
    }
    let space = SearchSpace::with_features(
        model,
        &query.x,
        &[j],
        rq.threshold,
        rq.epsilon,
        rq.direction,
        rq.measure,
    );
    if space.features.is_empty() {
        return Ok(None);
    }
    Ok(continuous_candidate(&space, j).and_then(|changes| {
        let p = space.evaluate(&changes);
        space
            .confidence_objective(p, changes)
            .map(|e| build_result(&space, &e))
    }))
}

/// Seed for the exact search: the analytic point for a continuous feature,
/// the best single level for a categorical one.
pub(crate) fn candidate_in_space(space: &SearchSpace<'_>, j: usize) -> Option<Vec<(usize, Cand)>> {
    if space.model.schema.features[j].is_categorical() {
        let mut best: Option<(f64, Cand)> = None;
        for cand in space.grid_candidates(j) {
            let p = space.evaluate_iter(std::iter::once((j, &cand)));
            if let Some(obj) = space.confidence_objective_of(&p) {
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, cand));
                }
            }
        }
        best.map(|(_, c)| vec![(j, c)])
    } else {
        continuous_candidate(space, j)
    }
}

fn continuous_candidate(space: &SearchSpace<'_>, j: usize) -> Option<Vec<(usize, Cand)>> {
    let model = space.model;
    let f = &model.schema.features[j];
    let FeatureKind::Continuous { c_min, step, .. } = f.kind else {
        return None;
    };
    // Logit change per unit of the feature in original units.
    let slope = model.weights[model.encoding[&f.name][0]] / model.standardization[&f.name].scale;
    if slope == 0.0 || !slope.is_finite() {
        return None;
    }
    let root = space.evaluate(&[]);
    if space.confidence_objective_of(&root).is_some() {
        return Some(Vec::new());
    }
    let target = match space.direction {
        Direction::Increase => space.threshold + space.epsilon,
        Direction::Decrease => space.threshold - space.epsilon,
    };
    let m = space.measure.logit_magnitude(target)?;
    let sign = if root.logit >= 0.0 { 1.0 } else { -1.0 };
    let delta = (sign * m - root.logit) / slope;
    let xj = space.factual[j].as_number()?;
    let upward = delta > 0.0;

    let n = f.grid_len();
    let pos = ((xj + delta - c_min) / step).floor();
    let clamp = |g: f64| g.clamp(0.0, (n - 1) as f64) as usize;
    let order: Box<dyn Iterator<Item = usize>> = if upward {
        Box::new(clamp(pos - 1.0)..n)
    } else {
        Box::new((0..=clamp(pos + 2.0)).rev())
    };
    for g in order {
        let cand = space.make_cand(j, g);
        let v = cand.value.as_number()?;
        if (upward && v <= xj) || (!upward && v >= xj) {
            continue;
        }
        let p = space.evaluate_iter(std::iter::once((j, &cand)));
        if space.confidence_objective_of(&p).is_some() {
            return Some(vec![(j, cand)]);
        }
        if p.class != space.factual_class {
            return None;
        }
    }
    None
}
