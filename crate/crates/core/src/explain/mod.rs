//! Human-facing renderings of counterfactual results: a one-line sentence,
//! an example table in the "Alternative 1 .. Original" layout, and SVG
//! charts of ICE profiles.

mod svg;
mod table;

use serde::{Deserialize, Serialize};

pub use svg::render_profile_svg;
pub use table::{render_table, ExplanationTable, TableRow};

use crate::cfsearch::{
    solve, ConfidenceQuery, CounterfactualResult, Direction, InfeasibleReport, Outcome,
};
use crate::data::Value;
use crate::ice::{ice_profile, IceProfile};
use crate::model::LogisticModel;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Confidence as a percentage with one decimal, rounding half to even:
/// `0.578` becomes `57.8%`.
pub fn format_percent(u: f64) -> String {
    format!("{:.1}%", round_permille(u) / 10.0)
}

/// Like [`format_percent`] but without a trailing `.0`, the way targets are
/// usually stated (`45%`).
pub fn format_threshold(t: f64) -> String {
    let p = round_permille(t);
    if p % 10.0 == 0.0 {
        format!("{}%", p / 10.0)
    } else {
        format!("{:.1}%", p / 10.0)
    }
}

fn round_permille(u: f64) -> f64 {
    let r = (u * 1000.0).round_ties_even();
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn clause(model: &LogisticModel, feature: &str, old: &Value, new: &Value) -> String {
    let article = match model.schema.feature(feature).map(|f| f.is_categorical()) {
        Ok(false) => "the value",
        _ => "value",
    };
    format!("{feature} had taken {article} {new} rather than {old}")
}

/// `One way you could have got a confidence score of less than 45% (30.1%)
/// instead is if Occupation had taken value Manager rather than Service.`
///
/// When `U(x')` displays the same as `T`, the comparison and the
/// parenthetical are dropped. Continuous values read "the value 400".
pub fn render_sentence(model: &LogisticModel, result: &CounterfactualResult) -> Result<String> {
    if !result.feasible {
        return Err(Error::Render("cannot narrate an infeasible result".into()));
    }
    if result.changed.is_empty() {
        return Err(Error::Render("no feature changed".into()));
    }
    let target = format_threshold(result.threshold);
    let achieved = format_percent(result.confidence);
    let score = if achieved == format_percent(result.threshold) {
        target
    } else {
        let cmp = match result.direction {
            Direction::Increase => "greater",
            Direction::Decrease => "less",
        };
        format!("{cmp} than {target} ({achieved})")
    };
    let clauses: Vec<String> = result
        .changed
        .iter()
        .map(|c| clause(model, &c.feature, &c.old, &c.new))
        .collect();
    Ok(format!(
        "One way you could have got a confidence score of {score} instead is if {}.",
        clauses.join(" and ")
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationBundle {
    pub format_version: u32,
    pub sentence: String,
    pub table: ExplanationTable,
    /// One profile per changed feature of the first alternative.
    pub profiles: Vec<IceProfile>,
    /// SVG charts matching `profiles`.
    pub svgs: Vec<String>,
}

/// The optimal counterfactual followed by the best single-feature
/// counterfactuals of the mutable features, by objective, `n` at most.
/// An infeasible optimum is returned as the solver's report.
pub fn collect_alternatives(
    model: &LogisticModel,
    query: &ConfidenceQuery,
    n: usize,
) -> Result<Result<Vec<CounterfactualResult>, InfeasibleReport>> {
    let first = match solve(model, query)? {
        Outcome::Found(r) => r,
        Outcome::Infeasible(report) => return Ok(Err(report)),
    };
    let mut out = vec![first];
    if n <= 1 {
        return Ok(Ok(out));
    }
    let mutable = crate::cfsearch::resolve_mutable(model, query.mutable_features.as_deref())?;
    let mut extra = Vec::new();
    for j in mutable {
        let name = model.schema.features[j].name.clone();
        let q = ConfidenceQuery {
            mutable_features: Some(vec![name]),
            max_changed: 1,
            ..query.clone()
        };
        if let Outcome::Found(r) = solve(model, &q)? {
            extra.push(r);
        }
    }
    extra.sort_by(|a, b| a.objective.total_cmp(&b.objective));
    for r in extra {
        if out.len() >= n {
            break;
        }
        if out.iter().all(|o| o.x_prime != r.x_prime) {
            out.push(r);
        }
    }
    Ok(Ok(out))
}

/// Sentence, table and charts for a set of alternatives (the first one is
/// narrated and profiled).
pub fn build_bundle(
    model: &LogisticModel,
    original: &crate::data::Instance,
    alternatives: &[CounterfactualResult],
) -> Result<ExplanationBundle> {
    let first = alternatives
        .first()
        .ok_or_else(|| Error::Render("no alternatives to explain".into()))?;
    let sentence = render_sentence(model, first)?;
    let table = render_table(model, original, alternatives)?;
    let mut profiles = Vec::new();
    let mut svgs = Vec::new();
    for c in &first.changed {
        let p = ice_profile(model, original, &c.feature, first.measure)?;
        svgs.push(render_profile_svg(&p, &table.prediction)?);
        profiles.push(p);
    }
    Ok(ExplanationBundle {
        format_version: FORMAT_VERSION,
        sentence,
        table,
        profiles,
        svgs,
    })
}

/// Solves `query` and explains up to `n` alternatives. Infeasible queries
/// come back as the solver's report.
pub fn explain(
    model: &LogisticModel,
    query: &ConfidenceQuery,
    n: usize,
) -> Result<Result<ExplanationBundle, InfeasibleReport>> {
    match collect_alternatives(model, query, n)? {
        Ok(alts) => Ok(Ok(build_bundle(model, &query.x, &alts)?)),
        Err(report) => Ok(Err(report)),
    }
}
