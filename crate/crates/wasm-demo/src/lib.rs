//! Browser demo over the bundled Adult model. The functions here are plain
//! Rust returning JSON or SVG strings; `bindings` exports them to JS.

use std::sync::OnceLock;

use confex::cfsearch::{solve, ConfidenceQuery, Direction, Outcome};
use confex::data::{read_dataset, Instance};
use confex::explain::{render_profile_svg, render_sentence, render_table};
use confex::ice::ice_profile;
use confex::model::{ConfidenceMeasure, LogisticModel};
use serde::Serialize;

#[cfg(target_arch = "wasm32")]
mod bindings;

const MODEL: &str = include_str!("../../../data/adult_model.json");
const DATA: &str = include_str!("../../../data/adult_subset.csv");
/// Rows offered in the instance picker.
pub const SAMPLE_ROWS: usize = 25;

fn model() -> &'static LogisticModel {
    static MODEL_CELL: OnceLock<LogisticModel> = OnceLock::new();
    MODEL_CELL.get_or_init(|| LogisticModel::from_json(MODEL).expect("bundled model is valid"))
}

fn sample() -> &'static [Instance] {
    static ROWS: OnceLock<Vec<Instance>> = OnceLock::new();
    ROWS.get_or_init(|| {
        read_dataset(DATA.as_bytes(), &model().schema)
            .expect("bundled data is valid")
            .into_iter()
            .take(SAMPLE_ROWS)
            .map(|r| r.instance)
            .collect()
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn parse_instance(text: &str) -> Result<Instance, String> {
    let x = Instance::from_json(text).map_err(|e| e.to_string())?;
    model().schema.check_instance(&x).map_err(|e| e.to_string())?;
    Ok(x)
}

/// Feature list for building the controls.
pub fn schema_json() -> String {
    to_json(&model().schema).expect("schema serializes")
}

pub fn instances_json() -> String {
    to_json(&sample()).expect("instances serialize")
}

#[derive(Serialize)]
struct Prediction {
    probability: f64,
    class: String,
    confidence: f64,
}

pub fn predict(instance: &str) -> Result<String, String> {
    let x = parse_instance(instance)?;
    let m = model();
    let p = m.predict_proba(&x).map_err(|e| e.to_string())?;
    to_json(&Prediction {
        probability: p,
        class: m.schema.class_label(m.class_of(p)).to_string(),
        confidence: ConfidenceMeasure::Margin.score(p),
    })
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum Answer {
    Found {
        sentence: String,
        table: String,
        confidence: f64,
        changed: Vec<String>,
    },
    Infeasible {
        message: String,
    },
}

/// Solves a margin query. `mutable` is a comma-separated feature list;
/// empty means every mutable feature.
pub fn counterfactual(instance: &str, threshold: f64, direction: &str, mutable: &str, k: usize) -> Result<String, String> {
    let x = parse_instance(instance)?;
    let direction: Direction = direction.parse().map_err(|e: confex::Error| e.to_string())?;
    let mut q = ConfidenceQuery::new(x, threshold, direction).with_k(k);
    let names: Vec<&str> = mutable.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if !names.is_empty() {
        q = q.with_mutable(&names);
    }
    let m = model();
    let answer = match solve(m, &q).map_err(|e| e.to_string())? {
        Outcome::Found(r) => Answer::Found {
            sentence: render_sentence(m, &r).map_err(|e| e.to_string())?,
            table: render_table(m, &q.x, std::slice::from_ref(&r))
                .map_err(|e| e.to_string())?
                .to_text(),
            confidence: r.confidence,
            changed: r.changed.iter().map(|c| c.feature.clone()).collect(),
        },
        Outcome::Infeasible(report) => Answer::Infeasible {
            message: report.message,
        },
    };
    to_json(&answer)
}

/// ICE chart of the margin confidence for one feature.
pub fn ice_svg(instance: &str, feature: &str) -> Result<String, String> {
    let x = parse_instance(instance)?;
    let p = ice_profile(model(), &x, feature, ConfidenceMeasure::Margin).map_err(|e| e.to_string())?;
    render_profile_svg(&p, &p.predicted_class).map_err(|e| e.to_string())
}
