//! Task-prediction questionnaire: "for which of these three people does the
//! model predict with the highest confidence?", plus the answer scoring and
//! payout rules.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cfsearch::{solve, ConfidenceQuery, Direction};
use crate::data::{Instance, Value};
use crate::explain::{build_bundle, ExplanationBundle};
use crate::model::{ConfidenceMeasure, LogisticModel};
use crate::{Error, Result};

pub const DEFAULT_QUESTIONS: usize = 10;
pub const DEFAULT_MIN_GAP: f64 = 0.02;
pub const MAX_RESAMPLES: usize = 1000;
pub const BASE_PAY_CENTS: u32 = 700;
pub const BONUS_PER_POINT_CENTS: u32 = 20;
pub const BONUS_CAP_CENTS: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    #[default]
    Control,
    ExampleBased,
    VisualisationBased,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Control => "control",
            Condition::ExampleBased => "example_based",
            Condition::VisualisationBased => "visualisation_based",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "control" | "c" => Ok(Condition::Control),
            "example_based" | "example" | "e" => Ok(Condition::ExampleBased),
            "visualisation_based" | "visualization_based" | "visualisation" | "v" => {
                Ok(Condition::VisualisationBased)
            }
            other => Err(Error::query("condition", format!("unknown condition `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n: usize,
    pub seed: u64,
    pub condition: Condition,
    /// Minimum pairwise confidence difference among the three instances.
    pub min_gap: f64,
    /// Require all three instances to get the same predicted class.
    pub same_class: bool,
    pub measure: ConfidenceMeasure,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n: DEFAULT_QUESTIONS,
            seed: 0,
            condition: Condition::Control,
            min_gap: DEFAULT_MIN_GAP,
            same_class: true,
            measure: ConfidenceMeasure::Margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyQuestion {
    pub id: usize,
    pub condition: Condition,
    pub instances: Vec<Instance>,
    pub varied_features: Vec<String>,
    pub correct_index: usize,
    /// Shared prediction label, when all three instances agree.
    pub prediction: Option<String>,
    /// One bundle per varied feature; empty for the control condition.
    #[serde(default)]
    pub explanations: Vec<ExplanationBundle>,
}

fn random_value(rng: &mut ChaCha8Rng, model: &LogisticModel, j: usize) -> Value {
    let f = &model.schema.features[j];
    f.grid_value(rng.random_range(0..f.grid_len()))
}

fn random_instance(rng: &mut ChaCha8Rng, model: &LogisticModel, pool: &[Instance]) -> Instance {
    if let Some(x) = pool.choose(rng) {
        return x.clone();
    }
    let schema = &model.schema;
    (0..schema.features.len())
        .map(|j| (schema.features[j].name.clone(), random_value(rng, model, j)))
        .collect()
}

/// Single-feature counterfactuals on both sides of `U(x)`, as a bundle.
fn feature_bundle(model: &LogisticModel, x: &Instance, feature: &str, measure: ConfidenceMeasure) -> Result<Option<ExplanationBundle>> {
    let mut alts = Vec::new();
    for direction in [Direction::Decrease, Direction::Increase] {
        let q = ConfidenceQuery {
            threshold: None,
            ..ConfidenceQuery::new(x.clone(), 0.0, direction)
        }
        .with_mutable(&[feature])
        .with_k(1)
        .with_measure(measure);
        if let Some(r) = solve(model, &q)?.into_result() {
            alts.push(r);
        }
    }
    if alts.is_empty() {
        return Ok(None);
    }
    build_bundle(model, x, &alts).map(Some)
}

/// Tries once to build a question on `features`.
fn attempt(
    rng: &mut ChaCha8Rng,
    model: &LogisticModel,
    pool: &[Instance],
    features: &[usize],
    config: &StudyConfig,
) -> Result<Option<(Vec<Instance>, usize)>> {
    let base = random_instance(rng, model, pool);
    let mut instances: Vec<Instance> = Vec::with_capacity(3);
    let mut combos: Vec<Vec<Value>> = Vec::with_capacity(3);
    for _ in 0..3 {
        let combo: Vec<Value> = features.iter().map(|&j| random_value(rng, model, j)).collect();
        if combos.contains(&combo) {
            return Ok(None);
        }
        let mut x = base.clone();
        for (&j, v) in features.iter().zip(&combo) {
            x.set(&model.schema.features[j].name, v.clone());
        }
        combos.push(combo);
        instances.push(x);
    }
    let probs = instances
        .iter()
        .map(|x| model.predict_proba(x))
        .collect::<Result<Vec<_>>>()?;
    if config.same_class {
        let c0 = model.class_of(probs[0]);
        if probs.iter().any(|&p| model.class_of(p) != c0) {
            return Ok(None);
        }
    }
    let conf: Vec<f64> = probs.iter().map(|&p| config.measure.score(p)).collect();
    for a in 0..3 {
        for b in a + 1..3 {
            if (conf[a] - conf[b]).abs() < config.min_gap {
                return Ok(None);
            }
        }
    }
    let correct = (0..3)
        .max_by(|&a, &b| conf[a].total_cmp(&conf[b]))
        .expect("three instances");
    Ok(Some((instances, correct)))
}

/// Generates `config.n` questions. Base instances are drawn from `pool`, or
/// uniformly from the schema grid when `pool` is empty.
pub fn generate_questions(
    model: &LogisticModel,
    pool: &[Instance],
    config: &StudyConfig,
) -> Result<Vec<StudyQuestion>> {
    let schema = &model.schema;
    for x in pool {
        schema.check_instance(x)?;
    }
    if !(config.min_gap.is_finite() && config.min_gap >= 0.0) {
        return Err(Error::query("min_gap", "must be a finite non-negative number"));
    }
    let candidates: Vec<usize> = (0..schema.features.len())
        .filter(|&j| schema.features[j].mutable && schema.features[j].grid_len() >= 3)
        .filter(|&j| model.feature_weight_norm(&schema.features[j].name) > 0.0)
        .collect();
    if candidates.is_empty() {
        return Err(Error::Study("no mutable feature affects the prediction".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.n);
    for id in 1..=config.n {
        let count = if candidates.len() >= 2 && rng.random_bool(0.5) { 2 } else { 1 };
        let mut features: Vec<usize> = candidates.choose_multiple(&mut rng, count).copied().collect();
        features.sort_unstable();
        let names: Vec<String> = features.iter().map(|&j| schema.features[j].name.clone()).collect();

        let mut made = None;
        for _ in 0..MAX_RESAMPLES {
            let Some((instances, correct)) = attempt(&mut rng, model, pool, &features, config)? else {
                continue;
            };
            let explanations = if config.condition == Condition::Control {
                Vec::new()
            } else {
                let mut bundles = Vec::new();
                for name in &names {
                    match feature_bundle(model, &instances[0], name, config.measure)? {
                        Some(b) => bundles.push(b),
                        None => break,
                    }
                }
                if bundles.len() != names.len() {
                    continue;
                }
                bundles
            };
            made = Some((instances, correct, explanations));
            break;
        }
        let Some((instances, correct_index, explanations)) = made else {
            return Err(Error::Study(format!(
                "could not separate confidences by {} varying {} after {MAX_RESAMPLES} samples",
                config.min_gap,
                names.join(" and ")
            )));
        };
        let classes = instances
            .iter()
            .map(|x| model.predict_class(x))
            .collect::<Result<Vec<_>>>()?;
        let prediction = classes
            .iter()
            .all(|c| *c == classes[0])
            .then(|| schema.class_label(classes[0]).to_string());
        out.push(StudyQuestion {
            id,
            condition: config.condition,
            instances,
            varied_features: names,
            correct_index,
            prediction,
            explanations,
        });
    }
    Ok(out)
}

/// A 0-based instance index, or "don't know". In JSON an index is a number
/// and "don't know" is the string `dont_know`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Index(usize),
    DontKnow,
}

impl Serialize for Choice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Choice::Index(i) => s.serialize_u64(*i as u64),
            Choice::DontKnow => s.serialize_str("dont_know"),
        }
    }
}

impl<'de> Deserialize<'de> for Choice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(Choice::Index(i)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Index(i) => write!(f, "{i}"),
            Choice::DontKnow => f.write_str("dont_know"),
        }
    }
}

impl FromStr for Choice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("dont_know") || s.eq_ignore_ascii_case("don't know") {
            return Ok(Choice::DontKnow);
        }
        s.parse()
            .map(Choice::Index)
            .map_err(|_| Error::query("choice", format!("expected 0, 1, 2 or dont_know, got `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub question_id: usize,
    pub choice: Choice,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSheet {
    pub participant_id: String,
    pub answers: Vec<Answer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub score: i64,
    pub correct: usize,
    pub wrong: usize,
    pub dont_know: usize,
    pub payout_cents: u32,
}

impl ScoreReport {
    pub fn payout_usd(&self) -> String {
        format!("{}.{:02}", self.payout_cents / 100, self.payout_cents % 100)
    }
}

/// $7.00 plus $0.20 per point above zero, bonus capped at $2.00.
pub fn payout_cents(score: i64) -> u32 {
    let points = u32::try_from(score.max(0)).unwrap_or(u32::MAX);
    BASE_PAY_CENTS + BONUS_CAP_CENTS.min(points.saturating_mul(BONUS_PER_POINT_CENTS))
}

/// +1 per correct answer, -2 per wrong one, 0 for "don't know".
pub fn score(sheet: &AnswerSheet, questions: &[StudyQuestion]) -> Result<ScoreReport> {
    if sheet.answers.len() != questions.len() {
        return Err(Error::Study(format!(
            "{} answers for {} questions",
            sheet.answers.len(),
            questions.len()
        )));
    }
    let (mut correct, mut wrong, mut dont_know) = (0, 0, 0);
    for answer in &sheet.answers {
        let q = questions
            .iter()
            .find(|q| q.id == answer.question_id)
            .ok_or_else(|| Error::Study(format!("no question with id {}", answer.question_id)))?;
        match answer.choice {
            Choice::DontKnow => dont_know += 1,
            Choice::Index(i) if i >= q.instances.len() => {
                return Err(Error::Study(format!(
                    "question {}: choice {i} is out of range",
                    q.id
                )))
            }
            Choice::Index(i) if i == q.correct_index => correct += 1,
            Choice::Index(_) => wrong += 1,
        }
    }
    let mut seen: Vec<usize> = sheet.answers.iter().map(|a| a.question_id).collect();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != sheet.answers.len() {
        return Err(Error::Study("a question is answered more than once".into()));
    }
    let score = correct as i64 - 2 * wrong as i64;
    Ok(ScoreReport {
        score,
        correct,
        wrong,
        dont_know,
        payout_cents: payout_cents(score),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct AnswerRow {
    question_id: usize,
    choice: String,
    #[serde(default)]
    rationale: String,
}

/// Reads `question_id,choice,rationale` rows.
pub fn read_answers<R: Read>(reader: R, participant_id: &str) -> Result<AnswerSheet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::Headers).from_reader(reader);
    let mut answers = Vec::new();
    for (i, row) in rdr.deserialize::<AnswerRow>().enumerate() {
        let row = row.map_err(|e| Error::Row {
            row: i + 2,
            message: e.to_string(),
        })?;
        answers.push(Answer {
            question_id: row.question_id,
            choice: row.choice.parse()?,
            rationale: row.rationale,
        });
    }
    Ok(AnswerSheet {
        participant_id: participant_id.to_string(),
        answers,
    })
}

pub fn write_answers<W: Write>(writer: W, sheet: &AnswerSheet) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for a in &sheet.answers {
        w.serialize(AnswerRow {
            question_id: a.question_id,
            choice: a.choice.to_string(),
            rationale: a.rationale.clone(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `participant_id,score,payout` rows, payout in dollars.
pub fn write_scores<W: Write>(writer: W, scores: &[(String, ScoreReport)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["participant_id", "score", "payout"])?;
    for (id, s) in scores {
        w.write_record([id.as_str(), &s.score.to_string(), &s.payout_usd()])?;
    }
    w.flush()?;
    Ok(())
}
