use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::Uri;
use axum::Json;
use confex::cfsearch::{solve, ConfidenceQuery, CounterfactualResult, Direction, Outcome};
use confex::data::{DatasetSchema, Instance};
use confex::explain::ExplanationBundle;
use confex::ice::{ice_profile, IceProfile};
use confex::model::ConfidenceMeasure;
use confex::study::{self, AnswerSheet, Condition, ScoreReport, StudyConfig, StudyQuestion};
use confex::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::SessionState;

type Shared = State<Arc<SessionState>>;
type ApiResult<T> = Result<Json<T>, ApiError>;

pub const DEFAULT_INSTANCE_LIMIT: usize = 20;
pub const DEFAULT_ALTERNATIVES: usize = 2;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    if body.is_empty() {
        return Err(Error::query("body", "expected a JSON object").into());
    }
    Ok(serde_json::from_slice(body)?)
}

fn query_error(e: QueryRejection) -> ApiError {
    Error::query("query", e.body_text()).into()
}

/// CPU-bound work runs off the async workers.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

impl SessionState {
    /// An instance given by value, or a dataset row by id.
    fn instance(&self, x: Option<Instance>, id: Option<usize>) -> Result<Instance, ApiError> {
        let x = match (x, id) {
            (Some(x), None) => x,
            (None, Some(id)) => self
                .rows
                .get(id)
                .map(|r| r.instance.clone())
                .ok_or_else(|| Error::query("instance_id", format!("no row {id}; {} rows loaded", self.rows.len())))?,
            (Some(_), Some(_)) => return Err(Error::query("x", "give either `x` or `instance_id`, not both").into()),
            (None, None) => return Err(Error::query("x", "an instance `x` or `instance_id` is required").into()),
        };
        self.model.schema.check_instance(&x)?;
        Ok(x)
    }
}

pub async fn not_found(uri: Uri) -> ApiError {
    ApiError::NotFound(format!("no route for {}", uri.path()))
}

#[derive(Serialize)]
pub struct SchemaResponse<'a> {
    pub schema: &'a DatasetSchema,
    pub schema_digest: &'a str,
    pub decision_boundary: f64,
    pub rows: usize,
}

pub async fn schema(State(s): Shared) -> Json<serde_json::Value> {
    let body = SchemaResponse {
        schema: &s.model.schema,
        schema_digest: &s.schema_digest,
        decision_boundary: s.model.decision_boundary,
        rows: s.rows.len(),
    };
    Json(serde_json::to_value(body).expect("schema serializes"))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstancesParams {
    limit: Option<usize>,
    #[serde(default)]
    offset: usize,
}

#[derive(Serialize)]
pub struct Row {
    pub id: usize,
    pub x: Instance,
    /// The dataset label, not the prediction.
    pub label: String,
}

pub async fn instances(
    State(s): Shared,
    params: Result<Query<InstancesParams>, QueryRejection>,
) -> ApiResult<Vec<Row>> {
    let Query(p) = params.map_err(query_error)?;
    let limit = p.limit.unwrap_or(DEFAULT_INSTANCE_LIMIT);
    let schema = &s.model.schema;
    let rows = s
        .rows
        .iter()
        .enumerate()
        .skip(p.offset)
        .take(limit)
        .map(|(id, r)| Row {
            id,
            x: r.instance.clone(),
            label: if r.positive {
                schema.positive_label.clone()
            } else {
                schema.negative_label.clone()
            },
        })
        .collect();
    Ok(Json(rows))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    x: Option<Instance>,
    instance_id: Option<usize>,
}

#[derive(Serialize)]
pub struct Prediction {
    pub probability: f64,
    /// Predicted label from the schema.
    pub class: String,
    pub positive: bool,
    pub confidences: BTreeMap<&'static str, f64>,
}

pub async fn predict(State(s): Shared, body: Bytes) -> ApiResult<Prediction> {
    let req: PredictRequest = parse(&body)?;
    let x = s.instance(req.x, req.instance_id)?;
    let p = s.model.predict_proba(&x)?;
    let class = s.model.class_of(p);
    Ok(Json(Prediction {
        probability: p,
        class: s.model.schema.class_label(class).to_string(),
        positive: class == confex::model::Class::Positive,
        confidences: ConfidenceMeasure::ALL
            .iter()
            .map(|m| (m.as_str(), m.score(p)))
            .collect(),
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    x: Option<Instance>,
    instance_id: Option<usize>,
    threshold: Option<f64>,
    direction: Direction,
    mutable_features: Option<Vec<String>>,
    max_changed: Option<usize>,
    epsilon: Option<f64>,
    measure: Option<ConfidenceMeasure>,
    /// Only read by `/explain`.
    alternatives: Option<usize>,
}

impl QueryRequest {
    fn into_query(self, s: &SessionState) -> Result<(ConfidenceQuery, Option<usize>), ApiError> {
        let x = s.instance(self.x, self.instance_id)?;
        let mut q = ConfidenceQuery::new(x, 0.0, self.direction);
        q.threshold = self.threshold;
        q.mutable_features = self.mutable_features;
        if let Some(k) = self.max_changed {
            q.max_changed = k;
        }
        if let Some(e) = self.epsilon {
            q.epsilon = e;
        }
        if let Some(m) = self.measure {
            q.measure = m;
        }
        Ok((q, self.alternatives))
    }
}

pub async fn counterfactual(State(s): Shared, body: Bytes) -> ApiResult<CounterfactualResult> {
    let req: QueryRequest = parse(&body)?;
    blocking(move || {
        let (q, alternatives) = req.into_query(&s)?;
        if alternatives.is_some() {
            return Err(Error::query("alternatives", "only used by /explain").into());
        }
        match solve(&s.model, &q)? {
            Outcome::Found(r) => Ok(Json(r)),
            Outcome::Infeasible(report) => Err(ApiError::Infeasible(report)),
        }
    })
    .await
}

pub async fn explain(State(s): Shared, body: Bytes) -> ApiResult<ExplanationBundle> {
    let req: QueryRequest = parse(&body)?;
    blocking(move || {
        let (q, alternatives) = req.into_query(&s)?;
        let n = alternatives.unwrap_or(DEFAULT_ALTERNATIVES);
        if n == 0 {
            return Err(Error::query("alternatives", "must be at least 1").into());
        }
        match confex::explain::explain(&s.model, &q, n)? {
            Ok(bundle) => Ok(Json(bundle)),
            Err(report) => Err(ApiError::Infeasible(report)),
        }
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IceParams {
    feature: String,
    measure: Option<ConfidenceMeasure>,
    instance_id: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IceRequest {
    feature: String,
    measure: Option<ConfidenceMeasure>,
    x: Option<Instance>,
    instance_id: Option<usize>,
}

fn profile(s: &SessionState, req: IceRequest) -> ApiResult<IceProfile> {
    let x = s.instance(req.x, req.instance_id)?;
    let measure = req.measure.unwrap_or_default();
    Ok(Json(ice_profile(&s.model, &x, &req.feature, measure)?))
}

pub async fn ice_get(
    State(s): Shared,
    params: Result<Query<IceParams>, QueryRejection>,
) -> ApiResult<IceProfile> {
    let Query(p) = params.map_err(query_error)?;
    profile(
        &s,
        IceRequest {
            feature: p.feature,
            measure: p.measure,
            x: None,
            instance_id: p.instance_id,
        },
    )
}

pub async fn ice_post(State(s): Shared, body: Bytes) -> ApiResult<IceProfile> {
    profile(&s, parse(&body)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequest {
    n: Option<usize>,
    seed: Option<u64>,
    condition: Option<String>,
    min_gap: Option<f64>,
    same_class: Option<bool>,
    measure: Option<ConfidenceMeasure>,
}

pub async fn study_generate(State(s): Shared, body: Bytes) -> ApiResult<Vec<StudyQuestion>> {
    let req: GenerateRequest = parse(&body)?;
    blocking(move || {
        let defaults = StudyConfig::default();
        let config = StudyConfig {
            n: req.n.unwrap_or(defaults.n),
            seed: req.seed.unwrap_or(defaults.seed),
            condition: match req.condition {
                Some(c) => c.parse::<Condition>()?,
                None => defaults.condition,
            },
            min_gap: req.min_gap.unwrap_or(defaults.min_gap),
            same_class: req.same_class.unwrap_or(defaults.same_class),
            measure: req.measure.unwrap_or(defaults.measure),
        };
        let pool: Vec<Instance> = s.rows.iter().map(|r| r.instance.clone()).collect();
        Ok(Json(study::generate_questions(&s.model, &pool, &config)?))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    questions: Vec<StudyQuestion>,
    sheet: AnswerSheet,
}

#[derive(Serialize)]
pub struct ScoreResponse {
    pub participant_id: String,
    #[serde(flatten)]
    pub report: ScoreReport,
    pub payout: String,
}

pub async fn study_score(State(_): Shared, body: Bytes) -> ApiResult<ScoreResponse> {
    let req: ScoreRequest = parse(&body)?;
    let report = study::score(&req.sheet, &req.questions)?;
    Ok(Json(ScoreResponse {
        participant_id: req.sheet.participant_id,
        payout: report.payout_usd(),
        report,
    }))
}
