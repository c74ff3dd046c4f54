//! JSON HTTP API over the confex engine. Every handler is a pure function of
//! the read-only [`SessionState`] and the request.

mod api;
mod error;
mod openapi;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::http::{header, HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use confex::data::{load_dataset, DatasetSchema, Labeled};
use confex::model::LogisticModel;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::{ApiError, ErrorBody};

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub port: u16,
    pub model_path: PathBuf,
    /// Checked against the schema embedded in the model when given.
    pub schema_path: Option<PathBuf>,
    /// Rows offered by `/instances` and used as the study pool.
    pub data_path: Option<PathBuf>,
    /// Allowed browser origins. Empty means localhost on any port.
    pub cors_origins: Vec<String>,
}

impl ServiceConfig {
    pub fn new(model_path: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            port: DEFAULT_PORT,
            model_path: model_path.into(),
            schema_path: None,
            data_path: None,
            cors_origins: Vec::new(),
        }
    }
}

#[derive(Debug)]
pub struct SessionState {
    pub model: LogisticModel,
    pub schema_digest: String,
    pub rows: Vec<Labeled>,
}

impl SessionState {
    pub fn new(model: LogisticModel, rows: Vec<Labeled>) -> confex::Result<Self> {
        model.validate()?;
        for r in &rows {
            model.schema.check_instance(&r.instance)?;
        }
        Ok(SessionState {
            schema_digest: model.schema.digest(),
            model,
            rows,
        })
    }

    pub fn load(config: &ServiceConfig) -> confex::Result<Self> {
        let model = LogisticModel::load(&config.model_path)?;
        let schema = match &config.schema_path {
            Some(path) => {
                let schema = DatasetSchema::load(path)?;
                model.check_schema(&schema)?;
                schema
            }
            None => model.schema.clone(),
        };
        let rows = match &config.data_path {
            Some(path) => load_dataset(path, &schema)?,
            None => Vec::new(),
        };
        Self::new(model, rows)
    }
}

fn is_localhost(origin: &HeaderValue) -> bool {
    let Ok(s) = origin.to_str() else {
        return false;
    };
    let rest = s
        .strip_prefix("http://")
        .or_else(|| s.strip_prefix("https://"))
        .unwrap_or("");
    let host = rest.split(':').next().unwrap_or("");
    matches!(host, "localhost" | "127.0.0.1" | "[::1]")
}

fn cors(origins: &[String]) -> CorsLayer {
    let allow = if origins.is_empty() {
        AllowOrigin::predicate(|o, _| is_localhost(o))
    } else {
        AllowOrigin::list(origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()))
    };
    CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE])
}

pub fn router(state: Arc<SessionState>) -> Router {
    Router::new()
        .route("/schema", get(api::schema))
        .route("/instances", get(api::instances))
        .route("/predict", post(api::predict))
        .route("/counterfactual", post(api::counterfactual))
        .route("/ice", get(api::ice_get).post(api::ice_post))
        .route("/explain", post(api::explain))
        .route("/study/generate", post(api::study_generate))
        .route("/study/score", post(api::study_score))
        .route("/openapi.json", get(openapi::document))
        .fallback(api::not_found)
        .with_state(state)
}

/// The router with the CORS policy from `origins` applied.
pub fn app(state: Arc<SessionState>, origins: &[String]) -> Router {
    router(state).layer(cors(origins))
}

/// Loads the session and serves until ctrl-c.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let state = Arc::new(SessionState::load(&config)?);
    log::info!(
        "model with {} features, schema {}, {} rows",
        state.model.schema.features.len(),
        &state.schema_digest[..12],
        state.rows.len()
    );
    let addr = SocketAddr::from(([127, 0, 0, 1], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app(state, &config.cors_origins))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
