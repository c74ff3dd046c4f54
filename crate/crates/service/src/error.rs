use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use confex::cfsearch::InfeasibleReport;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug)]
pub enum ApiError {
    Core(confex::Error),
    /// A valid query with no admissible answer.
    Infeasible(InfeasibleReport),
    NotFound(String),
    Internal(String),
}

impl From<confex::Error> for ApiError {
    fn from(e: confex::Error) -> Self {
        ApiError::Core(e)
    }
}

impl From<serde_json::Error> for ApiError {
    fn from(e: serde_json::Error) -> Self {
        ApiError::Core(confex::Error::Json(e))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::Infeasible(report) => (StatusCode::UNPROCESSABLE_ENTITY, Json(report)).into_response(),
            ApiError::Core(e) => {
                let status = match e {
                    confex::Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
                    _ => StatusCode::BAD_REQUEST,
                };
                let body = ErrorBody {
                    code: e.code().to_string(),
                    message: e.to_string(),
                    field: e.field().map(str::to_string),
                };
                (status, Json(body)).into_response()
            }
            ApiError::NotFound(message) => {
                let body = ErrorBody {
                    code: "not_found".into(),
                    message,
                    field: None,
                };
                (StatusCode::NOT_FOUND, Json(body)).into_response()
            }
            ApiError::Internal(message) => {
                log::error!("{message}");
                let body = ErrorBody {
                    code: "internal".into(),
                    message,
                    field: None,
                };
                (StatusCode::INTERNAL_SERVER_ERROR, Json(body)).into_response()
            }
        }
    }
}
