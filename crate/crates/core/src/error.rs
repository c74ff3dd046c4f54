use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("feature `{feature}`: {message}")]
    InvalidValue { feature: String, message: String },

    #[error("insufficient data: {0}")]
    Data(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("invalid query field `{field}`: {message}")]
    InvalidQuery { field: String, message: String },

    #[error("search grid has {points} points, limit is {limit}")]
    GridTooLarge { points: u128, limit: u128 },

    #[error("cannot render: {0}")]
    Render(String),

    #[error("study: {0}")]
    Study(String),

    #[error("model was trained on a different schema (digest {expected}, got {actual})")]
    SchemaMismatch { expected: String, actual: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable code, used by the HTTP layer.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Schema(_) => "invalid_schema",
            Error::MissingColumn(_) => "missing_column",
            Error::Row { .. } => "invalid_row",
            Error::InvalidValue { .. } => "invalid_value",
            Error::Data(_) => "insufficient_data",
            Error::UnknownFeature(_) => "unknown_feature",
            Error::Training(_) => "training_failed",
            Error::InvalidQuery { .. } => "invalid_query",
            Error::GridTooLarge { .. } => "grid_too_large",
            Error::Render(_) => "render_failed",
            Error::Study(_) => "study_failed",
            Error::SchemaMismatch { .. } => "schema_mismatch",
            Error::Io(_) => "io",
            Error::Json(_) => "invalid_json",
            Error::Csv(_) => "invalid_csv",
        }
    }

    /// The offending field or feature name, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::MissingColumn(f) | Error::UnknownFeature(f) => Some(f),
            Error::InvalidValue { feature, .. } => Some(feature),
            Error::InvalidQuery { field, .. } => Some(field),
            _ => None,
        }
    }

    pub fn query(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidQuery {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn value(feature: &str, message: impl Into<String>) -> Self {
        Error::InvalidValue {
            feature: feature.to_string(),
            message: message.into(),
        }
    }
}
