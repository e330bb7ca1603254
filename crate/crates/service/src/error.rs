use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no session `{0}`")]
    NotFound(String),

    #[error("{0}")]
    Conflict(String),

    #[error("{message}")]
    Invalid { field: Option<String>, message: String },

    #[error("corrupt event log for session `{id}`: {reason}")]
    CorruptLog { id: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ServiceError {
    pub fn invalid(field: Option<&str>, message: impl Into<String>) -> Self {
        ServiceError::Invalid {
            field: field.map(str::to_string),
            message: message.into(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Invalid { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn body(&self) -> ErrorBody {
        let code = match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::Invalid { .. } => "invalid",
            _ => "internal",
        };
        ErrorBody {
            code: code.to_string(),
            message: self.to_string(),
            field: match self {
                ServiceError::Invalid { field, .. } => field.clone(),
                _ => None,
            },
        }
    }
}

impl From<iemo::Error> for ServiceError {
    fn from(e: iemo::Error) -> Self {
        match e {
            iemo::Error::InvalidConfig { field, reason } => ServiceError::Invalid {
                message: format!("invalid value for `{field}`: {reason}"),
                field: Some(field),
            },
            iemo::Error::Io(io) => ServiceError::Io(io),
            other => ServiceError::invalid(None, other.to_string()),
        }
    }
}

/// Wire shape of every error response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status() == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{self}");
        }
        (self.status(), Json(self.body())).into_response()
    }
}
