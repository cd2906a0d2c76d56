use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;

use aerolift_core::refine::RefineError;
use aerolift_core::sceneio::SceneIoError;
use aerolift_core::viewpoint::ViewError;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("expected revision {expected}, store is at {current}")]
    Conflict { expected: u64, current: u64 },
    #[error("{0}")]
    Internal(String),
}

impl From<RefineError> for ApiError {
    fn from(e: RefineError) -> Self {
        match e {
            RefineError::UnknownTrack(_) | RefineError::Unannotated { .. } => ApiError::NotFound(e.to_string()),
            _ => ApiError::BadRequest(e.to_string()),
        }
    }
}

impl From<ViewError> for ApiError {
    fn from(e: ViewError) -> Self {
        match e {
            ViewError::UnknownTrack(_) => ApiError::NotFound(e.to_string()),
            _ => ApiError::BadRequest(e.to_string()),
        }
    }
}

impl From<SceneIoError> for ApiError {
    fn from(e: SceneIoError) -> Self {
        if e.is_io() {
            ApiError::Internal(e.to_string())
        } else {
            ApiError::BadRequest(e.to_string())
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let message = self.to_string();
        match self {
            ApiError::Conflict { current, .. } => {
                (StatusCode::CONFLICT, Json(json!({ "error": message, "current_revision": current }))).into_response()
            }
            ApiError::NotFound(_) => (StatusCode::NOT_FOUND, Json(json!({ "error": message }))).into_response(),
            ApiError::BadRequest(_) => (StatusCode::BAD_REQUEST, Json(json!({ "error": message }))).into_response(),
            ApiError::Internal(_) => {
                log::error!("{message}");
                (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({ "error": message }))).into_response()
            }
        }
    }
}

/// Errors that stop the service from starting.
#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot open scene: {0}")]
    Scene(#[from] SceneIoError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server stopped: {0}")]
    Serve(std::io::Error),
}
