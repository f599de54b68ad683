use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use thiserror::Error;
use whatif_core::{CamError, ImageError, InpaintError, ModelError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("session not found")]
    NotFound,
    #[error("{0}")]
    BadRequest(String),
    #[error("image too large: {width}x{height} exceeds the {max} pixel limit")]
    TooLarge { width: usize, height: usize, max: usize },
    #[error("{0}")]
    Unprocessable(String),
    #[error("session is busy with another edit")]
    Busy,
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            Self::NotFound => StatusCode::NOT_FOUND,
            Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::TooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            Self::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Self::Busy => StatusCode::CONFLICT,
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<ImageError> for ServiceError {
    fn from(e: ImageError) -> Self {
        match e {
            ImageError::Encode(_) => Self::Internal(e.to_string()),
            _ => Self::BadRequest(e.to_string()),
        }
    }
}

impl From<InpaintError> for ServiceError {
    fn from(e: InpaintError) -> Self {
        match e {
            InpaintError::Dims { .. } | InpaintError::InvalidParams(_) => Self::BadRequest(e.to_string()),
            InpaintError::AllUnknown | InpaintError::NoSource { .. } => Self::Unprocessable(e.to_string()),
        }
    }
}

impl From<ModelError> for ServiceError {
    fn from(e: ModelError) -> Self {
        Self::Internal(e.to_string())
    }
}

impl From<CamError> for ServiceError {
    fn from(e: CamError) -> Self {
        match e {
            CamError::ClassOutOfRange { .. } | CamError::Alpha(_) => Self::BadRequest(e.to_string()),
            CamError::Dims { .. } | CamError::Model(_) => Self::Internal(e.to_string()),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}
