use axum::extract::rejection::{BytesRejection, JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use pulse_core::analysis::AnalysisError;
use pulse_core::api::{codes, ErrorBody, ErrorDetail, API_FORMAT_VERSION};
use pulse_core::ingest::IngestError;
use pulse_core::session::SessionError;
use pulse_core::store::StoreError;

/// An error response: status, stable code and message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub expected_seq: Option<u64>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            expected_seq: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, codes::INVALID_REQUEST, message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, codes::VALIDATION_ERROR, message)
    }

    pub fn unauthenticated(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, codes::UNAUTHENTICATED, message)
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, codes::FORBIDDEN, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, codes::NOT_FOUND, message)
    }

    pub fn invalid_state(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, codes::INVALID_STATE, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, codes::CONFLICT, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            codes::INTERNAL_ERROR,
            message,
        )
    }

    pub fn detail(&self) -> ErrorDetail {
        ErrorDetail {
            code: self.code.to_string(),
            message: self.message.clone(),
            expected_seq: self.expected_seq,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            format_version: API_FORMAT_VERSION,
            error: self.detail(),
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) => Self::not_found(format!("session {id} not found")),
            StoreError::Integrity(m) => {
                Self::new(StatusCode::BAD_REQUEST, codes::INTEGRITY_ERROR, m)
            }
            StoreError::Validation(m) => Self::validation(m),
            e @ (StoreError::Io(_) | StoreError::Corrupt(_)) => Self::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                codes::STORAGE_ERROR,
                e.to_string(),
            ),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match &e {
            SessionError::Validation(_) => Self::validation(e.to_string()),
            SessionError::IllegalTransition { .. } => Self::new(
                StatusCode::CONFLICT,
                codes::ILLEGAL_TRANSITION,
                e.to_string(),
            ),
            SessionError::NotStarted(_) => Self::invalid_state(e.to_string()),
        }
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        match &e {
            IngestError::Sequence { expected, .. } => Self {
                expected_seq: Some(*expected),
                ..Self::new(StatusCode::CONFLICT, codes::SEQUENCE_GAP, e.to_string())
            },
            IngestError::State(_) => Self::invalid_state(e.to_string()),
            IngestError::Validation(_) => Self::validation(e.to_string()),
            IngestError::Provider {
                retryable: true, ..
            } => Self::new(
                StatusCode::SERVICE_UNAVAILABLE,
                codes::PROVIDER_UNAVAILABLE,
                e.to_string(),
            ),
            IngestError::Provider { .. } => Self::new(
                StatusCode::BAD_GATEWAY,
                codes::PROVIDER_ERROR,
                e.to_string(),
            ),
            IngestError::Configuration(_) => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                codes::TRANSCRIPTION_UNAVAILABLE,
                e.to_string(),
            ),
        }
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        match &e {
            AnalysisError::EmptyInput(_) => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                codes::EMPTY_INPUT,
                e.to_string(),
            ),
            AnalysisError::State(_) => Self::invalid_state(e.to_string()),
            AnalysisError::Validation(_) => Self::validation(e.to_string()),
            AnalysisError::Configuration(_) => Self::internal(e.to_string()),
            AnalysisError::Provider(p) if p.retryable => Self::new(
                StatusCode::SERVICE_UNAVAILABLE,
                codes::PROVIDER_UNAVAILABLE,
                e.to_string(),
            ),
            AnalysisError::Provider(_) => Self::new(
                StatusCode::BAD_GATEWAY,
                codes::PROVIDER_ERROR,
                e.to_string(),
            ),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            return Self::new(
                StatusCode::PAYLOAD_TOO_LARGE,
                codes::PAYLOAD_TOO_LARGE,
                e.body_text(),
            );
        }
        Self::bad_request(e.body_text())
    }
}

impl From<BytesRejection> for ApiError {
    fn from(e: BytesRejection) -> Self {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            return Self::new(
                StatusCode::PAYLOAD_TOO_LARGE,
                codes::PAYLOAD_TOO_LARGE,
                e.body_text(),
            );
        }
        Self::bad_request(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

/// JSON body extractor whose rejections use the API error format.
#[derive(Debug, axum::extract::FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct ApiJson<T>(pub T);

/// Query extractor whose rejections use the API error format.
#[derive(Debug, axum::extract::FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
pub struct ApiQuery<T>(pub T);
