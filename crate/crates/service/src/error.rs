use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use debt_gauge_core::StoreError;
use serde::Serialize;

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
    /// Unanswered question ids, set for `incomplete_session`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unanswered: Option<Vec<u32>>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code,
            message: message.into(),
            unanswered: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        let (status, code) = match &e {
            StoreError::InvalidSessionId(_) | StoreError::SessionNotFound(_) => {
                (StatusCode::NOT_FOUND, "session_not_found")
            }
            StoreError::UnknownQuestion(_) => (StatusCode::NOT_FOUND, "question_not_found"),
            StoreError::EmptyLabel => (StatusCode::BAD_REQUEST, "empty_label"),
            StoreError::SessionFinalized(_) | StoreError::AlreadyFinalized(_) => {
                (StatusCode::CONFLICT, "already_finalized")
            }
            StoreError::NotFinalized(_) => (StatusCode::CONFLICT, "not_finalized"),
            StoreError::QuestionNotApplicable { .. } => {
                (StatusCode::CONFLICT, "question_not_applicable")
            }
            StoreError::RevisionConflict { .. } => (StatusCode::CONFLICT, "revision_conflict"),
            StoreError::BankMismatch { .. } => (StatusCode::CONFLICT, "bank_mismatch"),
            StoreError::RoleMismatch { .. } => (StatusCode::CONFLICT, "role_mismatch"),
            StoreError::IncompleteSession { unanswered } => {
                let mut err = ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "incomplete_session",
                    message,
                );
                err.unanswered = Some(unanswered.clone());
                return err;
            }
            StoreError::Scoring(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
            StoreError::Corrupt { .. }
            | StoreError::Storage { .. }
            | StoreError::InjectedCrash(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
        };
        ApiError::new(status, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}
