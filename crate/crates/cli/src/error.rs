use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use coopride_core::platform::PlatformError;
use coopride_core::ratings::RatingError;
use coopride_core::services::{ForumError, ProfileError, TicketError};
use serde_json::json;

/// Error body: `{"error": kind, "message": text}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self { status, kind, message: message.into() }
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or unknown bearer token")
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<PlatformError> for ApiError {
    fn from(e: PlatformError) -> Self {
        let message = e.to_string();
        let (status, kind) = match &e {
            PlatformError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            PlatformError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            PlatformError::Expired(_) => (StatusCode::GONE, "expired"),
            PlatformError::Poisoned => (StatusCode::SERVICE_UNAVAILABLE, "read_only"),
            PlatformError::Storage(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage_failure"),
            PlatformError::Profile(ProfileError::SettingsLocked { .. }) => (StatusCode::LOCKED, "settings_locked"),
            PlatformError::Rating(RatingError::DuplicateRating(_)) => (StatusCode::CONFLICT, "duplicate_rating"),
            PlatformError::Rating(RatingError::UnknownRating(_) | RatingError::UnknownDispute(_))
            | PlatformError::Ticket(TicketError::UnknownTicket(_))
            | PlatformError::Forum(ForumError::UnknownTopic(_) | ForumError::UnknownPoll(_)) => (StatusCode::NOT_FOUND, "not_found"),
            PlatformError::Forum(ForumError::PollClosed(_)) => (StatusCode::CONFLICT, "poll_closed"),
            PlatformError::Ticket(TicketError::IllegalTransition { .. }) => (StatusCode::CONFLICT, "illegal_transition"),
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
        };
        Self::new(status, kind, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.kind, "message": self.message }))).into_response()
    }
}
