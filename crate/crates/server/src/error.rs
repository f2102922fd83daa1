use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use glossa_core::bracelet::BraceletError;
use glossa_core::grammar::GrammarError;
use glossa_core::masking::MaskingError;
use serde_json::json;
use thiserror::Error;

use crate::session::Phase;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown corpus `{0}`")]
    UnknownCorpus(String),
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("missing or unrecognised credentials")]
    Unauthorized,
    #[error("only the facilitator may do this")]
    FacilitatorOnly,
    #[error("only participants may do this")]
    ParticipantOnly,
    #[error("not allowed during the {0} phase")]
    WrongPhase(Phase),
    #[error("session is closed")]
    Closed,
    #[error("no team named `{0}`")]
    UnknownTeam(String),
    #[error("team `{team}` already has {cap} members")]
    TeamFull { team: String, cap: usize },
    #[error("hints are disabled for this session")]
    HintsDisabled,
    #[error("cards not held by the team: {}", .0.join(", "))]
    NotInDeck(Vec<String>),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("rejected rule: {0}")]
    Rule(#[from] GrammarError),
    #[error(transparent)]
    Masking(#[from] MaskingError),
    #[error(transparent)]
    Bracelet(#[from] BraceletError),
    #[error("session log: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt session log: {0}")]
    Corrupt(String),
}

impl SessionError {
    /// Stable machine-readable code carried by error responses.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::UnknownSession(_) => "unknown_session",
            SessionError::UnknownCorpus(_) => "unknown_corpus",
            SessionError::InvalidConfig(_) => "invalid_config",
            SessionError::Unauthorized => "unauthorized",
            SessionError::FacilitatorOnly => "facilitator_only",
            SessionError::ParticipantOnly => "participant_only",
            SessionError::WrongPhase(_) => "wrong_phase",
            SessionError::Closed => "session_closed",
            SessionError::UnknownTeam(_) => "unknown_team",
            SessionError::TeamFull { .. } => "team_full",
            SessionError::HintsDisabled => "hints_disabled",
            SessionError::NotInDeck(_) => "not_in_deck",
            SessionError::BadRequest(_) => "bad_request",
            SessionError::Rule(_) => "invalid_rule",
            SessionError::Masking(_) => "masking",
            SessionError::Bracelet(_) => "bracelet",
            SessionError::Io(_) => "storage",
            SessionError::Corrupt(_) => "corrupt_log",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            SessionError::UnknownSession(_) | SessionError::UnknownCorpus(_) => {
                StatusCode::NOT_FOUND
            }
            SessionError::Unauthorized => StatusCode::UNAUTHORIZED,
            SessionError::FacilitatorOnly | SessionError::ParticipantOnly => StatusCode::FORBIDDEN,
            SessionError::WrongPhase(_)
            | SessionError::Closed
            | SessionError::TeamFull { .. }
            | SessionError::HintsDisabled => StatusCode::CONFLICT,
            SessionError::InvalidConfig(_)
            | SessionError::UnknownTeam(_)
            | SessionError::NotInDeck(_)
            | SessionError::Rule(_)
            | SessionError::Masking(_)
            | SessionError::Bracelet(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::BadRequest(_) => StatusCode::BAD_REQUEST,
            SessionError::Io(_) | SessionError::Corrupt(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code(), "message": self.to_string() } });
        (self.status(), Json(body)).into_response()
    }
}
