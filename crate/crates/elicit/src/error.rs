use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("session is closed")]
    SessionClosed,
    #[error("scripted queries exhausted")]
    ScriptExhausted,
    #[error("no query is outstanding")]
    NoOutstandingQuery,
    #[error("statement answers `{got}` but `{expected}` is outstanding")]
    QueryMismatch { expected: String, got: String },
    #[error("answer kind does not match a {0} query")]
    AnswerKindMismatch(String),
    #[error("no prior has been fitted yet")]
    NothingFitted,
    #[error("session already accepted")]
    AlreadyAccepted,
    #[error("session must be at the feedback stage")]
    NotAtFeedback,
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("session file is corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Engine(#[from] elicit_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Broad class of an error, shared by HTTP status codes and CLI exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    NotFound,
    Conflict,
    Invalid,
    Internal,
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "UnknownSession",
            ServiceError::UnknownModel(_) => "UnknownModel",
            ServiceError::InvalidConfig(_) => "InvalidConfig",
            ServiceError::SessionClosed => "SessionClosed",
            ServiceError::ScriptExhausted => "ScriptExhausted",
            ServiceError::NoOutstandingQuery => "NoOutstandingQuery",
            ServiceError::QueryMismatch { .. } => "QueryMismatch",
            ServiceError::AnswerKindMismatch(_) => "AnswerKindMismatch",
            ServiceError::NothingFitted => "NothingFitted",
            ServiceError::AlreadyAccepted => "AlreadyAccepted",
            ServiceError::NotAtFeedback => "NotAtFeedback",
            ServiceError::BadRequest(_) => "BadRequest",
            ServiceError::Corrupt(_) => "Corrupt",
            ServiceError::Engine(elicit_core::Error::UnknownQuery(_)) => "UnknownQuery",
            ServiceError::Engine(_) => "EngineError",
            ServiceError::Io(_) => "Io",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            ServiceError::UnknownSession(_) => ErrorClass::NotFound,
            ServiceError::SessionClosed
            | ServiceError::ScriptExhausted
            | ServiceError::NoOutstandingQuery
            | ServiceError::NothingFitted
            | ServiceError::AlreadyAccepted
            | ServiceError::NotAtFeedback => ErrorClass::Conflict,
            ServiceError::Corrupt(_) | ServiceError::Io(_) => ErrorClass::Internal,
            _ => ErrorClass::Invalid,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody { code: self.code().to_string(), message: self.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;
