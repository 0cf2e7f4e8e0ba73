use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use crate::eval::EvalError;
use crate::network::NetworkError;
use crate::rag::RagError;
use crate::routing::RoutingError;
use crate::sim::SimError;
use crate::stations::StationError;
use crate::store::StoreError;

/// Error body returned by every endpoint. `code` names the module error and
/// is stable; `message` is for humans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status: status.as_u16(), code: code.to_string(), message: message.into() }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", what)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "Conflict", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "ValidationError", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }

    pub fn status_code(&self) -> StatusCode {
        StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status_code(), Json(self)).into_response()
    }
}

impl From<NetworkError> for ApiError {
    fn from(e: NetworkError) -> Self {
        let code = match e {
            NetworkError::Io { .. } => "IoError",
            NetworkError::Parse { .. } => "ParseError",
            NetworkError::Validation { .. } => "ValidationError",
            NetworkError::DanglingEdge { .. } => "DanglingEdge",
            NetworkError::InvalidDimension { .. } => "InvalidDimension",
        };
        ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let (status, code) = match e {
            StoreError::SyntaxError(_) => (StatusCode::BAD_REQUEST, "SyntaxError"),
            StoreError::UnknownRelation(_) => (StatusCode::BAD_REQUEST, "UnknownRelation"),
            StoreError::UnknownColumn(_) => (StatusCode::BAD_REQUEST, "UnknownColumn"),
            StoreError::NotReadOnly => (StatusCode::BAD_REQUEST, "NotReadOnly"),
            StoreError::DuplicateKey(_) => (StatusCode::CONFLICT, "DuplicateKey"),
            StoreError::AlreadyInitialized => (StatusCode::CONFLICT, "AlreadyInitialized"),
            StoreError::NoDataYet(_) => (StatusCode::NOT_FOUND, "NoDataYet"),
            StoreError::InvalidBatch(_) => (StatusCode::BAD_REQUEST, "InvalidBatch"),
            StoreError::Store(_) => (StatusCode::INTERNAL_SERVER_ERROR, "StoreError"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<RoutingError> for ApiError {
    fn from(e: RoutingError) -> Self {
        let (status, code) = match e {
            RoutingError::NoRoute { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "NoRoute"),
            RoutingError::UnknownEdge(_) => (StatusCode::BAD_REQUEST, "UnknownEdge"),
            RoutingError::InvalidRequest(_) => (StatusCode::BAD_REQUEST, "ValidationError"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<StationError> for ApiError {
    fn from(e: StationError) -> Self {
        let (status, code) = match e {
            StationError::TooManyStations { .. } => (StatusCode::BAD_REQUEST, "TooManyStations"),
            StationError::NotAvailable { .. } => (StatusCode::CONFLICT, "NotAvailable"),
            StationError::StationFull { .. } => (StatusCode::CONFLICT, "StationFull"),
            StationError::UnknownStation(_) => (StatusCode::NOT_FOUND, "UnknownStation"),
            StationError::AlreadyDocked(_) => (StatusCode::CONFLICT, "AlreadyDocked"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<RagError> for ApiError {
    fn from(e: RagError) -> Self {
        let (status, code) = match e {
            RagError::EmptyText => (StatusCode::BAD_REQUEST, "EmptyText"),
            RagError::Provider(_) => (StatusCode::BAD_GATEWAY, "ProviderError"),
            RagError::DimensionMismatch { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "DimensionMismatch"),
            RagError::ZeroVector => (StatusCode::INTERNAL_SERVER_ERROR, "ZeroVector"),
            RagError::EmptyIndex => (StatusCode::INTERNAL_SERVER_ERROR, "EmptyIndex"),
            RagError::DuplicateDoc(_) => (StatusCode::INTERNAL_SERVER_ERROR, "DuplicateDoc"),
            RagError::BackendUnavailable(_) => (StatusCode::BAD_GATEWAY, "BackendUnavailable"),
            RagError::CassetteMiss(_) => (StatusCode::BAD_GATEWAY, "CassetteMiss"),
            RagError::NonSqlOutput(_) => (StatusCode::BAD_GATEWAY, "NonSqlOutput"),
            RagError::NoContext => (StatusCode::INTERNAL_SERVER_ERROR, "NoContext"),
            RagError::Store(_) => (StatusCode::INTERNAL_SERVER_ERROR, "StoreError"),
            RagError::Io(_) => (StatusCode::BAD_REQUEST, "IoError"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        let code = match e {
            EvalError::GoldFailed { .. } => "GoldFailed",
            EvalError::Corpus { .. } => "CorpusError",
            EvalError::Io(_) => "IoError",
        };
        ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}

impl From<SimError> for ApiError {
    fn from(e: SimError) -> Self {
        ApiError::internal(e.to_string())
    }
}

impl From<crate::routing::BenchmarkError> for ApiError {
    fn from(e: crate::routing::BenchmarkError) -> Self {
        use crate::routing::BenchmarkError;
        match e {
            BenchmarkError::Sim(e) => e.into(),
            BenchmarkError::Station(e) => e.into(),
            BenchmarkError::Routing(e) => e.into(),
            BenchmarkError::InvalidOptions(m) => ApiError::bad_request(m),
        }
    }
}

impl From<crate::routing::CommitError> for ApiError {
    fn from(e: crate::routing::CommitError) -> Self {
        use crate::routing::CommitError;
        match e {
            CommitError::Station(e) => e.into(),
            CommitError::Store(e) => e.into(),
            other => ApiError::conflict(other.to_string()),
        }
    }
}
