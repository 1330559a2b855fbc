//! Translation sources behind one trait.
//!
//! Wire protocol of the HTTP backend (version 1, header `X-NL2SQL-Proto: 1`):
//!
//! ```text
//! POST /translate
//! Content-Type: application/json
//! {"question": "...", "db_id": "...", "schema": "meters: id, location | ..."}
//!
//! 200 {"sql": "SELECT ..."}
//! ```

mod http;
mod mock;

use std::collections::BTreeMap;
use std::time::Instant;

use nl2sql_core::baseline::baseline_translate;
use nl2sql_core::dataset::{schema_segment, QueryPair};
use nl2sql_core::DbSchema;
use serde::{Deserialize, Serialize};

pub use http::{HttpBackend, DEFAULT_TIMEOUT};
pub use mock::{serve_mock, MockServer};

pub const PROTO_HEADER: &str = "X-NL2SQL-Proto";
pub const PROTO_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationRequest {
    pub question: String,
    pub db_id: String,
    /// Same text as the schema part of a prompt.
    pub schema_serialization: String,
    /// Dataset position; the replay backend needs it.
    pub index: Option<usize>,
}

impl TranslationRequest {
    pub fn new(question: &str, schema: &DbSchema) -> Self {
        TranslationRequest {
            question: question.into(),
            db_id: schema.db_id().into(),
            schema_serialization: schema_segment(schema),
            index: None,
        }
    }

    pub fn for_pair(index: usize, pair: &QueryPair, schema: &DbSchema) -> Self {
        TranslationRequest { index: Some(index), ..TranslationRequest::new(&pair.question, schema) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationResponse {
    pub sql: String,
    pub latency_ms: f64,
    pub backend_id: String,
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend answered {status}: {body}")]
    Backend { status: u16, body: String },
    #[error("no prediction for index {index:?} ({available} available)")]
    Alignment { index: Option<usize>, available: usize },
    #[error(transparent)]
    NoMatch(#[from] nl2sql_core::baseline::NoMatch),
    #[error("unknown database `{0}`")]
    UnknownDb(String),
    #[error("backend returned empty SQL")]
    Empty,
}

/// A source of SQL for questions. Implementations are shared across
/// evaluation workers.
pub trait Translator: Send + Sync {
    fn id(&self) -> &str;

    fn translate_raw(&self, req: &TranslationRequest) -> Result<String, BackendError>;

    /// Raw output, unrepaired, with timing.
    fn translate(&self, req: &TranslationRequest) -> Result<TranslationResponse, BackendError> {
        let start = Instant::now();
        let sql = self.translate_raw(req)?;
        if sql.trim().is_empty() {
            return Err(BackendError::Empty);
        }
        Ok(TranslationResponse { sql, latency_ms: start.elapsed().as_secs_f64() * 1e3, backend_id: self.id().into() })
    }
}

/// Serves predictions read from a file, by dataset index.
pub struct ReplayBackend {
    predictions: Vec<String>,
}

impl ReplayBackend {
    pub fn new(predictions: Vec<String>) -> Self {
        ReplayBackend { predictions }
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}

impl Translator for ReplayBackend {
    fn id(&self) -> &str {
        "replay"
    }

    fn translate_raw(&self, req: &TranslationRequest) -> Result<String, BackendError> {
        req.index
            .and_then(|i| self.predictions.get(i))
            .cloned()
            .ok_or(BackendError::Alignment { index: req.index, available: self.predictions.len() })
    }
}

/// The template translator of `nl2sql_core::baseline`.
pub struct BaselineBackend {
    schemas: BTreeMap<String, DbSchema>,
}

impl BaselineBackend {
    pub fn new(schemas: impl IntoIterator<Item = DbSchema>) -> Self {
        BaselineBackend { schemas: schemas.into_iter().map(|s| (s.db_id().to_owned(), s)).collect() }
    }
}

impl Translator for BaselineBackend {
    fn id(&self) -> &str {
        "baseline"
    }

    fn translate_raw(&self, req: &TranslationRequest) -> Result<String, BackendError> {
        let schema = self.schemas.get(&req.db_id).ok_or_else(|| BackendError::UnknownDb(req.db_id.clone()))?;
        Ok(baseline_translate(&req.question, schema)?)
    }
}
