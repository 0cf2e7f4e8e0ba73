//! Schema-level retrieval-augmented Text-to-SQL.
//!
//! Each table becomes one M-Schema document; documents are embedded into a
//! cosine-similarity index, the top-k documents for a question are placed in
//! a versioned prompt, and a model backend turns the prompt into SQL.

mod backend;
mod embed;
mod index;
mod mschema;
mod prompt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{Datastore, StoreError};

pub use backend::{generate_sql, prompt_hash, Cassette, LiveBackend, LiveBackendConfig, LlmBackend, ReplayBackend};
pub use embed::{cosine_similarity, Embedder, Embedding, FixtureEmbedder, HashingEmbedder, HttpEmbedder, DEFAULT_DIMENSION};
pub use index::{retrieve_top_k, IndexEntry, Retrieved, VectorIndex, DEFAULT_TOP_K};
pub use mschema::{generate_mschema, render_mschema, MSchemaBody, MSchemaColumn, MSchemaDoc, DEFAULT_DB_ID};
pub use prompt::{build_prompt, PROMPT_VERSION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RagError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding provider failed: {0}")]
    Provider(String),
    #[error("vector dimension {actual} does not match {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("zero-norm vector")]
    ZeroVector,
    #[error("the vector index is empty")]
    EmptyIndex,
    #[error("document `{0}` is already indexed")]
    DuplicateDoc(String),
    #[error("model backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("no cassette entry for prompt hash {0}")]
    CassetteMiss(String),
    #[error("model output is not a single SQL query: {0}")]
    NonSqlOutput(String),
    #[error("no documents to build a prompt from")]
    NoContext,
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Everything produced while answering one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RagAnswer {
    pub question: String,
    pub retrieved: Vec<Retrieved>,
    pub prompt: String,
    pub sql: String,
}

/// Index plus embedder for one database.
pub struct RagPipeline {
    docs: Vec<MSchemaDoc>,
    index: VectorIndex,
    embedder: Box<dyn Embedder>,
    top_k: usize,
}

impl std::fmt::Debug for RagPipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RagPipeline")
            .field("docs", &self.docs.len())
            .field("provider", &self.embedder.id())
            .field("top_k", &self.top_k)
            .finish()
    }
}

impl RagPipeline {
    /// Generates the M-Schema documents of `store` and indexes them.
    pub fn build(store: &Datastore, embedder: Box<dyn Embedder>) -> Result<Self, RagError> {
        let docs = generate_mschema(store, DEFAULT_DB_ID)?;
        Self::from_docs(docs, embedder)
    }

    pub fn from_docs(docs: Vec<MSchemaDoc>, embedder: Box<dyn Embedder>) -> Result<Self, RagError> {
        let mut index = VectorIndex::new(embedder.id(), embedder.dimension());
        for doc in &docs {
            let vector = embedder.embed(&doc.text)?;
            index.insert(&doc.doc_id, vector, [("table".to_string(), doc.table.clone())].into())?;
        }
        Ok(RagPipeline { docs, index, embedder, top_k: DEFAULT_TOP_K })
    }

    pub fn with_top_k(mut self, k: usize) -> Self {
        self.top_k = k.max(1);
        self
    }

    pub fn docs(&self) -> &[MSchemaDoc] {
        &self.docs
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn doc(&self, doc_id: &str) -> Option<&MSchemaDoc> {
        self.docs.iter().find(|d| d.doc_id == doc_id)
    }

    /// Retrieves context for `question` and assembles the prompt.
    pub fn prompt_for(&self, question: &str) -> Result<(String, Vec<Retrieved>), RagError> {
        let retrieved = retrieve_top_k(&self.index, self.embedder.as_ref(), question, self.top_k)?;
        let docs: Vec<&MSchemaDoc> = retrieved.iter().filter_map(|r| self.doc(&r.doc_id)).collect();
        Ok((build_prompt(question, &docs)?, retrieved))
    }

    pub fn answer(&self, question: &str, backend: &dyn LlmBackend) -> Result<RagAnswer, RagError> {
        let (prompt, retrieved) = self.prompt_for(question)?;
        let sql = generate_sql(backend, &prompt)?;
        Ok(RagAnswer { question: question.to_string(), retrieved, prompt, sql })
    }
}
