use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{cosine_similarity, Embedder, Embedding, RagError};

pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub doc_id: String,
    pub vector: Embedding,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieved {
    pub doc_id: String,
    pub score: f64,
    pub metadata: BTreeMap<String, String>,
}

/// Exact cosine-similarity index over a handful of documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorIndex {
    provider: String,
    dimension: usize,
    entries: Vec<IndexEntry>,
}

impl VectorIndex {
    pub fn new(provider: impl Into<String>, dimension: usize) -> Self {
        VectorIndex { provider: provider.into(), dimension, entries: Vec::new() }
    }

    pub fn provider(&self) -> &str {
        &self.provider
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn get(&self, doc_id: &str) -> Option<&IndexEntry> {
        self.entries.iter().find(|e| e.doc_id == doc_id)
    }

    pub fn insert(
        &mut self,
        doc_id: &str,
        vector: Embedding,
        metadata: BTreeMap<String, String>,
    ) -> Result<(), RagError> {
        if vector.dimension() != self.dimension {
            return Err(RagError::DimensionMismatch { expected: self.dimension, actual: vector.dimension() });
        }
        if vector.norm() == 0.0 {
            return Err(RagError::ZeroVector);
        }
        if self.get(doc_id).is_some() {
            return Err(RagError::DuplicateDoc(doc_id.to_string()));
        }
        self.entries.push(IndexEntry { doc_id: doc_id.to_string(), vector, metadata });
        Ok(())
    }

    /// The `k` best matches by descending cosine, ties by ascending doc id.
    pub fn search(&self, query: &Embedding, k: usize) -> Result<Vec<Retrieved>, RagError> {
        if self.entries.is_empty() {
            return Err(RagError::EmptyIndex);
        }
        let mut scored = self
            .entries
            .iter()
            .map(|e| Ok((cosine_similarity(query, &e.vector)?, e)))
            .collect::<Result<Vec<_>, RagError>>()?;
        scored.sort_by(|(sa, a), (sb, b)| sb.total_cmp(sa).then_with(|| a.doc_id.cmp(&b.doc_id)));
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(score, e)| Retrieved { doc_id: e.doc_id.clone(), score, metadata: e.metadata.clone() })
            .collect())
    }
}

pub fn retrieve_top_k(
    index: &VectorIndex,
    embedder: &dyn Embedder,
    question: &str,
    k: usize,
) -> Result<Vec<Retrieved>, RagError> {
    if index.is_empty() {
        return Err(RagError::EmptyIndex);
    }
    index.search(&embedder.embed(question)?, k)
}
