use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::RagError;

pub const DEFAULT_DIMENSION: usize = 384;

/// Dense embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `q·d / (‖q‖ ‖d‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(q: &Embedding, d: &Embedding) -> Result<f64, RagError> {
    if q.dimension() != d.dimension() {
        return Err(RagError::DimensionMismatch { expected: q.dimension(), actual: d.dimension() });
    }
    let (nq, nd) = (q.norm(), d.norm());
    if nq == 0.0 || nd == 0.0 {
        return Err(RagError::ZeroVector);
    }
    let dot: f64 = q.0.iter().zip(&d.0).map(|(a, b)| a * b).sum();
    Ok((dot / (nq * nd)).clamp(-1.0, 1.0))
}

pub trait Embedder: Send + Sync {
    fn id(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Embedding, RagError>;
}

/// Offline embedder: feature hashing of lowercased word unigrams, word
/// bigrams and in-word character trigrams, L2-normalized.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    id: String,
    dimension: usize,
    seed: u64,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION, 0)
    }
}

impl HashingEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Self {
        HashingEmbedder { id: format!("hashing-{dimension}-{seed}"), dimension: dimension.max(1), seed }
    }

    fn bucket(&self, kind: u8, feature: &str) -> usize {
        // FNV-1a, seeded; stable across platforms and releases
        let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        for b in std::iter::once(kind).chain(feature.bytes()) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        (h % self.dimension as u64) as usize
    }
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Embedder for HashingEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Embedding, RagError> {
        let words = words(text);
        if words.is_empty() {
            return Err(RagError::EmptyText);
        }
        let mut v = vec![0.0; self.dimension];
        for w in &words {
            v[self.bucket(b'u', w)] += 1.0;
            let chars: Vec<char> = w.chars().collect();
            for tri in chars.windows(3) {
                v[self.bucket(b'c', &tri.iter().collect::<String>())] += 1.0;
            }
        }
        for pair in words.windows(2) {
            v[self.bucket(b'b', &format!("{} {}", pair[0], pair[1]))] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(Embedding(v.into_iter().map(|x| x / norm).collect()))
    }
}

/// Fixed text→vector table, for tests with hand-built vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureEmbedder {
    id: String,
    dimension: usize,
    vectors: HashMap<String, Embedding>,
}

impl FixtureEmbedder {
    pub fn new(id: impl Into<String>, vectors: HashMap<String, Embedding>) -> Result<Self, RagError> {
        let dimension = vectors.values().next().map_or(0, Embedding::dimension);
        if let Some(bad) = vectors.values().find(|v| v.dimension() != dimension) {
            return Err(RagError::DimensionMismatch { expected: dimension, actual: bad.dimension() });
        }
        Ok(FixtureEmbedder { id: id.into(), dimension, vectors })
    }

    pub fn from_file(path: &Path) -> Result<Self, RagError> {
        let text = std::fs::read_to_string(path).map_err(|e| RagError::Io(format!("{}: {e}", path.display())))?;
        let vectors: HashMap<String, Embedding> =
            serde_json::from_str(&text).map_err(|e| RagError::Io(format!("{}: {e}", path.display())))?;
        Self::new(format!("fixture:{}", path.display()), vectors)
    }
}

impl Embedder for FixtureEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Embedding, RagError> {
        if text.trim().is_empty() {
            return Err(RagError::EmptyText);
        }
        self.vectors
            .get(text)
            .cloned()
            .ok_or_else(|| RagError::Provider(format!("no fixture vector for text starting {:?}", text.chars().take(40).collect::<String>())))
    }
}

/// OpenAI-compatible `/embeddings` endpoint.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    id: String,
    endpoint: String,
    model: String,
    dimension: usize,
    token: Option<String>,
    timeout: Duration,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    embedding: Vec<f64>,
}

impl HttpEmbedder {
    /// `token_env` names the environment variable holding the bearer token.
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, dimension: usize, token_env: Option<&str>) -> Self {
        let model = model.into();
        HttpEmbedder {
            id: format!("http:{model}"),
            endpoint: endpoint.into(),
            model,
            dimension,
            token: token_env.and_then(|k| std::env::var(k).ok()),
            timeout: Duration::from_secs(30),
        }
    }
}

impl Embedder for HttpEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Embedding, RagError> {
        if text.trim().is_empty() {
            return Err(RagError::EmptyText);
        }
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(self.timeout)).build().into();
        let mut request = agent.post(&self.endpoint);
        if let Some(token) = &self.token {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let body = serde_json::json!({ "model": self.model, "input": text });
        let parsed: EmbeddingResponse = request
            .send_json(&body)
            .map_err(|e| RagError::Provider(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| RagError::Provider(e.to_string()))?;
        let vector = parsed.data.into_iter().next().ok_or_else(|| RagError::Provider("empty response".into()))?;
        if vector.embedding.len() != self.dimension {
            return Err(RagError::DimensionMismatch { expected: self.dimension, actual: vector.embedding.len() });
        }
        Ok(Embedding(vector.embedding))
    }
}
