use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RagError;

/// Text-completion model behind the SQL generator.
pub trait LlmBackend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, RagError>;
}

/// Hex SHA-256 of the prompt, the cassette key.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Recorded model responses keyed by prompt hash.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cassette(pub BTreeMap<String, String>);

impl Cassette {
    pub fn load(path: &Path) -> Result<Self, RagError> {
        let text = std::fs::read_to_string(path).map_err(|e| RagError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| RagError::Io(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), RagError> {
        let text = serde_json::to_string_pretty(self).expect("cassette serializes");
        std::fs::write(path, text + "\n").map_err(|e| RagError::Io(format!("{}: {e}", path.display())))
    }

    pub fn record(&mut self, prompt: &str, response: impl Into<String>) {
        self.0.insert(prompt_hash(prompt), response.into());
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Deterministic, network-free backend answering from a cassette.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    id: String,
    cassette: Cassette,
}

impl ReplayBackend {
    pub fn new(id: impl Into<String>, cassette: Cassette) -> Self {
        ReplayBackend { id: id.into(), cassette }
    }

    pub fn from_file(id: impl Into<String>, path: &Path) -> Result<Self, RagError> {
        Ok(Self::new(id, Cassette::load(path)?))
    }
}

impl LlmBackend for ReplayBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, prompt: &str) -> Result<String, RagError> {
        let hash = prompt_hash(prompt);
        self.cassette.0.get(&hash).cloned().ok_or(RagError::CassetteMiss(hash))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveBackendConfig {
    pub id: String,
    /// Chat-completions URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    pub timeout_s: u64,
}

/// OpenAI-compatible chat-completions backend. Successful responses can be
/// captured into a cassette for later replay.
#[derive(Debug)]
pub struct LiveBackend {
    config: LiveBackendConfig,
    recorded: Mutex<Cassette>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl LiveBackend {
    pub fn new(config: LiveBackendConfig) -> Self {
        LiveBackend { config, recorded: Mutex::new(Cassette::default()) }
    }

    /// Responses received so far.
    pub fn recorded(&self) -> Cassette {
        self.recorded.lock().map(|c| c.clone()).unwrap_or_default()
    }
}

impl LlmBackend for LiveBackend {
    fn id(&self) -> &str {
        &self.config.id
    }

    fn complete(&self, prompt: &str) -> Result<String, RagError> {
        let token = std::env::var(&self.config.token_env)
            .map_err(|_| RagError::BackendUnavailable(format!("environment variable {} is not set", self.config.token_env)))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.config.timeout_s)))
            .build()
            .into();
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let parsed: ChatResponse = agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {token}"))
            .send_json(&body)
            .map_err(|e| RagError::BackendUnavailable(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| RagError::BackendUnavailable(e.to_string()))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| RagError::BackendUnavailable("response has no choices".into()))?;
        if let Ok(mut cassette) = self.recorded.lock() {
            cassette.record(prompt, text.clone());
        }
        Ok(text)
    }
}

fn strip_fences(text: &str) -> &str {
    let Some(open) = text.find("```") else { return text.trim() };
    let after = &text[open + 3..];
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => body[..close].trim(),
        None => body.trim(),
    }
}

/// Number of non-empty `;`-separated statements, ignoring quoted text.
fn statement_count(sql: &str) -> usize {
    let mut count = 0;
    let mut current_has_text = false;
    let mut quote: Option<char> = None;
    for c in sql.chars() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '\'' || c == '"' => {
                quote = Some(c);
                current_has_text = true;
            }
            None if c == ';' => {
                if current_has_text {
                    count += 1;
                }
                current_has_text = false;
            }
            None if !c.is_whitespace() => current_has_text = true,
            None => {}
        }
    }
    count + usize::from(current_has_text)
}

/// Asks the backend and extracts a single `SELECT`/`WITH` statement.
pub fn generate_sql(backend: &dyn LlmBackend, prompt: &str) -> Result<String, RagError> {
    let raw = backend.complete(prompt)?;
    let sql = strip_fences(&raw);
    let keyword: String = sql.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    if !(keyword.eq_ignore_ascii_case("select") || keyword.eq_ignore_ascii_case("with")) {
        return Err(RagError::NonSqlOutput(raw));
    }
    if statement_count(sql) != 1 {
        return Err(RagError::NonSqlOutput(raw));
    }
    Ok(sql.to_string())
}
