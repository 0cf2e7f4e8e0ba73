//! HTTP API tying the simulator, router, datastore and Text-to-SQL pipeline
//! together.

mod error;
mod handlers;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::eval::EvalReport;
use crate::network::{NetworkGraph, ScenarioConfig};
use crate::rag::{Embedder, HashingEmbedder, LlmBackend, RagError, RagPipeline};
use crate::sim::EdgeTrafficRecord;
use crate::stations::{Fleet, Station};
use crate::store::Datastore;

pub use error::ApiError;

/// Windows buffered per live-stream subscriber before it starts lagging.
const STREAM_BUFFER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimStatus {
    Created,
    Running,
    Completed,
    Stopped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationInfo {
    pub scenario_id: String,
    pub status: SimStatus,
    pub windows_done: u32,
    pub windows_total: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A loaded scenario: its network, its station fleet and the lifecycle of
/// its simulation run.
pub struct Scenario {
    pub id: String,
    pub config: ScenarioConfig,
    pub graph: Arc<NetworkGraph>,
    pub fleet: Mutex<Fleet>,
    status: Mutex<(SimStatus, Option<String>)>,
    windows_done: AtomicU32,
    stop: AtomicBool,
}

impl Scenario {
    fn new(id: String, config: ScenarioConfig, graph: NetworkGraph, stations: Vec<Station>) -> Self {
        Scenario {
            id,
            config,
            graph: Arc::new(graph),
            fleet: Mutex::new(Fleet::new(stations)),
            status: Mutex::new((SimStatus::Created, None)),
            windows_done: AtomicU32::new(0),
            stop: AtomicBool::new(false),
        }
    }

    pub fn info(&self) -> SimulationInfo {
        let (status, error) = self.status.lock().expect("status lock").clone();
        SimulationInfo {
            scenario_id: self.id.clone(),
            status,
            windows_done: self.windows_done.load(Ordering::Relaxed),
            windows_total: self.config.window_count(),
            error,
        }
    }

    fn set_status(&self, status: SimStatus, error: Option<String>) {
        *self.status.lock().expect("status lock") = (status, error);
    }
}

type EmbedderFactory = dyn Fn() -> Result<Box<dyn Embedder>, RagError> + Send + Sync;

/// Shared service state. Keyed resources (scenarios, reports) are the only
/// state kept between requests.
pub struct AppState {
    pub store: Arc<Datastore>,
    scenarios: RwLock<BTreeMap<String, Arc<Scenario>>>,
    latest_scenario: Mutex<Option<String>>,
    running: Mutex<Option<String>>,
    events: broadcast::Sender<Arc<Vec<EdgeTrafficRecord>>>,
    embedder: Box<EmbedderFactory>,
    pipeline: RwLock<Option<Arc<RagPipeline>>>,
    backends: HashMap<String, Arc<dyn LlmBackend>>,
    default_backend: Option<String>,
    reports: RwLock<BTreeMap<String, Arc<EvalReport>>>,
    next_id: AtomicU64,
    base_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(store: Datastore) -> Self {
        let (events, _) = broadcast::channel(STREAM_BUFFER);
        AppState {
            store: Arc::new(store),
            scenarios: RwLock::new(BTreeMap::new()),
            latest_scenario: Mutex::new(None),
            running: Mutex::new(None),
            events,
            embedder: Box::new(|| Ok(Box::new(HashingEmbedder::default()) as Box<dyn Embedder>)),
            pipeline: RwLock::new(None),
            backends: HashMap::new(),
            default_backend: None,
            reports: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
            base_dir: None,
        }
    }

    /// Embedding provider for the schema index, built on first use.
    pub fn with_embedder<F>(mut self, factory: F) -> Self
    where
        F: Fn() -> Result<Box<dyn Embedder>, RagError> + Send + Sync + 'static,
    {
        self.embedder = Box::new(factory);
        self
    }

    /// Registers a named SQL backend. The first one registered is the default.
    pub fn with_backend(mut self, backend: Arc<dyn LlmBackend>) -> Self {
        let name = backend.id().to_string();
        self.default_backend.get_or_insert_with(|| name.clone());
        self.backends.insert(name, backend);
        self
    }

    /// Directory that relative paths in requests resolve against.
    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = Some(dir.into());
        self
    }

    fn next_id(&self, prefix: &str) -> String {
        format!("{prefix}{}", self.next_id.fetch_add(1, Ordering::Relaxed))
    }

    /// Adds a scenario with an explicit network and station set.
    pub fn register_scenario(&self, config: ScenarioConfig, graph: NetworkGraph, stations: Vec<Station>) -> Arc<Scenario> {
        let scenario = Arc::new(Scenario::new(self.next_id("s"), config, graph, stations));
        self.scenarios.write().expect("scenarios lock").insert(scenario.id.clone(), scenario.clone());
        *self.latest_scenario.lock().expect("latest lock") = Some(scenario.id.clone());
        scenario
    }

    pub fn scenario(&self, id: Option<&str>) -> Result<Arc<Scenario>, ApiError> {
        let id = match id {
            Some(id) => id.to_string(),
            None => self
                .latest_scenario
                .lock()
                .expect("latest lock")
                .clone()
                .ok_or_else(|| ApiError::not_found("no scenario has been created"))?,
        };
        self.scenarios
            .read()
            .expect("scenarios lock")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("scenario `{id}`")))
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Arc<Vec<EdgeTrafficRecord>>> {
        self.events.subscribe()
    }

    fn pipeline(&self) -> Result<Arc<RagPipeline>, ApiError> {
        if let Some(p) = self.pipeline.read().expect("pipeline lock").as_ref() {
            return Ok(p.clone());
        }
        let mut slot = self.pipeline.write().expect("pipeline lock");
        if let Some(p) = slot.as_ref() {
            return Ok(p.clone());
        }
        let pipeline = Arc::new(RagPipeline::build(&self.store, (self.embedder)()?)?);
        *slot = Some(pipeline.clone());
        Ok(pipeline)
    }

    fn resolve_path(&self, path: &str) -> PathBuf {
        let p = PathBuf::from(path);
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        }
    }

    /// A registered backend by name, or `replay:<cassette path>`.
    fn backend(&self, spec: Option<&str>) -> Result<Arc<dyn LlmBackend>, ApiError> {
        let name = spec.map(str::to_string).or_else(|| self.default_backend.clone()).ok_or_else(|| {
            ApiError::new(axum::http::StatusCode::BAD_GATEWAY, "BackendUnavailable", "no SQL backend configured")
        })?;
        if let Some(backend) = self.backends.get(&name) {
            return Ok(backend.clone());
        }
        match name.split_once(':') {
            Some(("replay", path)) => {
                let path = self.resolve_path(path);
                let id = path.file_stem().map_or("replay".into(), |s| s.to_string_lossy().into_owned());
                Ok(Arc::new(crate::rag::ReplayBackend::from_file(id, &path)?))
            }
            _ => Err(ApiError::bad_request(format!("unknown backend `{name}`"))),
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(handlers::health))
        .route("/scenario", post(handlers::create_scenario))
        .route("/simulation/{id}", get(handlers::simulation_info))
        .route("/simulation/{id}/start", post(handlers::start_simulation))
        .route("/simulation/{id}/stop", post(handlers::stop_simulation))
        .route("/traffic", get(handlers::traffic))
        .route("/traffic/stream", get(handlers::traffic_stream))
        .route("/stations", get(handlers::stations))
        .route("/stations/{id}", get(handlers::station))
        .route("/route", post(handlers::route))
        .route("/query", post(handlers::query))
        .route("/eval/run", post(handlers::eval_run))
        .route("/eval/report/{id}", get(handlers::eval_report))
        .with_state(state)
}

/// Binds and serves until the process is stopped.
pub async fn serve(state: Arc<AppState>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
