use std::convert::Infallible;
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::Json;
use serde::{Deserialize, Serialize};
use tokio_stream::wrappers::BroadcastStream;
use tokio_stream::{Stream, StreamExt};

use super::{ApiError, AppState, Scenario, SimStatus, SimulationInfo};
use crate::eval::{run_evaluation, validate_corpus, EvalReport, QaCase, UserClass};
use crate::network::{build_graph, ScenarioConfig};
use crate::routing::{commit_route, expand_graph, solve_route, RoutePlan, RouteRequest, TrafficSnapshot, UserPathRecord};
use crate::sim::{run_scenario, EdgeTrafficRecord, SimError, SinkFn};
use crate::stations::{place_stations, Station, StationError};
use crate::store::{StoreError, Value};

type AppResult<T> = Result<Json<T>, ApiError>;

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

pub async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScenarioCreated {
    pub scenario_id: String,
    pub edges: usize,
    pub stations: usize,
    pub windows: u32,
}

pub async fn create_scenario(State(state): State<Arc<AppState>>, body: String) -> AppResult<ScenarioCreated> {
    blocking(move || {
        let config = ScenarioConfig::from_json(&body, state.base_dir.as_deref())?;
        let graph = build_graph(&config)?;
        let stations = place_stations(&graph, &config.stations)?;
        let (edges, windows, count) = (graph.edge_count(), config.window_count(), stations.len());
        let scenario = state.register_scenario(config, graph, stations);
        Ok(Json(ScenarioCreated { scenario_id: scenario.id.clone(), edges, stations: count, windows }))
    })
    .await
}

pub async fn simulation_info(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> AppResult<SimulationInfo> {
    Ok(Json(state.scenario(Some(&id))?.info()))
}

const STOPPED: &str = "stopped by request";

fn run_simulation(state: Arc<AppState>, scenario: Arc<Scenario>) {
    let store = state.store.clone();
    let events = state.events.clone();
    let sink = SinkFn(|window: &[EdgeTrafficRecord]| {
        if scenario.stop.load(Ordering::Relaxed) {
            return Err(SimError::Sink(STOPPED.into()));
        }
        store.ingest_all(window).map_err(|e| SimError::Sink(e.to_string()))?;
        scenario.windows_done.fetch_add(1, Ordering::Relaxed);
        // no subscribers is fine
        let _ = events.send(Arc::new(window.to_vec()));
        Ok(())
    });
    match run_scenario(&scenario.graph, &scenario.config, sink) {
        Ok(_) => scenario.set_status(SimStatus::Completed, None),
        Err(SimError::Sink(msg)) if msg == STOPPED => scenario.set_status(SimStatus::Stopped, None),
        Err(e) => scenario.set_status(SimStatus::Failed, Some(e.to_string())),
    }
    *state.running.lock().expect("running lock") = None;
}

pub async fn start_simulation(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> AppResult<SimulationInfo> {
    let scenario = state.scenario(Some(&id))?;
    {
        let mut running = state.running.lock().expect("running lock");
        if let Some(other) = running.as_ref() {
            return Err(ApiError::conflict(format!("simulation of scenario `{other}` is already running")));
        }
        let status = scenario.info().status;
        if status != SimStatus::Created {
            return Err(ApiError::conflict(format!("scenario `{id}` cannot start from state {status:?}")));
        }
        state.store.clear_traffic()?;
        state.store.set_window(scenario.config.aggregation_window_s);
        state.store.replace_stations(&scenario.fleet.lock().expect("fleet lock").rows())?;
        scenario.set_status(SimStatus::Running, None);
        *running = Some(id);
    }
    let info = scenario.info();
    let worker_state = state.clone();
    std::thread::spawn(move || run_simulation(worker_state, scenario));
    Ok(Json(info))
}

pub async fn stop_simulation(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> AppResult<SimulationInfo> {
    let scenario = state.scenario(Some(&id))?;
    let info = scenario.info();
    if info.status != SimStatus::Running {
        return Err(ApiError::conflict(format!("scenario `{id}` is not running")));
    }
    scenario.stop.store(true, Ordering::Relaxed);
    Ok(Json(info))
}

#[derive(Debug, Deserialize)]
pub struct TrafficQuery {
    pub edge: String,
    #[serde(default)]
    pub from: Option<i64>,
    #[serde(default)]
    pub to: Option<i64>,
}

pub async fn traffic(State(state): State<Arc<AppState>>, Query(q): Query<TrafficQuery>) -> AppResult<Vec<EdgeTrafficRecord>> {
    let (from, to) = (q.from.unwrap_or(0), q.to.unwrap_or(i64::MAX));
    let rows = state.store.edge_history(&q.edge, from, to)?;
    if rows.is_empty() {
        return Err(StoreError::NoDataYet(to).into());
    }
    Ok(Json(rows))
}

/// Pushes every completed window as a `window` event carrying a JSON array of
/// records.
pub async fn traffic_stream(
    State(state): State<Arc<AppState>>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let stream = BroadcastStream::new(state.subscribe()).map(|item| {
        Ok(match item {
            Ok(window) => Event::default().event("window").json_data(window.as_slice()).unwrap_or_default(),
            Err(lagged) => Event::default().event("lagged").data(lagged.to_string()),
        })
    });
    Sse::new(stream).keep_alive(KeepAlive::new().interval(Duration::from_secs(15)))
}

#[derive(Debug, Default, Deserialize)]
pub struct ScenarioParam {
    #[serde(default)]
    pub scenario: Option<String>,
}

pub async fn stations(State(state): State<Arc<AppState>>, Query(q): Query<ScenarioParam>) -> AppResult<Vec<Station>> {
    let scenario = state.scenario(q.scenario.as_deref())?;
    let fleet = scenario.fleet.lock().expect("fleet lock");
    Ok(Json(fleet.stations().cloned().collect()))
}

pub async fn station(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ScenarioParam>,
) -> AppResult<Station> {
    let scenario = state.scenario(q.scenario.as_deref())?;
    let fleet = scenario.fleet.lock().expect("fleet lock");
    fleet.station(&id).cloned().map(Json).ok_or_else(|| StationError::UnknownStation(id).into())
}

#[derive(Debug, Default, Deserialize)]
pub struct RouteParams {
    #[serde(default)]
    pub scenario: Option<String>,
    /// Use the traffic window completed by this time; latest when absent.
    #[serde(default)]
    pub time_s: Option<i64>,
    /// Book the vehicles and record the trip.
    #[serde(default)]
    pub commit: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RouteResponse {
    #[serde(flatten)]
    pub plan: RoutePlan,
    pub path_sequence: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub committed: Option<UserPathRecord>,
}

pub async fn route(
    State(state): State<Arc<AppState>>,
    Query(params): Query<RouteParams>,
    Json(request): Json<RouteRequest>,
) -> AppResult<RouteResponse> {
    blocking(move || {
        let scenario = state.scenario(params.scenario.as_deref())?;
        // before any window completes, routes use free-flow speeds
        let traffic = match state.store.snapshot_traffic(params.time_s.unwrap_or(i64::MAX)) {
            Ok(snapshot) => snapshot,
            Err(StoreError::NoDataYet(_)) => TrafficSnapshot::from_records(&[]),
            Err(e) => return Err(e.into()),
        };
        let mut fleet = scenario.fleet.lock().expect("fleet lock");
        let stations: Vec<Station> = fleet.stations().cloned().collect();
        let xg = expand_graph(&scenario.graph, &stations, &request, &traffic, &scenario.config.energy)?;
        let plan = solve_route(&request, &xg)?;
        let committed = if params.commit {
            Some(commit_route(&plan, &mut fleet, &state.store)?)
        } else {
            None
        };
        Ok(Json(RouteResponse { path_sequence: plan.path_sequence(), plan, committed }))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct QueryRequest {
    pub question: String,
    #[serde(default)]
    pub user_class: Option<UserClass>,
    #[serde(default)]
    pub backend: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedSchema {
    pub doc_id: String,
    pub table: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_class: Option<UserClass>,
    pub model: String,
    pub retrieved_schemas: Vec<RetrievedSchema>,
    pub generated_sql: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Set when the generated SQL failed to execute; `rows` is then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution_error: Option<ApiError>,
}

pub async fn query(State(state): State<Arc<AppState>>, Json(req): Json<QueryRequest>) -> AppResult<QueryResponse> {
    blocking(move || {
        let pipeline = state.pipeline()?;
        let backend = state.backend(req.backend.as_deref())?;
        let answer = pipeline.answer(&req.question, backend.as_ref())?;
        let retrieved_schemas = answer
            .retrieved
            .iter()
            .map(|r| RetrievedSchema {
                doc_id: r.doc_id.clone(),
                table: r.metadata.get("table").cloned().unwrap_or_default(),
                score: r.score,
            })
            .collect();
        let (columns, rows, execution_error) = match state.store.execute_sql(&answer.sql) {
            Ok(table) => (table.columns, table.rows, None),
            Err(e) => (Vec::new(), Vec::new(), Some(ApiError::from(e))),
        };
        Ok(Json(QueryResponse {
            question: req.question,
            user_class: req.user_class,
            model: backend.id().to_string(),
            retrieved_schemas,
            generated_sql: answer.sql,
            columns,
            rows,
            execution_error,
        }))
    })
    .await
}

/// A corpus file path or the cases themselves.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum CorpusSpec {
    Path(String),
    Cases(Vec<QaCase>),
}

#[derive(Debug, Deserialize)]
pub struct EvalRunRequest {
    pub corpus: CorpusSpec,
    #[serde(default)]
    pub backend: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRunResponse {
    pub report_id: String,
    pub cases: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

pub async fn eval_run(State(state): State<Arc<AppState>>, Json(req): Json<EvalRunRequest>) -> AppResult<EvalRunResponse> {
    blocking(move || {
        let cases = match req.corpus {
            CorpusSpec::Path(p) => crate::eval::load_corpus(&state.resolve_path(&p))?,
            CorpusSpec::Cases(c) => c,
        };
        if cases.is_empty() {
            return Err(ApiError::bad_request("corpus is empty"));
        }
        validate_corpus(&cases, &state.store)?;
        let pipeline = state.pipeline()?;
        let backend = state.backend(req.backend.as_deref())?;
        let report = run_evaluation(&cases, &pipeline, backend.as_ref(), &state.store)?;
        let id = state.next_id("r");
        let response = EvalRunResponse { report_id: id.clone(), cases: report.cases.len(), aborted: report.aborted.clone() };
        state.reports.write().expect("reports lock").insert(id, Arc::new(report));
        Ok(Json(response))
    })
    .await
}

pub async fn eval_report(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> AppResult<EvalReport> {
    let reports = state.reports.read().expect("reports lock");
    let report = reports.get(&id).ok_or_else(|| ApiError::not_found(format!("report `{id}`")))?;
    Ok(Json(EvalReport::clone(report)))
}

