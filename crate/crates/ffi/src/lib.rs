//! C ABI over `ehub-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_open`
//! functions and released by the matching `*_free`. Every fallible call
//! returns an [`EhubStatus`]; on failure the message is available from
//! [`ehub_last_error`] on the same thread until the next failing call.
//! Structured inputs and outputs are UTF-8 JSON strings. Strings returned
//! through out-pointers are owned by the caller and released with
//! [`ehub_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ehub_core::eval::{bleu_n, component_match_f1, execution_accuracy, rouge, tokenize_sql, RougeVariant};
use ehub_core::network::{generate_synthetic_grid, NetworkError, NetworkGraph};
use ehub_core::routing::{expand_graph, solve_route, EnergyModelParams, RouteRequest, RoutingError, TrafficSnapshot};
use ehub_core::sim::EdgeTrafficRecord;
use ehub_core::stations::Station;
use ehub_core::store::{Datastore, StoreError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhubStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    ValidationError = 5,
    UnknownEdge = 6,
    NoRoute = 7,
    SyntaxError = 8,
    UnknownRelation = 9,
    NotReadOnly = 10,
    NoDataYet = 11,
    StoreError = 12,
    IoError = 13,
    Panic = 99,
}

/// ROUGE variant selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhubRouge {
    One = 1,
    Two = 2,
    L = 3,
}

/// Road network.
pub struct EhubNetwork(NetworkGraph);

/// Embedded datastore.
pub struct EhubDatastore(Datastore);

/// Network plus station fleet and energy model, ready to answer routes.
pub struct EhubRouter {
    graph: NetworkGraph,
    stations: Vec<Station>,
    traffic: TrafficSnapshot,
    energy: EnergyModelParams,
}

struct FfiError {
    status: EhubStatus,
    message: String,
}

impl FfiError {
    fn new(status: EhubStatus, message: impl Into<String>) -> Self {
        FfiError { status, message: message.into() }
    }
}

impl From<NetworkError> for FfiError {
    fn from(e: NetworkError) -> Self {
        let status = match e {
            NetworkError::Io { .. } => EhubStatus::IoError,
            NetworkError::Parse { .. } => EhubStatus::ParseError,
            NetworkError::InvalidDimension { .. } => EhubStatus::InvalidArgument,
            _ => EhubStatus::ValidationError,
        };
        FfiError::new(status, e.to_string())
    }
}

impl From<StoreError> for FfiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::SyntaxError(_) | StoreError::UnknownColumn(_) => EhubStatus::SyntaxError,
            StoreError::UnknownRelation(_) => EhubStatus::UnknownRelation,
            StoreError::NotReadOnly => EhubStatus::NotReadOnly,
            StoreError::NoDataYet(_) => EhubStatus::NoDataYet,
            StoreError::InvalidBatch(_) => EhubStatus::InvalidArgument,
            _ => EhubStatus::StoreError,
        };
        FfiError::new(status, e.to_string())
    }
}

impl From<RoutingError> for FfiError {
    fn from(e: RoutingError) -> Self {
        let status = match e {
            RoutingError::NoRoute { .. } => EhubStatus::NoRoute,
            RoutingError::UnknownEdge(_) => EhubStatus::UnknownEdge,
            RoutingError::InvalidRequest(_) => EhubStatus::InvalidArgument,
        };
        FfiError::new(status, e.to_string())
    }
}

impl From<serde_json::Error> for FfiError {
    fn from(e: serde_json::Error) -> Self {
        FfiError::new(EhubStatus::ParseError, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> EhubStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EhubStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(&e.message);
            e.status
        }
        Err(_) => {
            set_last_error("internal panic");
            EhubStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::new(EhubStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| FfiError::new(EhubStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, FfiError> {
    p.as_ref().ok_or_else(|| FfiError::new(EhubStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::new(EhubStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), FfiError> {
    let c = CString::new(s).map_err(|_| FfiError::new(EhubStatus::InvalidArgument, "output contains NUL"))?;
    write_out(out, c.into_raw())
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ehub_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ehub_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ehub_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes a `rows × cols` synthetic grid in the JSON-lines network format.
///
/// # Safety
/// `out_jsonl` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ehub_grid_generate(rows: usize, cols: usize, seed: u64, out_jsonl: *mut *mut c_char) -> EhubStatus {
    guard(|| write_string(out_jsonl, generate_synthetic_grid(rows, cols, seed)?))
}

/// Parses a JSON-lines network.
///
/// # Safety
/// `jsonl` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ehub_network_from_jsonl(jsonl: *const c_char, out: *mut *mut EhubNetwork) -> EhubStatus {
    guard(|| {
        let graph = NetworkGraph::from_jsonl(str_arg(jsonl, "jsonl")?)?;
        write_out(out, Box::into_raw(Box::new(EhubNetwork(graph))))
    })
}

/// # Safety
/// `network` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ehub_network_free(network: *mut EhubNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// # Safety
/// `network` must be a valid handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ehub_network_edge_count(network: *const EhubNetwork, out: *mut usize) -> EhubStatus {
    guard(|| write_out(out, handle(network, "network")?.0.edge_count()))
}

/// Builds a router over a copy of `network`. `stations_json` is a JSON array
/// of stations; `traffic_json` is NULL for free flow or a JSON array of edge
/// traffic records.
///
/// # Safety
/// Pointers must be valid; string arguments NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ehub_router_new(
    network: *const EhubNetwork,
    stations_json: *const c_char,
    traffic_json: *const c_char,
    out: *mut *mut EhubRouter,
) -> EhubStatus {
    guard(|| {
        let graph = handle(network, "network")?.0.clone();
        let stations: Vec<Station> = serde_json::from_str(str_arg(stations_json, "stations_json")?)?;
        let traffic = if traffic_json.is_null() {
            TrafficSnapshot::default()
        } else {
            let records: Vec<EdgeTrafficRecord> = serde_json::from_str(str_arg(traffic_json, "traffic_json")?)?;
            TrafficSnapshot::from_records(&records)
        };
        let router = EhubRouter { graph, stations, traffic, energy: EnergyModelParams::default() };
        write_out(out, Box::into_raw(Box::new(router)))
    })
}

/// # Safety
/// `router` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ehub_router_free(router: *mut EhubRouter) {
    if !router.is_null() {
        drop(Box::from_raw(router));
    }
}

/// Solves a route request (JSON) and writes the plan as JSON.
///
/// # Safety
/// Pointers must be valid; `request_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ehub_router_solve(
    router: *const EhubRouter,
    request_json: *const c_char,
    out_plan_json: *mut *mut c_char,
) -> EhubStatus {
    guard(|| {
        let r = handle(router, "router")?;
        let request: RouteRequest = serde_json::from_str(str_arg(request_json, "request_json")?)?;
        let xg = expand_graph(&r.graph, &r.stations, &request, &r.traffic, &r.energy)?;
        let plan = solve_route(&request, &xg)?;
        write_string(out_plan_json, serde_json::to_string(&plan)?)
    })
}

/// Opens an in-memory datastore with the schema created.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ehub_datastore_new(out: *mut *mut EhubDatastore) -> EhubStatus {
    guard(|| write_out(out, Box::into_raw(Box::new(EhubDatastore(Datastore::initialized()?)))))
}

/// # Safety
/// `store` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ehub_datastore_free(store: *mut EhubDatastore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Loads `online_demo.jsonl`, `stations.jsonl` and `user_paths.jsonl` from
/// `dir` where present.
///
/// # Safety
/// `store` must be a valid handle, `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ehub_datastore_seed_dir(store: *const EhubDatastore, dir: *const c_char) -> EhubStatus {
    guard(|| Ok(handle(store, "store")?.0.seed_from_dir(Path::new(str_arg(dir, "dir")?))?))
}

/// Runs one read-only SELECT and writes `{"columns": [...], "rows": [[...]]}`.
///
/// # Safety
/// Pointers must be valid; `sql` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ehub_datastore_query(
    store: *const EhubDatastore,
    sql: *const c_char,
    out_json: *mut *mut c_char,
) -> EhubStatus {
    guard(|| {
        let table = handle(store, "store")?.0.execute_sql(str_arg(sql, "sql")?)?;
        write_string(out_json, serde_json::to_string(&table)?)
    })
}

/// Hex SHA-256 over all table contents.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ehub_datastore_checksum(store: *const EhubDatastore, out_hex: *mut *mut c_char) -> EhubStatus {
    guard(|| write_string(out_hex, handle(store, "store")?.0.checksum()?))
}

/// BLEU over orders `1..=n` of two SQL strings.
///
/// # Safety
/// String arguments NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ehub_metric_bleu(pred: *const c_char, gold: *const c_char, n: u32, out: *mut f64) -> EhubStatus {
    guard(|| {
        if !(1..=4).contains(&n) {
            return Err(FfiError::new(EhubStatus::InvalidArgument, format!("BLEU order must be 1..=4, got {n}")));
        }
        let (p, g) = (tokenize_sql(str_arg(pred, "pred")?), tokenize_sql(str_arg(gold, "gold")?));
        write_out(out, bleu_n(&p, &g, n as usize))
    })
}

/// ROUGE-1, ROUGE-2 or ROUGE-L F1 of two SQL strings.
///
/// # Safety
/// String arguments NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ehub_metric_rouge(
    pred: *const c_char,
    gold: *const c_char,
    variant: EhubRouge,
    out: *mut f64,
) -> EhubStatus {
    guard(|| {
        let (p, g) = (tokenize_sql(str_arg(pred, "pred")?), tokenize_sql(str_arg(gold, "gold")?));
        let variant = match variant {
            EhubRouge::One => RougeVariant::One,
            EhubRouge::Two => RougeVariant::Two,
            EhubRouge::L => RougeVariant::L,
        };
        write_out(out, rouge(&p, &g, variant))
    })
}

/// Clause-level component-match F1.
///
/// # Safety
/// String arguments NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ehub_metric_component_f1(pred: *const c_char, gold: *const c_char, out: *mut f64) -> EhubStatus {
    guard(|| write_out(out, component_match_f1(str_arg(pred, "pred")?, str_arg(gold, "gold")?)))
}

/// Whether `pred` returns the same result as `gold` on `store`.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ehub_metric_execution_match(
    store: *const EhubDatastore,
    pred: *const c_char,
    gold: *const c_char,
    out: *mut bool,
) -> EhubStatus {
    guard(|| {
        let store = &handle(store, "store")?.0;
        let outcome = execution_accuracy(str_arg(pred, "pred")?, str_arg(gold, "gold")?, store)?;
        write_out(out, outcome.matched)
    })
}
