//! Embedded relational store holding the `online_demo`, `stations` and
//! `user_paths` tables.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Mutex, MutexGuard};

use rusqlite::types::ValueRef;
use rusqlite::{params, Connection, ErrorCode, OptionalExtension};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::network::{AgentClass, PerClass};
use crate::routing::TrafficSnapshot;
use crate::sim::EdgeTrafficRecord;
use crate::stations::StationRow;

pub const DEFAULT_MAX_BATCH: usize = 500;
pub const DEFAULT_WINDOW_S: u32 = 360;

pub const TABLES: [&str; 3] = ["online_demo", "stations", "user_paths"];

const SCHEMA: &str = "
CREATE TABLE online_demo (
    edge_id TEXT NOT NULL,
    simulation_time INTEGER NOT NULL,
    pedestrian_speed REAL,
    bike_speed REAL,
    car_speed REAL,
    PRIMARY KEY (edge_id, simulation_time)
);
CREATE TABLE stations (
    station_id TEXT NOT NULL,
    edge_id TEXT NOT NULL,
    vehicle_id TEXT NOT NULL,
    vehicle_type TEXT NOT NULL,
    battery_level REAL NOT NULL,
    PRIMARY KEY (station_id, vehicle_id)
);
CREATE TABLE user_paths (
    path_id INTEGER PRIMARY KEY,
    start_edge TEXT NOT NULL,
    end_edge TEXT NOT NULL,
    time_cost_s REAL NOT NULL,
    execution_time_ms REAL NOT NULL,
    optimal_path_sequence TEXT NOT NULL
);
";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("syntax error: {0}")]
    SyntaxError(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("only single read-only SELECT statements are accepted")]
    NotReadOnly,
    #[error("duplicate key {0}")]
    DuplicateKey(String),
    #[error("schema already initialized")]
    AlreadyInitialized,
    #[error("no completed traffic window at or before t = {0} s")]
    NoDataYet(i64),
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
    #[error("store error: {0}")]
    Store(String),
}

impl From<rusqlite::Error> for StoreError {
    fn from(e: rusqlite::Error) -> Self {
        StoreError::Store(e.to_string())
    }
}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::Store(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogicalType {
    Text,
    Integer,
    Real,
}

impl LogicalType {
    fn from_declared(decl: &str) -> Self {
        let upper = decl.to_ascii_uppercase();
        if upper.contains("INT") {
            LogicalType::Integer
        } else if upper.contains("REAL") || upper.contains("FLOA") || upper.contains("DOUB") {
            LogicalType::Real
        } else {
            LogicalType::Text
        }
    }

    pub fn as_sql(self) -> &'static str {
        match self {
            LogicalType::Text => "TEXT",
            LogicalType::Integer => "INTEGER",
            LogicalType::Real => "REAL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub logical_type: LogicalType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub column: String,
    pub ref_table: String,
    pub ref_column: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<ColumnSchema>,
    pub primary_key: Vec<String>,
    pub foreign_keys: Vec<ForeignKey>,
}

/// A single SQL value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
}

impl Value {
    fn from_ref(v: ValueRef<'_>) -> Self {
        match v {
            ValueRef::Null => Value::Null,
            ValueRef::Integer(i) => Value::Integer(i),
            ValueRef::Real(r) => Value::Real(r),
            ValueRef::Text(t) => Value::Text(String::from_utf8_lossy(t).into_owned()),
            ValueRef::Blob(b) => Value::Text(hex::encode(b)),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Rows as JSON objects keyed by column name.
    pub fn to_json_rows(&self) -> Vec<serde_json::Map<String, serde_json::Value>> {
        self.rows
            .iter()
            .map(|row| {
                self.columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.clone(), serde_json::to_value(v).unwrap_or(serde_json::Value::Null)))
                    .collect()
            })
            .collect()
    }
}

/// Row of `user_paths`. `path_id` is assigned on insert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPathRecord {
    #[serde(default)]
    pub path_id: Option<i64>,
    pub start_edge: String,
    pub end_edge: String,
    pub time_cost_s: f64,
    pub execution_time_ms: f64,
    pub optimal_path_sequence: String,
}

/// Thread-safe handle over one SQLite connection. Writers are serialized by
/// the connection lock; each write is a single transaction.
#[derive(Debug)]
pub struct Datastore {
    conn: Mutex<Connection>,
    window_s: AtomicU32,
    max_batch: usize,
}

fn is_select(sql: &str) -> bool {
    let head: String = sql.trim_start().chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    head.eq_ignore_ascii_case("select") || head.eq_ignore_ascii_case("with")
}

fn classify_prepare_error(e: rusqlite::Error) -> StoreError {
    match e {
        rusqlite::Error::MultipleStatement => StoreError::NotReadOnly,
        rusqlite::Error::SqlInputError { msg, .. } | rusqlite::Error::SqliteFailure(_, Some(msg)) => {
            if let Some(name) = msg.strip_prefix("no such table: ") {
                StoreError::UnknownRelation(name.to_string())
            } else if let Some(name) = msg.strip_prefix("no such column: ") {
                StoreError::UnknownColumn(name.to_string())
            } else {
                StoreError::SyntaxError(msg)
            }
        }
        other => StoreError::SyntaxError(other.to_string()),
    }
}

fn duplicate_or(e: rusqlite::Error, key: impl FnOnce() -> String) -> StoreError {
    match &e {
        rusqlite::Error::SqliteFailure(f, _) if f.code == ErrorCode::ConstraintViolation => {
            StoreError::DuplicateKey(key())
        }
        _ => e.into(),
    }
}

impl Datastore {
    fn wrap(conn: Connection) -> Self {
        Datastore { conn: Mutex::new(conn), window_s: AtomicU32::new(DEFAULT_WINDOW_S), max_batch: DEFAULT_MAX_BATCH }
    }

    pub fn in_memory() -> Result<Self, StoreError> {
        Ok(Self::wrap(Connection::open_in_memory()?))
    }

    pub fn open(path: &Path) -> Result<Self, StoreError> {
        Ok(Self::wrap(Connection::open(path)?))
    }

    /// In-memory store with the schema created.
    pub fn initialized() -> Result<Self, StoreError> {
        let store = Self::in_memory()?;
        store.init_schema()?;
        Ok(store)
    }

    /// Aggregation window length of the ingested traffic, used by
    /// [`Self::snapshot_traffic`] to decide which windows are complete.
    pub fn with_window(self, window_s: u32) -> Self {
        self.set_window(window_s);
        self
    }

    pub fn with_max_batch(mut self, max_batch: usize) -> Self {
        self.max_batch = max_batch.max(1);
        self
    }

    pub fn window_s(&self) -> u32 {
        self.window_s.load(Ordering::Relaxed)
    }

    /// Aggregation window of the traffic being ingested, used by snapshots.
    pub fn set_window(&self, window_s: u32) {
        self.window_s.store(window_s.max(1), Ordering::Relaxed);
    }

    pub fn max_batch(&self) -> usize {
        self.max_batch
    }

    fn lock(&self) -> MutexGuard<'_, Connection> {
        self.conn.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn init_schema(&self) -> Result<(), StoreError> {
        let conn = self.lock();
        let existing: i64 = conn.query_row(
            "SELECT COUNT(*) FROM sqlite_master WHERE type = 'table' AND name IN ('online_demo', 'stations', 'user_paths')",
            [],
            |r| r.get(0),
        )?;
        if existing > 0 {
            return Err(StoreError::AlreadyInitialized);
        }
        conn.execute_batch(SCHEMA)?;
        Ok(())
    }

    pub fn table_names(&self) -> Result<Vec<String>, StoreError> {
        let conn = self.lock();
        let mut stmt =
            conn.prepare("SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name")?;
        let names = stmt.query_map([], |r| r.get(0))?.collect::<Result<Vec<String>, _>>()?;
        Ok(names)
    }

    pub fn table_schema(&self, table: &str) -> Result<TableSchema, StoreError> {
        let conn = self.lock();
        let mut stmt = conn.prepare("SELECT name, type, pk FROM pragma_table_info(?1) ORDER BY cid")?;
        let cols = stmt
            .query_map([table], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?, r.get::<_, i64>(2)?)))?
            .collect::<Result<Vec<_>, _>>()?;
        if cols.is_empty() {
            return Err(StoreError::UnknownRelation(table.to_string()));
        }
        let mut pk: Vec<(i64, String)> =
            cols.iter().filter(|c| c.2 > 0).map(|c| (c.2, c.0.clone())).collect();
        pk.sort();
        let mut fk_stmt = conn.prepare("SELECT \"from\", \"table\", \"to\" FROM pragma_foreign_key_list(?1)")?;
        let foreign_keys = fk_stmt
            .query_map([table], |r| {
                Ok(ForeignKey { column: r.get(0)?, ref_table: r.get(1)?, ref_column: r.get(2)? })
            })?
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TableSchema {
            name: table.to_string(),
            columns: cols
                .iter()
                .map(|(name, decl, _)| ColumnSchema { name: name.clone(), logical_type: LogicalType::from_declared(decl) })
                .collect(),
            primary_key: pk.into_iter().map(|(_, n)| n).collect(),
            foreign_keys,
        })
    }

    pub fn schemas(&self) -> Result<Vec<TableSchema>, StoreError> {
        self.table_names()?.iter().map(|t| self.table_schema(t)).collect()
    }

    /// Writes one batch atomically. Batches must be non-empty, at most
    /// `max_batch` long and sorted by `(simulation_time, edge_id)`.
    pub fn ingest(&self, batch: &[EdgeTrafficRecord]) -> Result<usize, StoreError> {
        if batch.is_empty() {
            return Err(StoreError::InvalidBatch("empty batch".into()));
        }
        if batch.len() > self.max_batch {
            return Err(StoreError::InvalidBatch(format!("{} records exceed the limit of {}", batch.len(), self.max_batch)));
        }
        if batch.windows(2).any(|w| (w[0].simulation_time, &w[0].edge_id) > (w[1].simulation_time, &w[1].edge_id)) {
            return Err(StoreError::InvalidBatch("records not sorted by (simulation_time, edge_id)".into()));
        }
        let mut conn = self.lock();
        let tx = conn.transaction()?;
        {
            let mut stmt = tx.prepare_cached(
                "INSERT INTO online_demo (edge_id, simulation_time, pedestrian_speed, bike_speed, car_speed) VALUES (?1, ?2, ?3, ?4, ?5)",
            )?;
            for r in batch {
                stmt.execute(params![r.edge_id, r.simulation_time, r.pedestrian_speed, r.bike_speed, r.car_speed])
                    .map_err(|e| duplicate_or(e, || format!("({}, {})", r.edge_id, r.simulation_time)))?;
            }
        }
        tx.commit()?;
        Ok(batch.len())
    }

    /// Sorts and splits `records` into batches of at most `max_batch`.
    pub fn ingest_all(&self, records: &[EdgeTrafficRecord]) -> Result<usize, StoreError> {
        let mut sorted = records.to_vec();
        sorted.sort_by(|a, b| (a.simulation_time, &a.edge_id).cmp(&(b.simulation_time, &b.edge_id)));
        let mut written = 0;
        for chunk in sorted.chunks(self.max_batch) {
            written += self.ingest(chunk)?;
        }
        Ok(written)
    }

    /// Runs one read-only `SELECT`/`WITH` statement.
    pub fn execute_sql(&self, sql: &str) -> Result<ResultTable, StoreError> {
        if !is_select(sql) {
            return Err(StoreError::NotReadOnly);
        }
        let conn = self.lock();
        let mut stmt = conn.prepare(sql).map_err(classify_prepare_error)?;
        if !stmt.readonly() {
            return Err(StoreError::NotReadOnly);
        }
        let columns: Vec<String> = stmt.column_names().into_iter().map(str::to_string).collect();
        let width = columns.len();
        let mut rows = Vec::new();
        let mut cursor = stmt.query([]).map_err(classify_prepare_error)?;
        while let Some(row) = cursor.next().map_err(classify_prepare_error)? {
            let values = (0..width).map(|i| row.get_ref(i).map(Value::from_ref)).collect::<Result<Vec<_>, _>>()?;
            rows.push(values);
        }
        Ok(ResultTable { columns, rows })
    }

    /// Speeds from the latest window that is complete at time `t`, i.e. whose
    /// start plus the window length is at most `t`.
    pub fn snapshot_traffic(&self, t: i64) -> Result<TrafficSnapshot, StoreError> {
        let conn = self.lock();
        let latest: Option<i64> = conn
            .query_row(
                "SELECT MAX(simulation_time) FROM online_demo WHERE simulation_time + ?1 <= ?2",
                params![i64::from(self.window_s()), t],
                |r| r.get(0),
            )
            .optional()?
            .flatten();
        let window = latest.ok_or(StoreError::NoDataYet(t))?;
        let mut stmt = conn.prepare(
            "SELECT edge_id, simulation_time, pedestrian_speed, bike_speed, car_speed FROM online_demo WHERE simulation_time = ?1 ORDER BY edge_id",
        )?;
        let records = stmt
            .query_map([window], |r| {
                Ok(EdgeTrafficRecord {
                    edge_id: r.get(0)?,
                    simulation_time: r.get(1)?,
                    pedestrian_speed: r.get(2)?,
                    bike_speed: r.get(3)?,
                    car_speed: r.get(4)?,
                })
            })?
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TrafficSnapshot::from_records(&records))
    }

    /// Traffic rows for one edge with `from <= simulation_time <= to`.
    pub fn edge_history(&self, edge_id: &str, from: i64, to: i64) -> Result<Vec<EdgeTrafficRecord>, StoreError> {
        let conn = self.lock();
        let mut stmt = conn.prepare(
            "SELECT edge_id, simulation_time, pedestrian_speed, bike_speed, car_speed FROM online_demo
             WHERE edge_id = ?1 AND simulation_time BETWEEN ?2 AND ?3 ORDER BY simulation_time",
        )?;
        let rows = stmt
            .query_map(params![edge_id, from, to], |r| {
                Ok(EdgeTrafficRecord {
                    edge_id: r.get(0)?,
                    simulation_time: r.get(1)?,
                    pedestrian_speed: r.get(2)?,
                    bike_speed: r.get(3)?,
                    car_speed: r.get(4)?,
                })
            })?
            .collect::<Result<Vec<_>, _>>()?;
        Ok(rows)
    }

    /// Drops every traffic record, before a new simulation run.
    pub fn clear_traffic(&self) -> Result<usize, StoreError> {
        Ok(self.lock().execute("DELETE FROM online_demo", [])?)
    }

    /// Replaces the whole `stations` table.
    pub fn replace_stations(&self, rows: &[StationRow]) -> Result<usize, StoreError> {
        let mut conn = self.lock();
        let tx = conn.transaction()?;
        write_stations(&tx, rows)?;
        tx.commit()?;
        Ok(rows.len())
    }

    pub fn station_rows(&self) -> Result<Vec<StationRow>, StoreError> {
        let conn = self.lock();
        let mut stmt = conn.prepare(
            "SELECT station_id, edge_id, vehicle_id, vehicle_type, battery_level FROM stations ORDER BY station_id, vehicle_id",
        )?;
        let rows = stmt
            .query_map([], |r| {
                Ok(StationRow {
                    station_id: r.get(0)?,
                    edge_id: r.get(1)?,
                    vehicle_id: r.get(2)?,
                    vehicle_type: r.get(3)?,
                    battery_level: r.get(4)?,
                })
            })?
            .collect::<Result<Vec<_>, _>>()?;
        Ok(rows)
    }

    pub fn insert_user_path(&self, record: &UserPathRecord) -> Result<i64, StoreError> {
        let mut conn = self.lock();
        let tx = conn.transaction()?;
        let id = write_user_path(&tx, record)?;
        tx.commit()?;
        Ok(id)
    }

    /// Writes a trip and the resulting station table in one transaction.
    pub fn record_trip(&self, record: &UserPathRecord, stations: &[StationRow]) -> Result<i64, StoreError> {
        let mut conn = self.lock();
        let tx = conn.transaction()?;
        let id = write_user_path(&tx, record)?;
        write_stations(&tx, stations)?;
        tx.commit()?;
        Ok(id)
    }

    /// Loads `online_demo.jsonl`, `stations.jsonl` and `user_paths.jsonl`
    /// from `dir`, skipping missing files.
    pub fn seed_from_dir(&self, dir: &Path) -> Result<(), StoreError> {
        let read = |name: &str| -> Result<Option<String>, StoreError> {
            let path = dir.join(name);
            if path.exists() {
                Ok(Some(std::fs::read_to_string(path)?))
            } else {
                Ok(None)
            }
        };
        if let Some(text) = read("online_demo.jsonl")? {
            self.ingest_all(&parse_jsonl::<EdgeTrafficRecord>(&text)?)?;
        }
        if let Some(text) = read("stations.jsonl")? {
            self.replace_stations(&parse_jsonl::<StationRow>(&text)?)?;
        }
        if let Some(text) = read("user_paths.jsonl")? {
            let paths = parse_jsonl::<UserPathRecord>(&text)?;
            let mut conn = self.lock();
            let tx = conn.transaction()?;
            for p in &paths {
                write_user_path(&tx, p)?;
            }
            tx.commit()?;
        }
        Ok(())
    }

    pub fn row_count(&self, table: &str) -> Result<i64, StoreError> {
        if !TABLES.contains(&table) {
            return Err(StoreError::UnknownRelation(table.to_string()));
        }
        let conn = self.lock();
        Ok(conn.query_row(&format!("SELECT COUNT(*) FROM {table}"), [], |r| r.get(0))?)
    }

    /// SHA-256 over every row of every table in primary-key order.
    pub fn checksum(&self) -> Result<String, StoreError> {
        let mut hasher = Sha256::new();
        for table in self.table_names()? {
            let pk = self.table_schema(&table)?.primary_key.join(", ");
            let order = if pk.is_empty() { "rowid".to_string() } else { pk };
            let result = self.execute_sql(&format!("SELECT * FROM {table} ORDER BY {order}"))?;
            let mut line = String::new();
            for row in &result.rows {
                line.clear();
                let _ = write!(line, "{table}|");
                for v in row {
                    let _ = write!(line, "{v:?}|");
                }
                hasher.update(line.as_bytes());
            }
        }
        Ok(hex::encode(hasher.finalize()))
    }
}

fn write_stations(tx: &rusqlite::Transaction<'_>, rows: &[StationRow]) -> Result<(), StoreError> {
    tx.execute("DELETE FROM stations", [])?;
    let mut stmt = tx.prepare_cached(
        "INSERT INTO stations (station_id, edge_id, vehicle_id, vehicle_type, battery_level) VALUES (?1, ?2, ?3, ?4, ?5)",
    )?;
    for r in rows {
        stmt.execute(params![r.station_id, r.edge_id, r.vehicle_id, r.vehicle_type, r.battery_level])
            .map_err(|e| duplicate_or(e, || format!("({}, {})", r.station_id, r.vehicle_id)))?;
    }
    Ok(())
}

fn write_user_path(tx: &rusqlite::Transaction<'_>, r: &UserPathRecord) -> Result<i64, StoreError> {
    tx.execute(
        "INSERT INTO user_paths (path_id, start_edge, end_edge, time_cost_s, execution_time_ms, optimal_path_sequence)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
        params![r.path_id, r.start_edge, r.end_edge, r.time_cost_s, r.execution_time_ms, r.optimal_path_sequence],
    )
    .map_err(|e| duplicate_or(e, || format!("path_id {:?}", r.path_id)))?;
    Ok(tx.last_insert_rowid())
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, StoreError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| StoreError::Store(format!("line {}: {e}", i + 1))))
        .collect()
}

impl TrafficSnapshot {
    /// Speed of one class on one edge, as stored.
    pub fn class_speed(&self, edge_id: &str, class: AgentClass) -> Option<f64> {
        self.get(edge_id).and_then(|s: &PerClass<Option<f64>>| s[class])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(edge: &str, t: i64, v: f64) -> EdgeTrafficRecord {
        EdgeTrafficRecord {
            edge_id: edge.into(),
            simulation_time: t,
            pedestrian_speed: Some(v),
            bike_speed: Some(v * 2.0),
            car_speed: None,
        }
    }

    #[test]
    fn init_creates_three_tables() {
        let store = Datastore::initialized().unwrap();
        assert_eq!(store.table_names().unwrap(), vec!["online_demo", "stations", "user_paths"]);
        assert_eq!(store.init_schema(), Err(StoreError::AlreadyInitialized));
    }

    #[test]
    fn introspection_matches_declared_columns() {
        let store = Datastore::initialized().unwrap();
        let demo = store.table_schema("online_demo").unwrap();
        let cols: Vec<(&str, LogicalType)> = demo.columns.iter().map(|c| (c.name.as_str(), c.logical_type)).collect();
        assert_eq!(
            cols,
            vec![
                ("edge_id", LogicalType::Text),
                ("simulation_time", LogicalType::Integer),
                ("pedestrian_speed", LogicalType::Real),
                ("bike_speed", LogicalType::Real),
                ("car_speed", LogicalType::Real),
            ]
        );
        assert_eq!(demo.primary_key, vec!["edge_id", "simulation_time"]);
        assert_eq!(store.table_schema("stations").unwrap().primary_key, vec!["station_id", "vehicle_id"]);
        let paths = store.table_schema("user_paths").unwrap();
        assert_eq!(paths.primary_key, vec!["path_id"]);
        assert_eq!(paths.columns.len(), 6);
        assert!(matches!(store.table_schema("nope"), Err(StoreError::UnknownRelation(_))));
    }

    #[test]
    fn batch_is_atomic() {
        let store = Datastore::initialized().unwrap();
        let batch: Vec<_> = (0..500).map(|i| rec(&format!("e{i:04}"), 0, 1.0)).collect();
        assert_eq!(store.ingest(&batch).unwrap(), 500);
        let clash = vec![rec("a", 360, 1.0), rec("e0001", 360, 1.0), rec("e0001", 360, 1.0)];
        assert!(matches!(store.ingest(&clash), Err(StoreError::DuplicateKey(_))));
        assert_eq!(store.row_count("online_demo").unwrap(), 500);
        assert!(matches!(store.ingest(&[]), Err(StoreError::InvalidBatch(_))));
        let unsorted = vec![rec("b", 0, 1.0), rec("a", 0, 1.0)];
        assert!(matches!(store.ingest(&unsorted), Err(StoreError::InvalidBatch(_))));
        let big: Vec<_> = (0..501).map(|i| rec(&format!("x{i:04}"), 720, 1.0)).collect();
        assert!(matches!(store.ingest(&big), Err(StoreError::InvalidBatch(_))));
    }

    #[test]
    fn read_only_enforced() {
        let store = Datastore::initialized().unwrap();
        assert_eq!(store.execute_sql("DROP TABLE stations"), Err(StoreError::NotReadOnly));
        assert_eq!(store.execute_sql("SELECT 1; DROP TABLE stations"), Err(StoreError::NotReadOnly));
        assert_eq!(
            store.execute_sql("WITH x AS (SELECT 1) DELETE FROM stations"),
            Err(StoreError::NotReadOnly)
        );
        assert!(matches!(store.execute_sql("SELECT * FROM nowhere"), Err(StoreError::UnknownRelation(t)) if t == "nowhere"));
        assert!(matches!(store.execute_sql("SELECT nope FROM stations"), Err(StoreError::UnknownColumn(_))));
        assert!(matches!(store.execute_sql("SELEC 1"), Err(StoreError::NotReadOnly)));
        assert!(matches!(store.execute_sql("SELECT FROM WHERE"), Err(StoreError::SyntaxError(_))));
        let ok = store.execute_sql("SELECT 1 AS one, 'a' AS two;").unwrap();
        assert_eq!(ok.columns, vec!["one", "two"]);
        assert_eq!(ok.rows, vec![vec![Value::Integer(1), Value::Text("a".into())]]);
    }

    #[test]
    fn snapshot_uses_latest_completed_window() {
        let store = Datastore::initialized().unwrap().with_window(360);
        store.ingest(&[rec("a", 0, 1.0), rec("b", 0, 1.1)]).unwrap();
        store.ingest(&[rec("a", 360, 0.5), rec("b", 360, 0.6)]).unwrap();
        assert_eq!(store.snapshot_traffic(359), Err(StoreError::NoDataYet(359)));
        let at_boundary = store.snapshot_traffic(360).unwrap();
        assert_eq!(at_boundary.simulation_time, 0);
        assert_eq!(at_boundary.len(), 2);
        let mid = store.snapshot_traffic(540).unwrap();
        assert_eq!(mid.class_speed("a", AgentClass::Pedestrian), Some(1.0));
        assert_eq!(store.snapshot_traffic(720).unwrap().class_speed("a", AgentClass::Pedestrian), Some(0.5));
    }

    #[test]
    fn round_trip_and_checksum() {
        let store = Datastore::initialized().unwrap();
        let batch = vec![rec("a", 0, 1.25), rec("b", 0, 0.75)];
        store.ingest(&batch).unwrap();
        let before = store.checksum().unwrap();
        let back = store.execute_sql("SELECT * FROM online_demo ORDER BY simulation_time, edge_id").unwrap();
        assert_eq!(back.rows[0], vec![Value::Text("a".into()), Value::Integer(0), Value::Real(1.25), Value::Real(2.5), Value::Null]);
        assert_eq!(store.checksum().unwrap(), before);
        let id = store
            .insert_user_path(&UserPathRecord {
                path_id: None,
                start_edge: "a".into(),
                end_edge: "b".into(),
                time_cost_s: 10.0,
                execution_time_ms: 1.0,
                optimal_path_sequence: "(b,walk)".into(),
            })
            .unwrap();
        assert_eq!(id, 1);
        assert_ne!(store.checksum().unwrap(), before);
    }
}
