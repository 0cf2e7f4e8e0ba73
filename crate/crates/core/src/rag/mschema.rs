use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::RagError;
use crate::store::{Datastore, ForeignKey, Value};

pub const DEFAULT_DB_ID: &str = "ehub";
const EXAMPLE_ROWS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSchemaColumn {
    pub name: String,
    #[serde(rename = "type")]
    pub column_type: String,
    pub primary_key: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub examples: Vec<String>,
}

/// JSON body of one table document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSchemaBody {
    pub db_id: String,
    pub table: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub columns: Vec<MSchemaColumn>,
    #[serde(default)]
    pub foreign_keys: Vec<ForeignKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSchemaDoc {
    pub doc_id: String,
    pub table: String,
    pub body: MSchemaBody,
    /// Rendered form, the text that gets embedded and put in prompts.
    pub text: String,
}

impl MSchemaDoc {
    pub fn from_body(body: MSchemaBody) -> Self {
        MSchemaDoc {
            doc_id: format!("{}.{}", body.db_id, body.table),
            table: body.table.clone(),
            text: render_mschema(&body),
            body,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("body serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, RagError> {
        let body: MSchemaBody = serde_json::from_str(json).map_err(|e| RagError::Io(e.to_string()))?;
        Ok(Self::from_body(body))
    }
}

fn table_description(table: &str) -> Option<&'static str> {
    Some(match table {
        "online_demo" => "Traffic time series: mean speed of pedestrians, bikes and cars on each road segment (edge) per simulation time window",
        "stations" => "eHub docking stations located on road segments, one row per docked shared vehicle with its type and battery level",
        "user_paths" => "Routes planned for users: start edge, destination end edge, travel time cost, solver execution time and the optimal path sequence",
        _ => return None,
    })
}

fn column_description(table: &str, column: &str) -> Option<&'static str> {
    Some(match (table, column) {
        ("online_demo", "edge_id") => "road segment id",
        ("online_demo", "simulation_time") => "window start, seconds since midnight",
        ("online_demo", "pedestrian_speed") => "mean pedestrian speed, m/s",
        ("online_demo", "bike_speed") => "mean bicycle speed, m/s",
        ("online_demo", "car_speed") => "mean car speed, m/s",
        ("stations", "station_id") => "station id",
        ("stations", "edge_id") => "road segment where the station is located",
        ("stations", "vehicle_id") => "docked vehicle id",
        ("stations", "vehicle_type") => "ebike, escooter or ecar",
        ("stations", "battery_level") => "battery charge, percent",
        ("user_paths", "path_id") => "path id",
        ("user_paths", "start_edge") => "origin road segment",
        ("user_paths", "end_edge") => "destination road segment",
        ("user_paths", "time_cost_s") => "travel time, seconds",
        ("user_paths", "execution_time_ms") => "route computation time, milliseconds",
        ("user_paths", "optimal_path_sequence") => "traversed segments as (edge,mode),(edge,mode),...",
        _ => return None,
    })
}

fn show(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::Integer(i) => Some(i.to_string()),
        Value::Real(r) => Some(r.to_string()),
        Value::Text(t) => Some(t.clone()),
    }
}

/// Text form in the M-Schema layout.
pub fn render_mschema(body: &MSchemaBody) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "【DB_ID】 {}", body.db_id);
    let _ = writeln!(out, "【Schema】");
    let _ = write!(out, "# Table: {}", body.table);
    if let Some(desc) = &body.description {
        let _ = write!(out, ", {desc}");
    }
    out.push_str("\n[\n");
    let lines: Vec<String> = body
        .columns
        .iter()
        .map(|c| {
            let mut parts = vec![format!("{}:{}", c.name, c.column_type)];
            if c.primary_key {
                parts.push("Primary Key".into());
            }
            if let Some(d) = &c.description {
                parts.push(d.clone());
            }
            if !c.examples.is_empty() {
                parts.push(format!("Examples: [{}]", c.examples.join(", ")));
            }
            format!("({})", parts.join(", "))
        })
        .collect();
    out.push_str(&lines.join(",\n"));
    out.push_str("\n]\n");
    if !body.foreign_keys.is_empty() {
        out.push_str("【Foreign keys】\n");
        for fk in &body.foreign_keys {
            let _ = writeln!(out, "{}.{}={}.{}", body.table, fk.column, fk.ref_table, fk.ref_column);
        }
    }
    out
}

/// One document per table, with example values from the first rows in
/// primary-key order.
pub fn generate_mschema(store: &Datastore, db_id: &str) -> Result<Vec<MSchemaDoc>, RagError> {
    store
        .schemas()?
        .into_iter()
        .map(|schema| {
            let order = if schema.primary_key.is_empty() { "rowid".to_string() } else { schema.primary_key.join(", ") };
            let sample = store.execute_sql(&format!("SELECT * FROM {} ORDER BY {order} LIMIT {EXAMPLE_ROWS}", schema.name))?;
            let columns = schema
                .columns
                .iter()
                .enumerate()
                .map(|(i, c)| MSchemaColumn {
                    name: c.name.clone(),
                    column_type: c.logical_type.as_sql().to_string(),
                    primary_key: schema.primary_key.contains(&c.name),
                    description: column_description(&schema.name, &c.name).map(str::to_string),
                    examples: sample.rows.iter().filter_map(|r| show(&r[i])).collect(),
                })
                .collect();
            Ok(MSchemaDoc::from_body(MSchemaBody {
                db_id: db_id.to_string(),
                description: table_description(&schema.name).map(str::to_string),
                table: schema.name,
                columns,
                foreign_keys: schema.foreign_keys,
            }))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stations::StationRow;

    #[test]
    fn one_doc_per_table() {
        let store = Datastore::initialized().unwrap();
        let docs = generate_mschema(&store, "ehub").unwrap();
        let tables: Vec<&str> = docs.iter().map(|d| d.table.as_str()).collect();
        assert_eq!(tables, vec!["online_demo", "stations", "user_paths"]);
        let stations = &docs[1];
        assert_eq!(stations.body.columns.len(), 5);
        assert!(stations.body.columns.iter().all(|c| c.examples.is_empty()));
        assert!(stations.text.contains("(station_id:TEXT, Primary Key, station id)"));
    }

    #[test]
    fn examples_follow_primary_key_order() {
        let store = Datastore::initialized().unwrap();
        let row = |s: &str, v: &str| StationRow {
            station_id: s.into(),
            edge_id: "e1".into(),
            vehicle_id: v.into(),
            vehicle_type: "ebike".into(),
            battery_level: 80.5,
        };
        store.replace_stations(&[row("S2", "a"), row("S1", "b"), row("S1", "a"), row("S0", "z")]).unwrap();
        let docs = generate_mschema(&store, "ehub").unwrap();
        let vehicle = &docs[1].body.columns[2];
        assert_eq!(vehicle.examples, vec!["z", "a", "b"]);
        assert!(docs[1].text.contains("Examples: [80.5, 80.5, 80.5]"));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let store = Datastore::initialized().unwrap();
        for doc in generate_mschema(&store, "ehub").unwrap() {
            let back = MSchemaDoc::from_json(&doc.to_json()).unwrap();
            assert_eq!(back, doc);
            assert_eq!(back.text.as_bytes(), doc.text.as_bytes());
        }
    }
}
