use serde::{Deserialize, Serialize};

use super::clauses::{split_parts, Part};
use crate::store::{Datastore, ResultTable, StoreError, Value};

/// A value after canonicalization: numbers become integers in units of 1e-6.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CanonValue {
    Null,
    Micros(i128),
    Text(String),
}

impl From<&Value> for CanonValue {
    fn from(v: &Value) -> Self {
        match v {
            Value::Null => CanonValue::Null,
            Value::Integer(i) => CanonValue::Micros(i128::from(*i) * 1_000_000),
            Value::Real(r) if r.is_finite() => CanonValue::Micros((r * 1e6).round() as i128),
            Value::Real(r) => CanonValue::Text(r.to_string()),
            Value::Text(t) => CanonValue::Text(t.clone()),
        }
    }
}

/// Result rows without column names; sorted unless order matters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalResult {
    pub rows: Vec<Vec<CanonValue>>,
    pub ordered: bool,
}

pub fn normalize_result_set(result: &ResultTable, gold_has_order_by: bool) -> CanonicalResult {
    let mut rows: Vec<Vec<CanonValue>> =
        result.rows.iter().map(|r| r.iter().map(CanonValue::from).collect()).collect();
    if !gold_has_order_by {
        rows.sort();
    }
    CanonicalResult { rows, ordered: gold_has_order_by }
}

/// Whether the query has an ORDER BY outside any subquery.
pub fn has_top_level_order_by(sql: &str) -> bool {
    split_parts(sql).is_some_and(|parts| parts.iter().any(|(p, _)| *p == Part::OrderBy))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub matched: bool,
    /// Why the prediction failed to execute, if it did.
    pub prediction_error: Option<String>,
}

/// Runs both queries and compares their canonical results. Gold failures
/// are errors; prediction failures are a mismatch.
pub fn execution_accuracy(pred_sql: &str, gold_sql: &str, store: &Datastore) -> Result<ExecutionOutcome, StoreError> {
    let ordered = has_top_level_order_by(gold_sql);
    let gold = normalize_result_set(&store.execute_sql(gold_sql)?, ordered);
    Ok(match store.execute_sql(pred_sql) {
        Ok(pred) => ExecutionOutcome { matched: normalize_result_set(&pred, ordered) == gold, prediction_error: None },
        Err(e) => ExecutionOutcome { matched: false, prediction_error: Some(e.to_string()) },
    })
}

/// Execution equality where either side may fail (failure ⇒ not equal).
pub(crate) fn same_results(store: &Datastore, a: &str, b: &str, ordered: bool) -> bool {
    match (store.execute_sql(a), store.execute_sql(b)) {
        (Ok(x), Ok(y)) => normalize_result_set(&x, ordered) == normalize_result_set(&y, ordered),
        _ => false,
    }
}
