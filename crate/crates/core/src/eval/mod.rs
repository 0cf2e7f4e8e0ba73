//! Text-to-SQL evaluation: execution accuracy, component-match F1, BLEU,
//! ROUGE, error classification and report aggregation.

mod classify;
mod clauses;
mod execution;
mod metrics;
mod report;
mod tokenize;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rag::{LlmBackend, RagError, RagPipeline};
use crate::store::{Datastore, StoreError};

pub use classify::{classify_error, ErrorType};
pub use clauses::{extract_clauses, Clause, ClauseMap};
pub use execution::{execution_accuracy, has_top_level_order_by, normalize_result_set, CanonValue, CanonicalResult, ExecutionOutcome};
pub use metrics::{bleu_n, component_f1_of, component_match_f1, multiset_f1, rouge, RougeVariant};
pub use report::{lower_median, EvalReport, GroupSummary, MetricSummary};
pub use tokenize::tokenize_sql;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("case `{case_id}`: gold SQL failed: {source}")]
    GoldFailed { case_id: String, source: StoreError },
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserClass {
    SystemOperator,
    User,
}

impl UserClass {
    pub fn as_str(self) -> &'static str {
        match self {
            UserClass::SystemOperator => "system_operator",
            UserClass::User => "user",
        }
    }

    /// Display name used in the tabular report.
    pub fn label(self) -> &'static str {
        match self {
            UserClass::SystemOperator => "System Operator",
            UserClass::User => "User",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaCase {
    pub case_id: String,
    pub user_class: UserClass,
    pub question: String,
    pub gold_sql: String,
    /// Target database id.
    pub db: String,
}

pub fn parse_corpus(text: &str) -> Result<Vec<QaCase>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| EvalError::Corpus { line: i + 1, message: e.to_string() }))
        .collect()
}

pub fn load_corpus(path: &Path) -> Result<Vec<QaCase>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    parse_corpus(&text)
}

/// Checks that every gold query executes.
pub fn validate_corpus(cases: &[QaCase], store: &Datastore) -> Result<(), EvalError> {
    for case in cases {
        store
            .execute_sql(&case.gold_sql)
            .map_err(|source| EvalError::GoldFailed { case_id: case.case_id.clone(), source })?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCaseResult {
    pub case_id: String,
    pub model: String,
    pub user_class: UserClass,
    pub question: String,
    pub gold_sql: String,
    /// Empty when generation failed.
    pub predicted_sql: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction_error: Option<String>,
    pub execution_match: bool,
    pub component_f1: f64,
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_3: f64,
    pub bleu_4: f64,
    pub rouge_1: f64,
    pub rouge_2: f64,
    pub rouge_l: f64,
    /// `None` exactly when the execution matched.
    pub error_type: Option<ErrorType>,
}

/// Scores one prediction against its gold query.
pub fn score_case(case: &QaCase, model: &str, predicted: &str, store: &Datastore) -> Result<EvalCaseResult, EvalError> {
    let outcome = execution_accuracy(predicted, &case.gold_sql, store)
        .map_err(|source| EvalError::GoldFailed { case_id: case.case_id.clone(), source })?;
    let (p, g) = (tokenize_sql(predicted), tokenize_sql(&case.gold_sql));
    Ok(EvalCaseResult {
        case_id: case.case_id.clone(),
        model: model.to_string(),
        user_class: case.user_class,
        question: case.question.clone(),
        gold_sql: case.gold_sql.clone(),
        predicted_sql: predicted.to_string(),
        generation_error: None,
        prediction_error: outcome.prediction_error,
        execution_match: outcome.matched,
        component_f1: component_match_f1(predicted, &case.gold_sql),
        bleu_1: bleu_n(&p, &g, 1),
        bleu_2: bleu_n(&p, &g, 2),
        bleu_3: bleu_n(&p, &g, 3),
        bleu_4: bleu_n(&p, &g, 4),
        rouge_1: rouge(&p, &g, RougeVariant::One),
        rouge_2: rouge(&p, &g, RougeVariant::Two),
        rouge_l: rouge(&p, &g, RougeVariant::L),
        error_type: (!outcome.matched).then(|| classify_error(predicted, &case.gold_sql, store)),
    })
}

/// Generates SQL for every case through the pipeline and scores it.
///
/// A failed generation (cassette miss, non-SQL output) is scored as an
/// empty prediction. An unreachable backend stops the run; the cases done so
/// far are kept and the report is marked as aborted.
pub fn run_evaluation(
    cases: &[QaCase],
    pipeline: &RagPipeline,
    backend: &dyn LlmBackend,
    store: &Datastore,
) -> Result<EvalReport, EvalError> {
    let mut results = Vec::with_capacity(cases.len());
    let mut aborted = None;
    for case in cases {
        let (predicted, generation_error) = match pipeline.answer(&case.question, backend) {
            Ok(answer) => (answer.sql, None),
            Err(RagError::BackendUnavailable(msg)) => {
                aborted = Some(format!("backend unavailable at case {}: {msg}", case.case_id));
                break;
            }
            Err(e) => (String::new(), Some(e.to_string())),
        };
        let mut result = score_case(case, backend.id(), &predicted, store)?;
        result.generation_error = generation_error;
        results.push(result);
    }
    let mut report = EvalReport::from_cases(results);
    report.aborted = aborted;
    Ok(report)
}
