use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ErrorType, EvalCaseResult, UserClass};

/// Lower median: for an even count, the smaller of the two middle values.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(sorted[(sorted.len() - 1) / 2])
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub component_f1: f64,
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_3: f64,
    pub bleu_4: f64,
    pub rouge_1: f64,
    pub rouge_2: f64,
    pub rouge_l: f64,
}

impl MetricSummary {
    fn over(cases: &[&EvalCaseResult], reduce: impl Fn(&[f64]) -> f64) -> Self {
        let col = |f: fn(&EvalCaseResult) -> f64| reduce(&cases.iter().map(|c| f(c)).collect::<Vec<_>>());
        MetricSummary {
            component_f1: col(|c| c.component_f1),
            bleu_1: col(|c| c.bleu_1),
            bleu_2: col(|c| c.bleu_2),
            bleu_3: col(|c| c.bleu_3),
            bleu_4: col(|c| c.bleu_4),
            rouge_1: col(|c| c.rouge_1),
            rouge_2: col(|c| c.rouge_2),
            rouge_l: col(|c| c.rouge_l),
        }
    }
}

/// Aggregates for one (model, user class) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub model: String,
    pub user_class: UserClass,
    pub cases: usize,
    pub execution_accuracy: f64,
    pub means: MetricSummary,
    pub medians: MetricSummary,
    pub error_counts: BTreeMap<ErrorType, usize>,
    /// Share of each error type among this pair's errors; all zero when
    /// there are none.
    pub error_proportions: BTreeMap<ErrorType, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub groups: Vec<GroupSummary>,
    pub cases: Vec<EvalCaseResult>,
    /// Set when the run stopped early; `cases` then holds what finished.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl EvalReport {
    pub fn from_cases(cases: Vec<EvalCaseResult>) -> Self {
        let mut by_group: BTreeMap<(String, UserClass), Vec<&EvalCaseResult>> = BTreeMap::new();
        for c in &cases {
            by_group.entry((c.model.clone(), c.user_class)).or_default().push(c);
        }
        let groups = by_group
            .into_iter()
            .map(|((model, user_class), members)| {
                let mut error_counts: BTreeMap<ErrorType, usize> = ErrorType::ALL.iter().map(|e| (*e, 0)).collect();
                for e in members.iter().filter_map(|c| c.error_type) {
                    *error_counts.entry(e).or_default() += 1;
                }
                let errors: usize = error_counts.values().sum();
                let error_proportions = error_counts
                    .iter()
                    .map(|(e, n)| (*e, if errors == 0 { 0.0 } else { *n as f64 / errors as f64 }))
                    .collect();
                let matched = members.iter().filter(|c| c.execution_match).count();
                GroupSummary {
                    model,
                    user_class,
                    cases: members.len(),
                    execution_accuracy: matched as f64 / members.len() as f64,
                    means: MetricSummary::over(&members, mean),
                    medians: MetricSummary::over(&members, |v| lower_median(v).unwrap_or(0.0)),
                    error_counts,
                    error_proportions,
                }
            })
            .collect();
        EvalReport { groups, cases, aborted: None }
    }

    /// Combines reports of several runs, e.g. one per model.
    pub fn merge(reports: impl IntoIterator<Item = EvalReport>) -> Self {
        let mut cases = Vec::new();
        let mut aborted = Vec::new();
        for r in reports {
            cases.extend(r.cases);
            aborted.extend(r.aborted);
        }
        let mut merged = Self::from_cases(cases);
        merged.aborted = (!aborted.is_empty()).then(|| aborted.join("; "));
        merged
    }

    pub fn group(&self, model: &str, user_class: UserClass) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.model == model && g.user_class == user_class)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Mean scores per model and user class in the usual results-table
    /// column order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Model,Domain,Execution Accuracy,F1,BLEU-1,BLEU-2,BLEU-3,BLEU-4,ROUGE-1,ROUGE-2,ROUGE-L\n");
        for g in &self.groups {
            let m = &g.means;
            let _ = writeln!(
                out,
                "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
                g.model,
                g.user_class.label(),
                g.execution_accuracy,
                m.component_f1,
                m.bleu_1,
                m.bleu_2,
                m.bleu_3,
                m.bleu_4,
                m.rouge_1,
                m.rouge_2,
                m.rouge_l
            );
        }
        out
    }
}
