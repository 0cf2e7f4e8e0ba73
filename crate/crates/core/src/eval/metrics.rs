use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::{extract_clauses, ClauseMap};

fn counts<T: Hash + Eq>(items: impl IntoIterator<Item = T>) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for it in items {
        *m.entry(it).or_insert(0) += 1;
    }
    m
}

/// Size of the multiset intersection.
fn overlap<T: Hash + Eq>(a: &HashMap<T, usize>, b: &HashMap<T, usize>) -> usize {
    a.iter().map(|(k, n)| (*n).min(b.get(k).copied().unwrap_or(0))).sum()
}

fn ngrams(tokens: &[String], n: usize) -> Vec<&[String]> {
    if n == 0 || tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).collect()
}

/// `2|A∩B| / (|A| + |B|)` over token multisets; two empty sides score 1.
pub fn multiset_f1(pred: &[String], gold: &[String]) -> f64 {
    if pred.is_empty() && gold.is_empty() {
        return 1.0;
    }
    let common = overlap(&counts(pred), &counts(gold));
    2.0 * common as f64 / (pred.len() + gold.len()) as f64
}

/// Mean per-clause multiset F1 over clauses present in either map; a clause
/// present on one side only scores 0.
pub fn component_f1_of(pred: &ClauseMap, gold: &ClauseMap) -> f64 {
    let mut keys: Vec<_> = pred.clauses.keys().chain(gold.clauses.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    if keys.is_empty() {
        return 1.0;
    }
    let total: f64 = keys
        .iter()
        .map(|k| match (pred.clauses.get(k), gold.clauses.get(k)) {
            (Some(p), Some(g)) => multiset_f1(p, g),
            _ => 0.0,
        })
        .sum();
    total / keys.len() as f64
}

pub fn component_match_f1(pred_sql: &str, gold_sql: &str) -> f64 {
    component_f1_of(&extract_clauses(pred_sql), &extract_clauses(gold_sql))
}

/// Cumulative BLEU-n with uniform weights, clipped precisions and brevity
/// penalty. A zero match count at order ≥ 2 is smoothed to `(m+1)/(c+1)`.
pub fn bleu_n(pred: &[String], gold: &[String], n: usize) -> f64 {
    if pred.is_empty() || n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let p = ngrams(pred, k);
        let matched = overlap(&counts(p.iter().copied()), &counts(ngrams(gold, k)));
        let total = p.len();
        let precision = if matched == 0 && k >= 2 {
            1.0 / (total as f64 + 1.0)
        } else if total == 0 {
            0.0
        } else {
            matched as f64 / total as f64
        };
        if precision == 0.0 {
            return 0.0;
        }
        log_sum += precision.ln();
    }
    let bp = if pred.len() < gold.len() { (1.0 - gold.len() as f64 / pred.len() as f64).exp() } else { 1.0 };
    (bp * (log_sum / n as f64).exp()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RougeVariant {
    One,
    Two,
    L,
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

fn f1_from(hits: usize, pred_len: usize, gold_len: usize) -> f64 {
    if hits == 0 || pred_len == 0 || gold_len == 0 {
        return 0.0;
    }
    let p = hits as f64 / pred_len as f64;
    let r = hits as f64 / gold_len as f64;
    2.0 * p * r / (p + r)
}

/// ROUGE-1/2 as n-gram multiset F1, ROUGE-L as LCS F1.
pub fn rouge(pred: &[String], gold: &[String], variant: RougeVariant) -> f64 {
    if pred == gold {
        return 1.0;
    }
    if pred.is_empty() || gold.is_empty() {
        return 0.0;
    }
    match variant {
        RougeVariant::One | RougeVariant::Two => {
            let n = if variant == RougeVariant::One { 1 } else { 2 };
            let (p, g) = (ngrams(pred, n), ngrams(gold, n));
            let hits = overlap(&counts(p.iter().copied()), &counts(g.iter().copied()));
            f1_from(hits, p.len(), g.len())
        }
        RougeVariant::L => f1_from(lcs_len(pred, gold), pred.len(), gold.len()),
    }
}
