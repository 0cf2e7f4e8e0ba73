use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::clauses::{projection, split_commas, split_parts, unqualified, Part, Parts};
use super::execution::{has_top_level_order_by, same_results};
use super::tokenize::{lex, Lexeme};
use crate::store::Datastore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorType {
    /// Query structure difference: tables, LIMIT, aggregates, grouping or fields.
    #[serde(rename = "QSD")]
    Qsd,
    /// Query logic error: join or filter predicates.
    #[serde(rename = "QLE")]
    Qle,
    /// Result precision error: a missing or extra DISTINCT, ABS or rounding.
    #[serde(rename = "RPE")]
    Rpe,
    /// Result granularity error: too many or too few projected fields.
    #[serde(rename = "RGE")]
    Rge,
}

impl ErrorType {
    pub const ALL: [ErrorType; 4] = [ErrorType::Qsd, ErrorType::Qle, ErrorType::Rpe, ErrorType::Rge];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorType::Qsd => "QSD",
            ErrorType::Qle => "QLE",
            ErrorType::Rpe => "RPE",
            ErrorType::Rge => "RGE",
        }
    }
}

/// Adds `DISTINCT` after the leading `SELECT`, or removes it.
fn toggle_distinct(sql: &str) -> Option<String> {
    let trimmed = sql.trim_start();
    let head = trimmed.get(..6)?;
    if !head.eq_ignore_ascii_case("select") {
        return None;
    }
    let rest = &trimmed[6..];
    let after = rest.trim_start();
    let has_distinct = after.get(..8).is_some_and(|h| h.eq_ignore_ascii_case("distinct"))
        && !after[8..].starts_with(|c: char| c.is_alphanumeric() || c == '_');
    if has_distinct {
        Some(format!("{head} {}", after[8..].trim_start()))
    } else {
        Some(format!("{head} DISTINCT{rest}"))
    }
}

/// Replaces every `ABS(x)` by `(x)` and `ROUND(x[, n])` by `(x)`.
fn strip_precision_ops(sql: &str) -> String {
    let mut out = sql.to_string();
    for name in ["abs", "round"] {
        loop {
            let lower = out.to_ascii_lowercase();
            let bytes = lower.as_bytes();
            let Some(at) = (0..lower.len()).find(|&i| {
                lower[i..].starts_with(name)
                    && (i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_'))
                    && lower[i + name.len()..].trim_start().starts_with('(')
            }) else {
                break;
            };
            let open = at + name.len() + lower[at + name.len()..].find('(').expect("checked");
            let mut depth = 0;
            let mut close = None;
            let mut last_comma = None;
            for (i, b) in bytes.iter().enumerate().skip(open) {
                match b {
                    b'(' => depth += 1,
                    b')' => {
                        depth -= 1;
                        if depth == 0 {
                            close = Some(i);
                            break;
                        }
                    }
                    b',' if depth == 1 => last_comma = Some(i),
                    _ => {}
                }
            }
            let Some(close) = close else { break };
            let inner_end = if name == "round" { last_comma.unwrap_or(close) } else { close };
            out = format!("{}({}){}", &out[..at], &out[open + 1..inner_end], &out[close + 1..]);
        }
    }
    out
}

fn part(parts: &Parts, which: Part) -> Vec<&[Lexeme]> {
    parts.iter().filter(|(p, _)| *p == which).map(|(_, l)| l.as_slice()).collect()
}

fn joined(parts: &Parts, which: Part) -> String {
    part(parts, which).iter().map(|l| unqualified(l)).collect::<Vec<_>>().join(" | ")
}

/// Tables named after FROM/JOIN anywhere in the query.
fn tables(sql: &str) -> BTreeSet<String> {
    let lexemes = lex(sql);
    let mut out = BTreeSet::new();
    let mut in_from = false;
    for (i, lx) in lexemes.iter().enumerate() {
        let next_table = || match lexemes.get(i + 1) {
            Some(Lexeme::Word(w)) if w != "select" => Some(w.clone()),
            Some(Lexeme::Quoted(q)) => Some(q.trim_matches(|c| c == '"' || c == '`').to_lowercase()),
            _ => None,
        };
        match lx {
            Lexeme::Word(w) if w == "from" || w == "join" => {
                in_from = true;
                out.extend(next_table());
            }
            Lexeme::Comma if in_from => out.extend(next_table()),
            Lexeme::Word(w) if matches!(w.as_str(), "where" | "group" | "order" | "limit" | "having" | "on" | "select") => {
                in_from = false
            }
            _ => {}
        }
    }
    out
}

const AGGREGATES: [&str; 5] = ["count", "sum", "avg", "min", "max"];

fn aggregates(sql: &str) -> BTreeSet<String> {
    let lexemes = lex(sql);
    lexemes
        .windows(2)
        .filter_map(|w| match (&w[0], &w[1]) {
            (Lexeme::Word(f), Lexeme::Op('(')) if AGGREGATES.contains(&f.as_str()) => Some(f.clone()),
            _ => None,
        })
        .collect()
}

fn group_columns(parts: &Parts) -> BTreeSet<String> {
    part(parts, Part::GroupBy).iter().flat_map(|l| split_commas(l).into_iter().map(unqualified)).collect()
}

fn select_fields(parts: &Parts) -> (bool, Vec<String>) {
    part(parts, Part::Select).first().map(|l| projection(l)).unwrap_or_default()
}

fn is_rge(pred: &Parts, gold: &Parts) -> bool {
    let others = [Part::With, Part::From, Part::Where, Part::GroupBy, Part::Having, Part::OrderBy, Part::Limit, Part::SetOp];
    if others.iter().any(|p| joined(pred, *p) != joined(gold, *p)) {
        return false;
    }
    let (pd, pf) = select_fields(pred);
    let (gd, gf) = select_fields(gold);
    if pd != gd {
        return false;
    }
    let (ps, gs): (BTreeSet<_>, BTreeSet<_>) = (pf.iter().cloned().collect(), gf.iter().cloned().collect());
    if ps == gs {
        return false;
    }
    let star = |s: &BTreeSet<String>| s.contains("*");
    star(&ps) || star(&gs) || ps.is_subset(&gs) || gs.is_subset(&ps)
}

fn is_qsd(pred_sql: &str, gold_sql: &str, pred: Option<&Parts>, gold: Option<&Parts>) -> bool {
    if tables(pred_sql) != tables(gold_sql) || aggregates(pred_sql) != aggregates(gold_sql) {
        return true;
    }
    let (Some(pred), Some(gold)) = (pred, gold) else { return true };
    if joined(pred, Part::Limit) != joined(gold, Part::Limit) || group_columns(pred) != group_columns(gold) {
        return true;
    }
    let names = |p: &Parts| select_fields(p).1.into_iter().collect::<BTreeSet<_>>();
    names(pred) != names(gold)
}

/// Labels a failed prediction. Rules are tried in order and the first
/// that applies wins:
///
/// 1. RPE: adding/removing DISTINCT or stripping ABS/ROUND makes the two
///    queries return the same result.
/// 2. RGE: all clauses but the projection are identical and one projection
///    is a strict subset of the other (`*` covers everything).
/// 3. QSD: table set, LIMIT, aggregate functions, GROUP BY columns or
///    selected field names differ.
/// 4. QLE: anything else.
pub fn classify_error(pred_sql: &str, gold_sql: &str, store: &Datastore) -> ErrorType {
    let ordered = has_top_level_order_by(gold_sql);
    let pred_stripped = strip_precision_ops(pred_sql);
    let gold_stripped = strip_precision_ops(gold_sql);
    let mut pred_variants = vec![pred_sql.to_string(), pred_stripped.clone()];
    pred_variants.extend(toggle_distinct(pred_sql));
    pred_variants.extend(toggle_distinct(&pred_stripped));
    let gold_variants = [gold_sql.to_string(), gold_stripped];
    let rpe = pred_variants.iter().enumerate().any(|(i, p)| {
        gold_variants.iter().enumerate().any(|(j, g)| (i, j) != (0, 0) && same_results(store, p, g, ordered))
    });
    if rpe {
        return ErrorType::Rpe;
    }
    let (pred, gold) = (split_parts(pred_sql), split_parts(gold_sql));
    if let (Some(p), Some(g)) = (&pred, &gold) {
        if is_rge(p, g) {
            return ErrorType::Rge;
        }
    }
    if is_qsd(pred_sql, gold_sql, pred.as_ref(), gold.as_ref()) {
        return ErrorType::Qsd;
    }
    ErrorType::Qle
}
