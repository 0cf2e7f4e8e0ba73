use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tokenize::{lex, Lexeme};

/// Clauses scored by the component-match metric. `Whole` holds every token
/// of a query that could not be split into clauses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Clause {
    Select,
    Where,
    GroupBy,
    OrderBy,
    Whole,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClauseMap {
    pub clauses: BTreeMap<Clause, Vec<String>>,
    /// Set when the query could not be split and fell back to `Whole`.
    pub unparsable: bool,
}

impl ClauseMap {
    pub fn get(&self, clause: Clause) -> Option<&[String]> {
        self.clauses.get(&clause).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Part {
    With,
    Select,
    From,
    Where,
    GroupBy,
    Having,
    OrderBy,
    Limit,
    SetOp,
}

impl Part {
    fn clause(self) -> Option<Clause> {
        match self {
            Part::Select => Some(Clause::Select),
            Part::Where => Some(Clause::Where),
            Part::GroupBy => Some(Clause::GroupBy),
            Part::OrderBy => Some(Clause::OrderBy),
            _ => None,
        }
    }
}

/// Top-level parts of a query, keyword lexemes excluded.
pub(crate) type Parts = Vec<(Part, Vec<Lexeme>)>;

/// Splits at top-level clause keywords, tracking parenthesis depth so that
/// subqueries stay inside the enclosing part. `None` for anything that does
/// not look like a single `SELECT`/`WITH` query.
pub(crate) fn split_parts(sql: &str) -> Option<Parts> {
    let mut lexemes = lex(sql);
    while lexemes.last() == Some(&Lexeme::Op(';')) {
        lexemes.pop();
    }
    let first = match lexemes.first()? {
        Lexeme::Word(w) if w == "select" => Part::Select,
        Lexeme::Word(w) if w == "with" => Part::With,
        _ => return None,
    };
    let mut parts: Parts = vec![(first, Vec::new())];
    let mut depth = 0i32;
    let mut i = 1;
    while i < lexemes.len() {
        let lx = &lexemes[i];
        match lx {
            Lexeme::Op('(') => depth += 1,
            Lexeme::Op(')') => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            Lexeme::Op(';') if depth == 0 => return None,
            _ => {}
        }
        if depth == 0 {
            let next_is_by = lexemes.get(i + 1).is_some_and(|n| n.is_word("by"));
            let part = match lx {
                Lexeme::Word(w) => match w.as_str() {
                    "select" => Some((Part::Select, 1)),
                    "from" => Some((Part::From, 1)),
                    "where" => Some((Part::Where, 1)),
                    "group" if next_is_by => Some((Part::GroupBy, 2)),
                    "having" => Some((Part::Having, 1)),
                    "order" if next_is_by => Some((Part::OrderBy, 2)),
                    "limit" => Some((Part::Limit, 1)),
                    "union" | "intersect" | "except" => Some((Part::SetOp, 1)),
                    _ => None,
                },
                _ => None,
            };
            if let Some((part, width)) = part {
                parts.push((part, Vec::new()));
                i += width;
                continue;
            }
        }
        parts.last_mut().expect("non-empty").1.push(lx.clone());
        i += 1;
    }
    if depth != 0 || !parts.iter().any(|(p, _)| *p == Part::Select) {
        return None;
    }
    Some(parts)
}

/// Token multisets of the top-level SELECT, WHERE, GROUP BY and ORDER BY
/// clauses. Unsplittable input falls back to a single `Whole` clause.
pub fn extract_clauses(sql: &str) -> ClauseMap {
    let Some(parts) = split_parts(sql) else {
        let mut clauses = BTreeMap::new();
        clauses.insert(Clause::Whole, super::tokenize_sql(sql));
        return ClauseMap { clauses, unparsable: true };
    };
    let mut clauses: BTreeMap<Clause, Vec<String>> = BTreeMap::new();
    for (part, lexemes) in parts {
        if let Some(clause) = part.clause() {
            clauses.entry(clause).or_default().extend(lexemes.iter().filter_map(Lexeme::text));
        }
    }
    ClauseMap { clauses, unparsable: false }
}

/// Splits lexemes at top-level commas.
pub(crate) fn split_commas(lexemes: &[Lexeme]) -> Vec<&[Lexeme]> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, lx) in lexemes.iter().enumerate() {
        match lx {
            Lexeme::Op('(') => depth += 1,
            Lexeme::Op(')') => depth -= 1,
            Lexeme::Comma if depth == 0 => {
                out.push(&lexemes[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < lexemes.len() {
        out.push(&lexemes[start..]);
    }
    out
}

/// Expression text with table qualifiers (`o.`) removed.
pub(crate) fn unqualified(lexemes: &[Lexeme]) -> String {
    let mut words = Vec::new();
    let mut i = 0;
    while i < lexemes.len() {
        if matches!(lexemes[i], Lexeme::Word(_)) && lexemes.get(i + 1) == Some(&Lexeme::Dot) {
            i += 2;
            continue;
        }
        if let Some(t) = lexemes[i].text() {
            words.push(t);
        }
        i += 1;
    }
    words.join(" ")
}

/// Projection items of a SELECT part: `DISTINCT` flag plus each item with
/// its alias and qualifiers removed.
pub(crate) fn projection(select: &[Lexeme]) -> (bool, Vec<String>) {
    let (distinct, rest) = match select.first() {
        Some(l) if l.is_word("distinct") => (true, &select[1..]),
        _ => (false, select),
    };
    let items = split_commas(rest)
        .into_iter()
        .map(|item| {
            let mut depth = 0;
            let mut cut = item.len();
            for (i, lx) in item.iter().enumerate() {
                match lx {
                    Lexeme::Op('(') => depth += 1,
                    Lexeme::Op(')') => depth -= 1,
                    l if depth == 0 && l.is_word("as") => {
                        cut = i;
                        break;
                    }
                    _ => {}
                }
            }
            // bare alias: `expr alias`
            if cut == item.len() && item.len() >= 2 {
                let last = &item[item.len() - 1];
                let prev = &item[item.len() - 2];
                if matches!(last, Lexeme::Word(_)) && matches!(prev, Lexeme::Word(_) | Lexeme::Op(')')) {
                    cut = item.len() - 1;
                }
            }
            unqualified(&item[..cut])
        })
        .collect();
    (distinct, items)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn select_only() {
        let m = extract_clauses("SELECT a FROM t");
        assert_eq!(m.clauses.len(), 1);
        assert_eq!(m.get(Clause::Select).unwrap(), toks(&["a"]).as_slice());
        assert!(!m.unparsable);
    }

    #[test]
    fn printed_system_query() {
        let m = extract_clauses(
            "SELECT edge_id, COUNT(*) AS station_count FROM stations GROUP BY edge_id ORDER BY station_count DESC LIMIT 1;",
        );
        let mut select = m.get(Clause::Select).unwrap().to_vec();
        select.sort();
        let mut expected = toks(&["edge_id", "count", "(", "*", ")", "as", "station_count"]);
        expected.sort();
        assert_eq!(select, expected);
        assert_eq!(m.get(Clause::GroupBy).unwrap(), toks(&["edge_id"]).as_slice());
        assert_eq!(m.get(Clause::OrderBy).unwrap(), toks(&["station_count", "desc"]).as_slice());
        assert!(m.get(Clause::Where).is_none());
    }

    #[test]
    fn subquery_stays_in_where() {
        let m = extract_clauses("SELECT AVG(bike_speed) FROM online_demo WHERE edge_id IN (SELECT edge_id FROM stations)");
        assert_eq!(
            m.get(Clause::Where).unwrap(),
            toks(&["edge_id", "in", "(", "select", "edge_id", "from", "stations", ")"]).as_slice()
        );
        assert_eq!(m.get(Clause::Select).unwrap(), toks(&["avg", "(", "bike_speed", ")"]).as_slice());
    }

    #[test]
    fn unparsable_falls_back() {
        for bad in ["DROP TABLE x", "SELECT (a FROM t", "SELECT 1; SELECT 2", ""] {
            let m = extract_clauses(bad);
            assert!(m.unparsable, "{bad}");
            assert_eq!(m.clauses.keys().collect::<Vec<_>>(), vec![&Clause::Whole]);
        }
    }

    #[test]
    fn projection_strips_aliases_and_qualifiers() {
        let parts = split_parts("SELECT DISTINCT o.edge_id, AVG(o.bike_speed) AS v, COUNT(*) n FROM t o").unwrap();
        let (distinct, items) = projection(&parts[0].1);
        assert!(distinct);
        assert_eq!(items, vec!["edge_id", "avg ( bike_speed )", "count ( * )"]);
    }
}
