//! SQL lexer shared by the overlap metrics, clause extraction and the error
//! classifier.

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Lexeme {
    /// Keyword, identifier or number, lowercased.
    Word(String),
    /// Quoted literal or quoted identifier, verbatim with its quotes.
    Quoted(String),
    /// `( ) ; = < > *` and any other operator character.
    Op(char),
    Comma,
    Dot,
}

impl Lexeme {
    pub fn is_word(&self, w: &str) -> bool {
        matches!(self, Lexeme::Word(x) if x == w)
    }

    pub fn text(&self) -> Option<String> {
        match self {
            Lexeme::Word(w) | Lexeme::Quoted(w) => Some(w.clone()),
            Lexeme::Op(c) => Some(c.to_string()),
            Lexeme::Comma | Lexeme::Dot => None,
        }
    }
}

pub(crate) fn lex(sql: &str) -> Vec<Lexeme> {
    let chars: Vec<char> = sql.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '\'' || c == '"' || c == '`' {
            let start = i;
            i += 1;
            while i < chars.len() {
                if chars[i] == c {
                    // doubled quote is an escaped quote
                    if chars.get(i + 1) == Some(&c) {
                        i += 2;
                        continue;
                    }
                    i += 1;
                    break;
                }
                i += 1;
            }
            out.push(Lexeme::Quoted(chars[start..i].iter().collect()));
        } else if c.is_alphanumeric() || c == '_' {
            let start = i;
            let numeric = c.is_ascii_digit();
            while i < chars.len() {
                let d = chars[i];
                let decimal_point =
                    numeric && d == '.' && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
                if d.is_alphanumeric() || d == '_' || decimal_point {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(Lexeme::Word(chars[start..i].iter().collect::<String>().to_lowercase()));
        } else {
            out.push(match c {
                ',' => Lexeme::Comma,
                '.' => Lexeme::Dot,
                other => Lexeme::Op(other),
            });
            i += 1;
        }
    }
    out
}

/// Lowercased tokens; string literals verbatim; `,` and `.` act as
/// separators only, operators such as `( ) ; = < > *` are tokens.
pub fn tokenize_sql(sql: &str) -> Vec<String> {
    lex(sql).iter().filter_map(Lexeme::text).collect()
}
