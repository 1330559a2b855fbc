use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Keyword,
    Identifier,
    QuotedIdentifier,
    StringLiteral,
    NumberLiteral,
    Operator,
    Punctuation,
}

/// Half-open range of character (not byte) offsets into the source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqlToken {
    pub kind: TokenKind,
    /// Source text exactly as written, quotes included.
    pub text: String,
    pub span: Span,
}

impl SqlToken {
    /// True for a keyword token matching `kw` (given in uppercase).
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text.eq_ignore_ascii_case(kw)
    }

    pub fn is_symbol(&self, sym: &str) -> bool {
        matches!(self.kind, TokenKind::Operator | TokenKind::Punctuation) && self.text == sym
    }

    /// Identifier value with quotes removed and doubled quotes collapsed.
    pub fn ident_value(&self) -> Option<String> {
        match self.kind {
            TokenKind::Identifier => Some(self.text.clone()),
            TokenKind::QuotedIdentifier => Some(unquote(&self.text, '"')),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("lexical error at offset {offset}: {message}")]
pub struct LexError {
    /// Character offset of the offending input.
    pub offset: usize,
    pub message: &'static str,
}

pub(crate) const KEYWORDS: &[&str] = &[
    "AND",
    "AS",
    "ASC",
    "BETWEEN",
    "BY",
    "CROSS",
    "DESC",
    "DISTINCT",
    "EXCEPT",
    "EXISTS",
    "FROM",
    "GROUP",
    "HAVING",
    "IN",
    "INNER",
    "INTERSECT",
    "IS",
    "JOIN",
    "LEFT",
    "LIKE",
    "LIMIT",
    "NOT",
    "NULL",
    "ON",
    "OR",
    "ORDER",
    "OUTER",
    "SELECT",
    "UNION",
    "WHERE",
];

/// Aggregate names are keywords only when a `(` follows.
pub(crate) const AGGREGATES: &[&str] = &["AVG", "COUNT", "MAX", "MIN", "SUM"];

pub fn is_reserved(word: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

pub(crate) fn unquote(text: &str, quote: char) -> String {
    let inner = &text[quote.len_utf8()..text.len() - quote.len_utf8()];
    let mut doubled = String::new();
    doubled.push(quote);
    doubled.push(quote);
    let mut single = String::new();
    single.push(quote);
    inner.replace(doubled.as_str(), single.as_str())
}

pub fn tokenize(sql: &str) -> Result<Vec<SqlToken>, LexError> {
    let chars: Vec<(usize, char)> = sql.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(sql.len(), |&(b, _)| b);
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < chars.len() {
        let c = chars[i].1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c == '\'' || c == '"' {
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(LexError { offset: start, message: "unterminated quoted text" }),
                    Some(&(_, q)) if q == c => {
                        if chars.get(i + 1).map(|p| p.1) == Some(c) {
                            i += 2;
                        } else {
                            i += 1;
                            break;
                        }
                    }
                    Some(_) => i += 1,
                }
            }
            if c == '\'' {
                TokenKind::StringLiteral
            } else {
                TokenKind::QuotedIdentifier
            }
        } else if c.is_ascii_digit() {
            while chars.get(i).is_some_and(|p| p.1.is_ascii_digit()) {
                i += 1;
            }
            if chars.get(i).map(|p| p.1) == Some('.') && chars.get(i + 1).is_some_and(|p| p.1.is_ascii_digit()) {
                i += 1;
                while chars.get(i).is_some_and(|p| p.1.is_ascii_digit()) {
                    i += 1;
                }
            }
            TokenKind::NumberLiteral
        } else if is_ident_start(c) {
            while chars.get(i).is_some_and(|p| is_ident_continue(p.1)) {
                i += 1;
            }
            let word = &sql[byte_at(start)..byte_at(i)];
            let next = chars[i..].iter().map(|p| p.1).find(|c| !c.is_whitespace());
            if is_reserved(word) || (next == Some('(') && AGGREGATES.iter().any(|a| a.eq_ignore_ascii_case(word))) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else {
            let next = chars.get(i + 1).map(|p| p.1);
            i += 1;
            match (c, next) {
                ('<', Some('=' | '>')) | ('>', Some('=')) | ('!', Some('=')) => {
                    i += 1;
                    TokenKind::Operator
                }
                ('=' | '<' | '>' | '+' | '-' | '/' | '%' | '(' | ')', _) => TokenKind::Operator,
                (',' | '.' | ';' | '*', _) => TokenKind::Punctuation,
                _ => return Err(LexError { offset: start, message: "unexpected character" }),
            }
        };
        tokens.push(SqlToken {
            kind,
            text: String::from(&sql[byte_at(start)..byte_at(i)]),
            span: Span { start, end: i },
        });
    }
    Ok(tokens)
}
