//! Lexing, parsing, printing and decomposition of the Spider SQL subset:
//! single SELECT statements with joins, nested subqueries, aggregates,
//! GROUP BY / HAVING / ORDER BY / LIMIT and UNION / INTERSECT / EXCEPT.

pub mod ast;
pub mod bind;
mod decompose;
mod lexer;
mod parser;
mod print;

pub use ast::*;
pub use decompose::{
    canonical_string, conjuncts, decompose, decompose_with, fold_case, normalize, ComponentSet, DecomposeOptions,
};
pub use lexer::{is_reserved, tokenize, LexError, Span, SqlToken, TokenKind};
pub use parser::{parse, parse_detailed, parse_expr, IdentSite, ParseError, ParsedQuery, Scope, ScopeTable, SiteRole};
pub use print::{serialize, serialize_expr};
