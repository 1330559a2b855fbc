//! Recursive-descent parser for the Spider subset.
//!
//! Besides the tree, the parser records every identifier occurrence
//! ("site") with its syntactic role and the SELECT scope it belongs to, so
//! repair and coverage can work on token positions without re-deriving
//! context from surface text.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::lexer::{tokenize, unquote, LexError, SqlToken, TokenKind, AGGREGATES};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseError {
    Lex(LexError),
    Syntax { token_index: usize, expected: Vec<&'static str>, found: Option<String> },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Lex(e) => e.fmt(f),
            ParseError::Syntax { token_index, expected, found } => {
                write!(f, "syntax error at token {token_index}: expected ")?;
                for (i, e) in expected.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    f.write_str(e)?;
                }
                match found {
                    Some(t) => write!(f, ", found `{t}`"),
                    None => f.write_str(", found end of input"),
                }
            }
        }
    }
}

impl core::error::Error for ParseError {}

impl core::convert::From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError::Lex(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteRole {
    Table,
    TableAlias,
    SelectAlias,
    /// The `t` in `t.col` or `t.*`.
    Qualifier,
    /// A column name; `qualifier` is the token index of its qualifier.
    Column {
        qualifier: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentSite {
    pub token: usize,
    pub role: SiteRole,
    pub scope: usize,
    /// Unquoted identifier value.
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeTable {
    /// `None` for a derived table.
    pub name: Option<String>,
    pub name_token: Option<usize>,
    pub alias: Option<String>,
}

/// One SELECT's name environment.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scope {
    pub parent: Option<usize>,
    pub tables: Vec<ScopeTable>,
    pub select_aliases: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedQuery {
    pub query: Query,
    pub tokens: Vec<SqlToken>,
    pub sites: Vec<IdentSite>,
    pub scopes: Vec<Scope>,
}

impl ParsedQuery {
    /// Scopes from `scope` outwards.
    pub fn scope_chain(&self, scope: usize) -> impl Iterator<Item = &Scope> {
        let mut next = Some(scope);
        core::iter::from_fn(move || {
            let s = &self.scopes[next?];
            next = s.parent;
            Some(s)
        })
    }
}

pub fn parse(sql: &str) -> Result<Query, ParseError> {
    parse_detailed(sql).map(|p| p.query)
}

pub fn parse_detailed(sql: &str) -> Result<ParsedQuery, ParseError> {
    let tokens = tokenize(sql)?;
    let mut parser = Parser { tokens: &tokens, pos: 0, sites: Vec::new(), scopes: Vec::new(), scope: None };
    let query = parser.query()?;
    parser.eat_symbol(";");
    if parser.pos < tokens.len() {
        return Err(parser.error(&["end of input"]));
    }
    let Parser { sites, scopes, .. } = parser;
    Ok(ParsedQuery { query, tokens, sites, scopes })
}

struct Parser<'t> {
    tokens: &'t [SqlToken],
    pos: usize,
    sites: Vec<IdentSite>,
    scopes: Vec<Scope>,
    scope: Option<usize>,
}

type PResult<T> = Result<T, ParseError>;

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t SqlToken> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t SqlToken> {
        self.tokens.get(self.pos + n)
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax {
            token_index: self.pos,
            expected: expected.to_vec(),
            found: self.peek().map(|t| t.text.clone()),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &'static str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn at_symbol(&self, sym: &str) -> bool {
        self.peek().is_some_and(|t| t.is_symbol(sym))
    }

    fn eat_symbol(&mut self, sym: &str) -> bool {
        if self.at_symbol(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, sym: &'static str) -> PResult<()> {
        if self.eat_symbol(sym) {
            Ok(())
        } else {
            Err(self.error(&[sym]))
        }
    }

    fn at_ident(&self) -> bool {
        self.peek().is_some_and(|t| matches!(t.kind, TokenKind::Identifier | TokenKind::QuotedIdentifier))
    }

    fn ident(&mut self) -> PResult<(Ident, usize)> {
        let Some(tok) = self.peek() else { return Err(self.error(&["identifier"])) };
        let ident = match tok.kind {
            TokenKind::Identifier => Ident::new(tok.text.clone()),
            TokenKind::QuotedIdentifier => Ident::quoted(unquote(&tok.text, '"')),
            _ => return Err(self.error(&["identifier"])),
        };
        let index = self.pos;
        self.pos += 1;
        Ok((ident, index))
    }

    fn record(&mut self, token: usize, role: SiteRole, ident: &Ident) {
        let scope = self.scope.expect("identifier outside of a SELECT");
        self.sites.push(IdentSite { token, role, scope, value: ident.value.clone() });
    }

    fn current_scope(&mut self) -> &mut Scope {
        let scope = self.scope.expect("no open scope");
        &mut self.scopes[scope]
    }

    fn query(&mut self) -> PResult<Query> {
        let body = self.select()?;
        let op = if self.eat_keyword("UNION") {
            Some(SetOp::Union)
        } else if self.eat_keyword("INTERSECT") {
            Some(SetOp::Intersect)
        } else if self.eat_keyword("EXCEPT") {
            Some(SetOp::Except)
        } else {
            None
        };
        let set_op = match op {
            Some(op) => Some(SetOperation { op, right: Box::new(self.query()?) }),
            None => None,
        };
        Ok(Query { body, set_op })
    }

    fn select(&mut self) -> PResult<Select> {
        let id = self.scopes.len();
        self.scopes.push(Scope { parent: self.scope, ..Scope::default() });
        let outer = self.scope.replace(id);
        let result = self.select_body();
        self.scope = outer;
        result
    }

    fn select_body(&mut self) -> PResult<Select> {
        self.expect_keyword("SELECT")?;
        let distinct = self.eat_keyword("DISTINCT");
        let mut items = vec![self.select_item()?];
        while self.eat_symbol(",") {
            items.push(self.select_item()?);
        }
        self.expect_keyword("FROM")?;
        let from = self.from()?;
        let selection = if self.eat_keyword("WHERE") { Some(self.expr()?) } else { None };
        let mut group_by = Vec::new();
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            group_by.push(self.expr()?);
            while self.eat_symbol(",") {
                group_by.push(self.expr()?);
            }
        }
        let having = if self.eat_keyword("HAVING") { Some(self.expr()?) } else { None };
        let mut order_by = Vec::new();
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            loop {
                let expr = self.expr()?;
                let desc = if self.eat_keyword("DESC") {
                    true
                } else {
                    self.eat_keyword("ASC");
                    false
                };
                order_by.push(OrderItem { expr, desc });
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        let limit = if self.eat_keyword("LIMIT") {
            match self.peek() {
                Some(t) if t.kind == TokenKind::NumberLiteral => match t.text.parse::<u64>() {
                    Ok(n) => {
                        self.pos += 1;
                        Some(n)
                    }
                    Err(_) => return Err(self.error(&["integer"])),
                },
                _ => return Err(self.error(&["integer"])),
            }
        } else {
            None
        };
        Ok(Select { distinct, items, from, selection, group_by, having, order_by, limit })
    }

    fn select_item(&mut self) -> PResult<SelectItem> {
        let expr = self.expr()?;
        let alias = if self.eat_keyword("AS") || self.at_ident() {
            let (alias, idx) = self.ident()?;
            self.record(idx, SiteRole::SelectAlias, &alias);
            let value = alias.value.clone();
            self.current_scope().select_aliases.push(value);
            Some(alias)
        } else {
            None
        };
        Ok(SelectItem { expr, alias })
    }

    fn from(&mut self) -> PResult<From> {
        let base = self.table_factor()?;
        let mut joins = Vec::new();
        loop {
            let kind = if self.eat_symbol(",") {
                JoinKind::Comma
            } else if self.eat_keyword("CROSS") {
                self.expect_keyword("JOIN")?;
                JoinKind::Comma
            } else if self.eat_keyword("JOIN") {
                JoinKind::Inner
            } else if self.eat_keyword("INNER") {
                self.expect_keyword("JOIN")?;
                JoinKind::Inner
            } else if self.eat_keyword("LEFT") {
                self.eat_keyword("OUTER");
                self.expect_keyword("JOIN")?;
                JoinKind::Left
            } else {
                break;
            };
            let factor = self.table_factor()?;
            let on = if kind != JoinKind::Comma && self.eat_keyword("ON") { Some(self.expr()?) } else { None };
            joins.push(Join { kind, factor, on });
        }
        Ok(From { base, joins })
    }

    fn table_factor(&mut self) -> PResult<TableFactor> {
        if self.eat_symbol("(") {
            let query = self.query()?;
            self.expect_symbol(")")?;
            let alias = self.table_alias()?;
            self.current_scope().tables.push(ScopeTable {
                name: None,
                name_token: None,
                alias: alias.as_ref().map(|a| a.value.clone()),
            });
            return Ok(TableFactor::Derived { query: Box::new(query), alias });
        }
        let (name, idx) = self.ident().map_err(|_| self.error(&["table name", "("]))?;
        self.record(idx, SiteRole::Table, &name);
        let alias = self.table_alias()?;
        self.current_scope().tables.push(ScopeTable {
            name: Some(name.value.clone()),
            name_token: Some(idx),
            alias: alias.as_ref().map(|a| a.value.clone()),
        });
        Ok(TableFactor::Named { name, alias })
    }

    fn table_alias(&mut self) -> PResult<Option<Ident>> {
        if self.eat_keyword("AS") || self.at_ident() {
            let (alias, idx) = self.ident()?;
            self.record(idx, SiteRole::TableAlias, &alias);
            Ok(Some(alias))
        } else {
            Ok(None)
        }
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let mut left = self.and_expr()?;
        while self.eat_keyword("OR") {
            left = Expr::binary(BinOp::Or, left, self.and_expr()?);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut left = self.not_expr()?;
        while self.eat_keyword("AND") {
            left = Expr::binary(BinOp::And, left, self.not_expr()?);
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_keyword("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.predicate()
    }

    fn comparison_op(&self) -> Option<BinOp> {
        let t = self.peek()?;
        if t.kind != TokenKind::Operator {
            return None;
        }
        Some(match t.text.as_str() {
            "=" => BinOp::Eq,
            "!=" | "<>" => BinOp::NotEq,
            "<" => BinOp::Lt,
            "<=" => BinOp::LtEq,
            ">" => BinOp::Gt,
            ">=" => BinOp::GtEq,
            _ => return None,
        })
    }

    fn predicate(&mut self) -> PResult<Expr> {
        let left = self.additive()?;
        if let Some(op) = self.comparison_op() {
            self.pos += 1;
            let right = self.additive()?;
            return Ok(Expr::binary(op, left, right));
        }
        if self.eat_keyword("IS") {
            let negated = self.eat_keyword("NOT");
            self.expect_keyword("NULL")?;
            return Ok(Expr::IsNull { negated, expr: Box::new(left) });
        }
        let negated = if self.at_keyword("NOT")
            && self.peek_at(1).is_some_and(|t| t.is_keyword("LIKE") || t.is_keyword("IN") || t.is_keyword("BETWEEN"))
        {
            self.pos += 1;
            true
        } else {
            false
        };
        let expr = Box::new(left);
        if self.eat_keyword("LIKE") {
            return Ok(Expr::Like { negated, expr, pattern: Box::new(self.additive()?) });
        }
        if self.eat_keyword("BETWEEN") {
            let low = Box::new(self.additive()?);
            self.expect_keyword("AND")?;
            let high = Box::new(self.additive()?);
            return Ok(Expr::Between { negated, expr, low, high });
        }
        if self.eat_keyword("IN") {
            self.expect_symbol("(")?;
            if self.at_keyword("SELECT") {
                let query = Box::new(self.query()?);
                self.expect_symbol(")")?;
                return Ok(Expr::InSubquery { negated, expr, query });
            }
            let mut list = vec![self.expr()?];
            while self.eat_symbol(",") {
                list.push(self.expr()?);
            }
            self.expect_symbol(")")?;
            return Ok(Expr::InList { negated, expr, list });
        }
        Ok(*expr)
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut left = self.multiplicative()?;
        loop {
            let op = if self.at_symbol("+") {
                BinOp::Plus
            } else if self.at_symbol("-") {
                BinOp::Minus
            } else {
                return Ok(left);
            };
            self.pos += 1;
            left = Expr::binary(op, left, self.multiplicative()?);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut left = self.unary()?;
        loop {
            let op = if self.at_symbol("*") {
                BinOp::Mul
            } else if self.at_symbol("/") {
                BinOp::Div
            } else if self.at_symbol("%") {
                BinOp::Mod
            } else {
                return Ok(left);
            };
            self.pos += 1;
            left = Expr::binary(op, left, self.unary()?);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_symbol("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        const EXPECTED: &[&str] = &["expression"];
        let Some(tok) = self.peek() else { return Err(self.error(EXPECTED)) };
        match tok.kind {
            TokenKind::NumberLiteral => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::Number(tok.text.clone())))
            }
            TokenKind::StringLiteral => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::String(unquote(&tok.text, '\''))))
            }
            TokenKind::Keyword if tok.is_keyword("NULL") => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::Null))
            }
            TokenKind::Keyword if tok.is_keyword("EXISTS") => {
                self.pos += 1;
                self.expect_symbol("(")?;
                let query = self.query()?;
                self.expect_symbol(")")?;
                Ok(Expr::Exists(Box::new(query)))
            }
            TokenKind::Keyword if AGGREGATES.iter().any(|a| tok.is_keyword(a)) => {
                let func = AggFunc::from_name(&tok.text).expect("aggregate keyword");
                self.pos += 1;
                self.expect_symbol("(")?;
                let distinct = self.eat_keyword("DISTINCT");
                let arg_pos = self.pos;
                let arg = self.expr()?;
                if matches!(arg, Expr::Aggregate { .. }) {
                    self.pos = arg_pos;
                    return Err(self.error(&["non-aggregate argument"]));
                }
                self.expect_symbol(")")?;
                Ok(Expr::Aggregate { func, distinct, arg: Box::new(arg) })
            }
            TokenKind::Operator if tok.text == "(" => {
                self.pos += 1;
                if self.at_keyword("SELECT") {
                    let query = self.query()?;
                    self.expect_symbol(")")?;
                    return Ok(Expr::Subquery(Box::new(query)));
                }
                let inner = self.expr()?;
                self.expect_symbol(")")?;
                Ok(inner)
            }
            TokenKind::Punctuation if tok.text == "*" => {
                self.pos += 1;
                Ok(Expr::Wildcard { table: None })
            }
            TokenKind::Identifier | TokenKind::QuotedIdentifier => {
                let (first, first_idx) = self.ident()?;
                if !self.eat_symbol(".") {
                    self.record(first_idx, SiteRole::Column { qualifier: None }, &first);
                    return Ok(Expr::Column { table: None, column: first });
                }
                self.record(first_idx, SiteRole::Qualifier, &first);
                if self.eat_symbol("*") {
                    return Ok(Expr::Wildcard { table: Some(first) });
                }
                let (column, idx) = self.ident().map_err(|_| self.error(&["column name", "*"]))?;
                self.record(idx, SiteRole::Column { qualifier: Some(first_idx) }, &column);
                Ok(Expr::Column { table: Some(first), column })
            }
            _ => Err(self.error(EXPECTED)),
        }
    }
}

/// Parses a standalone expression (no column scoping information kept).
pub fn parse_expr(sql: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(sql)?;
    let mut parser =
        Parser { tokens: &tokens, pos: 0, sites: Vec::new(), scopes: vec![Scope::default()], scope: Some(0) };
    let expr = parser.expr()?;
    if parser.pos < tokens.len() {
        return Err(parser.error(&["end of input"]));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn where_comparison() {
        let q = parse("SELECT name FROM meters WHERE id = 3").unwrap();
        assert_eq!(
            q.body.selection,
            Some(Expr::binary(BinOp::Eq, Expr::column("id"), Expr::Literal(Literal::Number("3".into()))))
        );
        assert!(q.set_op.is_none());
    }

    #[test]
    fn group_by_key() {
        let q = parse("SELECT city FROM stores GROUP BY city").unwrap();
        assert_eq!(q.body.group_by, vec![Expr::column("city")]);
    }

    #[test]
    fn set_operation_has_two_arms() {
        let q = parse("SELECT a FROM t UNION SELECT b FROM u").unwrap();
        let op = q.set_op.as_ref().unwrap();
        assert_eq!(op.op, SetOp::Union);
        assert_eq!(q.body.items[0].expr, Expr::column("a"));
        assert_eq!(op.right.body.items[0].expr, Expr::column("b"));
        assert!(op.right.set_op.is_none());
    }

    #[test]
    fn joins_aliases_and_subqueries() {
        let sql = "SELECT T1.name, count(DISTINCT T2.id) FROM singer AS T1 JOIN concert T2 ON T1.id = T2.singer_id \
                   WHERE T1.age NOT BETWEEN 20 AND 30 AND T1.id NOT IN (SELECT singer_id FROM award) \
                   GROUP BY T1.name HAVING count(*) >= 2 ORDER BY T1.name DESC LIMIT 3";
        let p = parse_detailed(sql).unwrap();
        assert_eq!(p.query.body.from.joins.len(), 1);
        assert_eq!(p.query.body.limit, Some(3));
        assert!(p.query.body.order_by[0].desc);
        assert_eq!(p.scopes.len(), 2);
        assert_eq!(p.scopes[1].parent, Some(0));
        assert_eq!(p.scopes[0].tables[1].alias.as_deref(), Some("T2"));
        let tables: Vec<&str> =
            p.sites.iter().filter(|s| s.role == SiteRole::Table).map(|s| s.value.as_str()).collect();
        assert_eq!(tables, ["singer", "concert", "award"]);
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let err = parse("SELECT a FROM t garbage here").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax { token_index: 5, expected: vec!["end of input"], found: Some("here".into()) }
        );
        assert!(parse("SELECT a FROM t;").is_ok());
    }

    #[test]
    fn syntax_errors_carry_expected_set() {
        match parse("SELEKT x FROM t").unwrap_err() {
            ParseError::Syntax { token_index, expected, .. } => {
                assert_eq!(token_index, 0);
                assert_eq!(expected, vec!["SELECT"]);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("SELECT FROM t"), Err(ParseError::Syntax { token_index: 1, .. })));
        assert!(matches!(parse("SELECT 'x FROM t"), Err(ParseError::Lex(_))));
    }

    #[test]
    fn nested_aggregates_are_rejected() {
        assert!(parse("SELECT max(count(*)) FROM t").is_err());
        assert!(parse("SELECT max(count(*) + 1) FROM t").is_ok());
    }

    #[test]
    fn precedence() {
        let e = parse_expr("a = 1 OR b = 2 AND NOT c LIKE 'x%'").unwrap();
        let Expr::Binary { op: BinOp::Or, right, .. } = e else { panic!() };
        let Expr::Binary { op: BinOp::And, right, .. } = *right else { panic!() };
        assert!(matches!(*right, Expr::Not(_)));
        let e = parse_expr("1 - 2 * -x").unwrap();
        let Expr::Binary { op: BinOp::Minus, right, .. } = e else { panic!() };
        assert!(matches!(*right, Expr::Binary { op: BinOp::Mul, .. }));
    }
}
