//! Case folding, alias resolution and clause-level decomposition.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::print::{serialize, serialize_expr};

/// Clause multisets of a query. Conjunct, select-item, table and group-key
/// lists are sorted; order-by keys keep their order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSet {
    pub distinct: bool,
    pub select: Vec<String>,
    pub from_tables: Vec<String>,
    pub join_conditions: Vec<String>,
    pub where_conjuncts: Vec<String>,
    pub group_by: Vec<String>,
    pub having_conjuncts: Vec<String>,
    pub order_by: Vec<String>,
    pub limit: Option<u64>,
    pub set_op: Option<(SetOp, Box<ComponentSet>)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DecomposeOptions {
    /// Replace every number and string literal with one placeholder.
    pub ignore_values: bool,
}

/// Lowercases every unquoted identifier; quoted ones keep their case.
pub fn fold_case(query: &Query) -> Query {
    let mut q = query.clone();
    fold_query(&mut q);
    q
}

/// Serialization used for string-mode exact match.
pub fn canonical_string(query: &Query) -> String {
    serialize(&fold_case(query))
}

fn fold_ident(ident: &mut Ident) {
    if !ident.quoted {
        ident.value = ident.value.to_lowercase();
    }
}

fn fold_query(q: &mut Query) {
    let s = &mut q.body;
    for item in &mut s.items {
        fold_expr(&mut item.expr);
        if let Some(a) = &mut item.alias {
            fold_ident(a);
        }
    }
    fold_factor(&mut s.from.base);
    for join in &mut s.from.joins {
        fold_factor(&mut join.factor);
        if let Some(on) = &mut join.on {
            fold_expr(on);
        }
    }
    s.selection.iter_mut().chain(s.having.iter_mut()).chain(s.group_by.iter_mut()).for_each(fold_expr);
    s.order_by.iter_mut().for_each(|o| fold_expr(&mut o.expr));
    if let Some(op) = &mut q.set_op {
        fold_query(&mut op.right);
    }
}

fn fold_factor(f: &mut TableFactor) {
    match f {
        TableFactor::Named { name, alias } => {
            fold_ident(name);
            alias.iter_mut().for_each(fold_ident);
        }
        TableFactor::Derived { query, alias } => {
            fold_query(query);
            alias.iter_mut().for_each(fold_ident);
        }
    }
}

fn fold_expr(e: &mut Expr) {
    match e {
        Expr::Column { table, column } => {
            table.iter_mut().for_each(fold_ident);
            fold_ident(column);
        }
        Expr::Wildcard { table } => table.iter_mut().for_each(fold_ident),
        Expr::Literal(_) => {}
        Expr::Aggregate { arg, .. } => fold_expr(arg),
        Expr::Binary { left, right, .. } => {
            fold_expr(left);
            fold_expr(right);
        }
        Expr::Not(inner) | Expr::Neg(inner) => fold_expr(inner),
        Expr::Like { expr, pattern, .. } => {
            fold_expr(expr);
            fold_expr(pattern);
        }
        Expr::InList { expr, list, .. } => {
            fold_expr(expr);
            list.iter_mut().for_each(fold_expr);
        }
        Expr::InSubquery { expr, query, .. } => {
            fold_expr(expr);
            fold_query(query);
        }
        Expr::Between { expr, low, high, .. } => {
            fold_expr(expr);
            fold_expr(low);
            fold_expr(high);
        }
        Expr::IsNull { expr, .. } => fold_expr(expr),
        Expr::Exists(q) | Expr::Subquery(q) => fold_query(q),
    }
}

#[derive(Default)]
struct Frame {
    /// alias or table name -> underlying table (`None` for derived tables)
    bindings: Vec<(String, Option<Ident>)>,
    /// The table unqualified columns belong to when the FROM has exactly one.
    single: Option<Ident>,
}

struct Normalizer {
    env: Vec<Frame>,
    options: DecomposeOptions,
}

impl Normalizer {
    fn lookup(&self, qualifier: &Ident) -> Option<Option<Ident>> {
        self.env
            .iter()
            .rev()
            .find_map(|frame| frame.bindings.iter().find(|(name, _)| *name == qualifier.value).map(|(_, t)| t.clone()))
    }

    fn query(&mut self, q: &Query) -> Query {
        Query {
            body: self.select(&q.body),
            set_op: q.set_op.as_ref().map(|op| SetOperation { op: op.op, right: Box::new(self.query(&op.right)) }),
        }
    }

    fn factor(&mut self, f: &TableFactor, frame: &mut Frame) -> TableFactor {
        match f {
            TableFactor::Named { name, alias } => {
                if let Some(alias) = alias {
                    frame.bindings.push((alias.value.clone(), Some(name.clone())));
                }
                frame.bindings.push((name.value.clone(), Some(name.clone())));
                TableFactor::Named { name: name.clone(), alias: None }
            }
            TableFactor::Derived { query, alias } => {
                if let Some(alias) = alias {
                    frame.bindings.push((alias.value.clone(), None));
                }
                TableFactor::Derived { query: Box::new(self.query(query)), alias: alias.clone() }
            }
        }
    }

    fn select(&mut self, s: &Select) -> Select {
        let mut frame = Frame::default();
        let base = self.factor(&s.from.base, &mut frame);
        let mut joins: Vec<Join> = s
            .from
            .joins
            .iter()
            .map(|j| Join { kind: j.kind, factor: self.factor(&j.factor, &mut frame), on: j.on.clone() })
            .collect();
        if let (TableFactor::Named { name, .. }, true) = (&base, joins.is_empty()) {
            frame.single = Some(name.clone());
        }
        self.env.push(frame);
        for join in &mut joins {
            join.on = join.on.as_ref().map(|e| self.expr(e));
        }
        let out = Select {
            distinct: s.distinct,
            items: s.items.iter().map(|i| SelectItem { expr: self.expr(&i.expr), alias: None }).collect(),
            from: From { base, joins },
            selection: s.selection.as_ref().map(|e| self.expr(e)),
            group_by: s.group_by.iter().map(|e| self.expr(e)).collect(),
            having: s.having.as_ref().map(|e| self.expr(e)),
            order_by: s.order_by.iter().map(|o| OrderItem { expr: self.expr(&o.expr), desc: o.desc }).collect(),
            limit: s.limit,
        };
        self.env.pop();
        out
    }

    fn qualifier(&self, table: &Option<Ident>) -> Option<Ident> {
        match table {
            Some(q) => match self.lookup(q) {
                Some(Some(t)) => Some(t),
                _ => Some(q.clone()),
            },
            None => None,
        }
    }

    fn expr(&mut self, e: &Expr) -> Expr {
        match e {
            Expr::Column { table, column } => {
                let table = self.qualifier(table).or_else(|| self.env.last().and_then(|f| f.single.clone()));
                Expr::Column { table, column: column.clone() }
            }
            Expr::Wildcard { table } => Expr::Wildcard { table: self.qualifier(table) },
            Expr::Literal(Literal::Null) => e.clone(),
            Expr::Literal(_) if self.options.ignore_values => Expr::Literal(Literal::String(String::from("<value>"))),
            Expr::Literal(_) => e.clone(),
            Expr::Aggregate { func, distinct, arg } => {
                Expr::Aggregate { func: *func, distinct: *distinct, arg: Box::new(self.expr(arg)) }
            }
            Expr::Binary { op: BinOp::And, .. } => {
                let mut parts: Vec<Expr> = Vec::new();
                for c in conjuncts(e) {
                    parts.push(self.expr(c));
                }
                parts.sort_by_cached_key(serialize_expr);
                let mut iter = parts.into_iter();
                let first = iter.next().expect("at least two conjuncts");
                iter.fold(first, |acc, next| Expr::binary(BinOp::And, acc, next))
            }
            Expr::Binary { op, left, right } => {
                let (mut l, mut r) = (self.expr(left), self.expr(right));
                if matches!(op, BinOp::Eq | BinOp::NotEq) && serialize_expr(&r) < serialize_expr(&l) {
                    core::mem::swap(&mut l, &mut r);
                }
                Expr::binary(*op, l, r)
            }
            Expr::Not(inner) => Expr::Not(Box::new(self.expr(inner))),
            Expr::Neg(inner) => Expr::Neg(Box::new(self.expr(inner))),
            Expr::Like { negated, expr, pattern } => {
                Expr::Like { negated: *negated, expr: Box::new(self.expr(expr)), pattern: Box::new(self.expr(pattern)) }
            }
            Expr::InList { negated, expr, list } => Expr::InList {
                negated: *negated,
                expr: Box::new(self.expr(expr)),
                list: list.iter().map(|x| self.expr(x)).collect(),
            },
            Expr::InSubquery { negated, expr, query } => Expr::InSubquery {
                negated: *negated,
                expr: Box::new(self.expr(expr)),
                query: Box::new(self.query(query)),
            },
            Expr::Between { negated, expr, low, high } => Expr::Between {
                negated: *negated,
                expr: Box::new(self.expr(expr)),
                low: Box::new(self.expr(low)),
                high: Box::new(self.expr(high)),
            },
            Expr::IsNull { negated, expr } => Expr::IsNull { negated: *negated, expr: Box::new(self.expr(expr)) },
            Expr::Exists(q) => Expr::Exists(Box::new(self.query(q))),
            Expr::Subquery(q) => Expr::Subquery(Box::new(self.query(q))),
        }
    }
}

/// Top-level AND operands, left to right.
pub fn conjuncts(e: &Expr) -> Vec<&Expr> {
    let mut out = Vec::new();
    let mut stack = alloc::vec![e];
    while let Some(e) = stack.pop() {
        match e {
            Expr::Binary { op: BinOp::And, left, right } => {
                stack.push(right);
                stack.push(left);
            }
            other => out.push(other),
        }
    }
    out
}

/// Case-folded, alias-free form with sorted conjuncts and ordered operands
/// of `=` / `!=`.
pub fn normalize(query: &Query, options: DecomposeOptions) -> Query {
    Normalizer { env: Vec::new(), options }.query(&fold_case(query))
}

pub fn decompose(query: &Query) -> ComponentSet {
    decompose_with(query, DecomposeOptions::default())
}

pub fn decompose_with(query: &Query, options: DecomposeOptions) -> ComponentSet {
    components(&normalize(query, options))
}

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

fn conjunct_strings(e: Option<&Expr>) -> Vec<String> {
    e.map(|e| conjuncts(e).into_iter().map(serialize_expr).collect()).unwrap_or_default()
}

fn components(q: &Query) -> ComponentSet {
    let s = &q.body;
    let from_tables = s
        .from
        .factors()
        .map(|f| match f {
            TableFactor::Named { name, .. } => {
                let mut out = String::new();
                super::print::write_ident(&mut out, name);
                out
            }
            TableFactor::Derived { query, .. } => alloc::format!("({})", serialize(query)),
        })
        .collect();
    let join_conditions = s.from.joins.iter().flat_map(|j| conjunct_strings(j.on.as_ref())).collect();
    ComponentSet {
        distinct: s.distinct,
        select: sorted(s.items.iter().map(|i| serialize_expr(&i.expr)).collect()),
        from_tables: sorted(from_tables),
        join_conditions: sorted(join_conditions),
        where_conjuncts: sorted(conjunct_strings(s.selection.as_ref())),
        group_by: sorted(s.group_by.iter().map(serialize_expr).collect()),
        having_conjuncts: sorted(conjunct_strings(s.having.as_ref())),
        order_by: s
            .order_by
            .iter()
            .map(|o| {
                let mut key = serialize_expr(&o.expr);
                if o.desc {
                    key.push_str(" DESC");
                }
                key
            })
            .collect(),
        limit: s.limit,
        set_op: q.set_op.as_ref().map(|op| (op.op, Box::new(components(&op.right)))),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use alloc::vec;

    fn comp(sql: &str) -> ComponentSet {
        decompose(&parse(sql).unwrap())
    }

    #[test]
    fn conjunct_order_is_irrelevant() {
        assert_eq!(comp("SELECT x FROM t WHERE a=1 AND b=2"), comp("SELECT x FROM t WHERE b=2 AND a=1"));
        assert_ne!(comp("SELECT x FROM t WHERE a=1 AND b=2"), comp("SELECT x FROM t WHERE a=1 AND b=3"));
    }

    #[test]
    fn missing_where_is_empty() {
        assert!(comp("SELECT x FROM t").where_conjuncts.is_empty());
    }

    #[test]
    fn aliases_resolve_to_tables() {
        let c = comp("SELECT m.id FROM meters AS m WHERE m.location = 'north'");
        assert_eq!(c.from_tables, vec!["meters"]);
        assert_eq!(c.select, vec!["meters.id"]);
        assert_eq!(c.where_conjuncts, vec!["'north' = meters.location"]);
        assert_eq!(c, comp("SELECT id FROM Meters WHERE location = 'north'"));
    }

    #[test]
    fn join_conditions_are_symmetric() {
        let a = comp("SELECT T1.a FROM x AS T1 JOIN y AS T2 ON T1.id = T2.xid");
        let b = comp("SELECT p.a FROM y AS q JOIN x AS p ON q.xid = p.id");
        assert_eq!(a, b);
        assert_eq!(a.join_conditions, vec!["x.id = y.xid"]);
    }

    #[test]
    fn distinct_differs_from_group_by() {
        assert_ne!(comp("SELECT DISTINCT city FROM stores"), comp("SELECT city FROM stores GROUP BY city"));
    }

    #[test]
    fn values_kept_unless_ignored() {
        let a = parse("SELECT a FROM t WHERE b = 1").unwrap();
        let b = parse("SELECT a FROM t WHERE b = 2").unwrap();
        assert_ne!(decompose(&a), decompose(&b));
        let opts = DecomposeOptions { ignore_values: true };
        assert_eq!(decompose_with(&a, opts), decompose_with(&b, opts));
    }

    #[test]
    fn nested_subquery_conjuncts_are_normalized() {
        let a = comp("SELECT a FROM t WHERE id IN (SELECT x FROM u WHERE p = 1 AND q = 2)");
        let b = comp("SELECT a FROM t WHERE id IN (SELECT x FROM u WHERE q = 2 AND p = 1)");
        assert_eq!(a, b);
    }

    #[test]
    fn order_by_is_ordered() {
        assert_ne!(comp("SELECT a FROM t ORDER BY a, b"), comp("SELECT a FROM t ORDER BY b, a"));
    }
}
