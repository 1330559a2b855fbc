//! Canonical single-line SQL text.
//!
//! Keywords are uppercase, aggregate names lowercase, identifiers as stored,
//! one space between tokens except around `.`, `(`, `)` and before `,`.
//! Parentheses appear only where precedence needs them.

use alloc::string::String;
use core::fmt::Write;

use super::ast::*;

pub fn serialize(query: &Query) -> String {
    let mut out = String::new();
    write_query(&mut out, query);
    out
}

pub fn serialize_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr, 0);
    out
}

pub(crate) fn write_ident(out: &mut String, ident: &Ident) {
    if ident.quoted {
        out.push('"');
        out.push_str(&ident.value.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(&ident.value);
    }
}

fn write_query(out: &mut String, query: &Query) {
    write_select(out, &query.body);
    if let Some(set_op) = &query.set_op {
        out.push(' ');
        out.push_str(set_op.op.keyword());
        out.push(' ');
        write_query(out, &set_op.right);
    }
}

fn write_list<T>(out: &mut String, items: &[T], mut each: impl FnMut(&mut String, &T)) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        each(out, item);
    }
}

fn write_select(out: &mut String, select: &Select) {
    out.push_str("SELECT ");
    if select.distinct {
        out.push_str("DISTINCT ");
    }
    write_list(out, &select.items, |out, item| {
        write_expr(out, &item.expr, 0);
        if let Some(alias) = &item.alias {
            out.push_str(" AS ");
            write_ident(out, alias);
        }
    });
    out.push_str(" FROM ");
    write_factor(out, &select.from.base);
    for join in &select.from.joins {
        match join.kind {
            JoinKind::Comma => out.push_str(", "),
            JoinKind::Inner => out.push_str(" JOIN "),
            JoinKind::Left => out.push_str(" LEFT JOIN "),
        }
        write_factor(out, &join.factor);
        if let Some(on) = &join.on {
            out.push_str(" ON ");
            write_expr(out, on, 0);
        }
    }
    if let Some(selection) = &select.selection {
        out.push_str(" WHERE ");
        write_expr(out, selection, 0);
    }
    if !select.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        write_list(out, &select.group_by, |out, e| write_expr(out, e, 0));
    }
    if let Some(having) = &select.having {
        out.push_str(" HAVING ");
        write_expr(out, having, 0);
    }
    if !select.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        write_list(out, &select.order_by, |out, item| {
            write_expr(out, &item.expr, 0);
            if item.desc {
                out.push_str(" DESC");
            }
        });
    }
    if let Some(limit) = select.limit {
        let _ = write!(out, " LIMIT {limit}");
    }
}

fn write_factor(out: &mut String, factor: &TableFactor) {
    match factor {
        TableFactor::Named { name, .. } => write_ident(out, name),
        TableFactor::Derived { query, .. } => {
            out.push('(');
            write_query(out, query);
            out.push(')');
        }
    }
    if let Some(alias) = factor.alias() {
        out.push_str(" AS ");
        write_ident(out, alias);
    }
}

fn write_string_literal(out: &mut String, value: &str) {
    out.push('\'');
    out.push_str(&value.replace('\'', "''"));
    out.push('\'');
}

/// Writes `expr`, parenthesized when its precedence is below `min`.
fn write_expr(out: &mut String, expr: &Expr, min: u8) {
    let wrap = expr.precedence() < min;
    if wrap {
        out.push('(');
    }
    match expr {
        Expr::Column { table, column } => {
            if let Some(table) = table {
                write_ident(out, table);
                out.push('.');
            }
            write_ident(out, column);
        }
        Expr::Wildcard { table } => {
            if let Some(table) = table {
                write_ident(out, table);
                out.push('.');
            }
            out.push('*');
        }
        Expr::Literal(Literal::Number(n)) => out.push_str(n),
        Expr::Literal(Literal::String(s)) => write_string_literal(out, s),
        Expr::Literal(Literal::Null) => out.push_str("NULL"),
        Expr::Aggregate { func, distinct, arg } => {
            out.push_str(func.name());
            out.push('(');
            if *distinct {
                out.push_str("DISTINCT ");
            }
            write_expr(out, arg, 0);
            out.push(')');
        }
        Expr::Binary { op, left, right } => {
            let p = op.precedence();
            // comparisons do not chain; everything else is left-associative
            let left_min = if op.is_comparison() { p + 1 } else { p };
            write_expr(out, left, left_min);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, right, p + 1);
        }
        Expr::Not(inner) => {
            out.push_str("NOT ");
            write_expr(out, inner, 3);
        }
        Expr::Neg(inner) => {
            out.push('-');
            // `--` would start a comment in SQLite
            if matches!(**inner, Expr::Neg(_)) {
                out.push(' ');
            }
            write_expr(out, inner, 7);
        }
        Expr::Like { negated, expr, pattern } => {
            write_expr(out, expr, 5);
            out.push_str(if *negated { " NOT LIKE " } else { " LIKE " });
            write_expr(out, pattern, 5);
        }
        Expr::InList { negated, expr, list } => {
            write_expr(out, expr, 5);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            write_list(out, list, |out, e| write_expr(out, e, 0));
            out.push(')');
        }
        Expr::InSubquery { negated, expr, query } => {
            write_expr(out, expr, 5);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            write_query(out, query);
            out.push(')');
        }
        Expr::Between { negated, expr, low, high } => {
            write_expr(out, expr, 5);
            out.push_str(if *negated { " NOT BETWEEN " } else { " BETWEEN " });
            write_expr(out, low, 5);
            out.push_str(" AND ");
            write_expr(out, high, 5);
        }
        Expr::IsNull { negated, expr } => {
            write_expr(out, expr, 5);
            out.push_str(if *negated { " IS NOT NULL" } else { " IS NULL" });
        }
        Expr::Exists(query) => {
            out.push_str("EXISTS (");
            write_query(out, query);
            out.push(')');
        }
        Expr::Subquery(query) => {
            out.push('(');
            write_query(out, query);
            out.push(')');
        }
    }
    if wrap {
        out.push(')');
    }
}
