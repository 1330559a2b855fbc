//! Random ASTs over the supported SQL subset, for round-trip properties.

use nl2sql_core::sql::*;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::select;

const NAMES: &[&str] = &["meters", "location", "id", "t1", "t2", "city", "name", "usage_kwh", "x", "a_b", "col9"];

pub fn ident() -> BoxedStrategy<Ident> {
    prop_oneof![
        9 => select(NAMES).prop_map(Ident::new),
        1 => "[a-z \"]{1,6}".prop_map(Ident::quoted),
    ]
    .boxed()
}

pub fn literal() -> BoxedStrategy<Literal> {
    prop_oneof![
        "[0-9]{1,4}(\\.[0-9]{1,2})?".prop_map(Literal::Number),
        "[a-zA-Z' %_]{0,8}".prop_map(Literal::String),
        Just(Literal::Null),
    ]
    .boxed()
}

fn column() -> BoxedStrategy<Expr> {
    (proptest::option::of(ident()), ident()).prop_map(|(table, column)| Expr::Column { table, column }).boxed()
}

fn leaf() -> BoxedStrategy<Expr> {
    prop_oneof![3 => column(), 2 => literal().prop_map(Expr::Literal)].boxed()
}

fn bin_op() -> impl Strategy<Value = BinOp> {
    select(vec![
        BinOp::Or,
        BinOp::And,
        BinOp::Eq,
        BinOp::NotEq,
        BinOp::Lt,
        BinOp::LtEq,
        BinOp::Gt,
        BinOp::GtEq,
        BinOp::Plus,
        BinOp::Minus,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Mod,
    ])
}

fn agg() -> impl Strategy<Value = AggFunc> {
    select(vec![AggFunc::Count, AggFunc::Sum, AggFunc::Avg, AggFunc::Min, AggFunc::Max])
}

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

pub fn expr(depth: u32) -> BoxedStrategy<Expr> {
    if depth == 0 {
        return leaf();
    }
    let sub = || expr(depth - 1);
    let string_pattern = "[a-z%_]{0,5}".prop_map(|s| Expr::Literal(Literal::String(s)));
    prop_oneof![
        4 => leaf(),
        4 => (bin_op(), sub(), sub()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
        1 => sub().prop_map(|e| Expr::Not(b(e))),
        1 => sub().prop_map(|e| Expr::Neg(b(e))),
        1 => (any::<bool>(), sub(), string_pattern).prop_map(|(negated, e, p)| Expr::Like { negated, expr: b(e), pattern: b(p) }),
        1 => (any::<bool>(), sub(), vec(sub(), 1..4)).prop_map(|(negated, e, list)| Expr::InList { negated, expr: b(e), list }),
        1 => (any::<bool>(), sub(), sub(), sub())
            .prop_map(|(negated, e, low, high)| Expr::Between { negated, expr: b(e), low: b(low), high: b(high) }),
        1 => (any::<bool>(), sub()).prop_map(|(negated, e)| Expr::IsNull { negated, expr: b(e) }),
        2 => (agg(), any::<bool>(), sub()).prop_map(|(func, distinct, arg)| {
            // the grammar has no aggregate directly inside an aggregate
            let arg = if matches!(arg, Expr::Aggregate { .. }) { Expr::column("id") } else { arg };
            Expr::Aggregate { func, distinct, arg: b(arg) }
        }),
        1 => Just(Expr::Aggregate { func: AggFunc::Count, distinct: false, arg: b(Expr::Wildcard { table: None }) }),
        1 => query(depth - 1).prop_map(|q| Expr::Subquery(Box::new(q))),
        1 => query(depth - 1).prop_map(|q| Expr::Exists(Box::new(q))),
        1 => (any::<bool>(), sub(), query(depth - 1))
            .prop_map(|(negated, e, q)| Expr::InSubquery { negated, expr: b(e), query: Box::new(q) }),
    ]
    .boxed()
}

fn select_item(depth: u32) -> BoxedStrategy<SelectItem> {
    prop_oneof![
        4 => (expr(depth), proptest::option::of(ident())).prop_map(|(expr, alias)| SelectItem { expr, alias }),
        1 => proptest::option::of(ident()).prop_map(|table| SelectItem { expr: Expr::Wildcard { table }, alias: None }),
    ]
    .boxed()
}

fn factor(depth: u32) -> BoxedStrategy<TableFactor> {
    let named = (ident(), proptest::option::of(ident())).prop_map(|(name, alias)| TableFactor::Named { name, alias });
    if depth == 0 {
        return named.boxed();
    }
    prop_oneof![
        4 => named,
        1 => (query(depth - 1), proptest::option::of(ident()))
            .prop_map(|(q, alias)| TableFactor::Derived { query: Box::new(q), alias }),
    ]
    .boxed()
}

fn join(depth: u32) -> BoxedStrategy<Join> {
    prop_oneof![
        (factor(depth), expr(depth)).prop_map(|(factor, on)| Join { kind: JoinKind::Inner, factor, on: Some(on) }),
        (factor(depth), expr(depth)).prop_map(|(factor, on)| Join { kind: JoinKind::Left, factor, on: Some(on) }),
        factor(depth).prop_map(|factor| Join { kind: JoinKind::Comma, factor, on: None }),
    ]
    .boxed()
}

pub fn select_body(depth: u32) -> BoxedStrategy<Select> {
    let e = depth.min(2);
    (
        any::<bool>(),
        vec(select_item(e), 1..4),
        factor(depth),
        vec(join(depth.saturating_sub(1)), 0..3),
        proptest::option::of(expr(e)),
        vec(expr(e.min(1)), 0..3),
        proptest::option::of(expr(e)),
        vec((expr(e.min(1)), any::<bool>()).prop_map(|(expr, desc)| OrderItem { expr, desc }), 0..3),
        proptest::option::of(0u64..1000),
    )
        .prop_map(|(distinct, items, base, joins, selection, group_by, having, order_by, limit)| Select {
            distinct,
            items,
            from: From { base, joins },
            selection,
            group_by,
            having,
            order_by,
            limit,
        })
        .boxed()
}

pub fn query(depth: u32) -> BoxedStrategy<Query> {
    let body = select_body(depth);
    if depth == 0 {
        return body.prop_map(|body| Query { body, set_op: None }).boxed();
    }
    let op = select(vec![SetOp::Union, SetOp::Intersect, SetOp::Except]);
    (body, proptest::option::weighted(0.3, (op, query(depth - 1))))
        .prop_map(|(body, set)| Query {
            body,
            set_op: set.map(|(op, right)| SetOperation { op, right: Box::new(right) }),
        })
        .boxed()
}
