mod support;

use nl2sql_core::metrics::{compare_forms, exact_match, results_match, Cell, ExactMode, ResultTable};
use nl2sql_core::sql::{decompose, parse, serialize, DecomposeOptions};
use nl2sql_core::Ratio;
use proptest::prelude::*;

const PREDICATES: &[&str] = &[
    "id > 2",
    "location = 'north'",
    "'Harbor' = location",
    "customer_id IN (1, 2)",
    "tariff_id IS NOT NULL",
    "location LIKE 'N%'",
    "id BETWEEN 1 AND 4",
    "NOT id = 3",
    "(id = 1 OR id = 5)",
];

fn conjunction(parts: &[&str]) -> String {
    format!("SELECT location, count(*) FROM meters WHERE {} GROUP BY location", parts.join(" AND "))
}

fn alias() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9]{0,4}".prop_filter("not a name in the query", |a| {
        !["as", "on", "in", "or", "and", "not", "is", "by", "asc", "desc", "join", "from", "like", "null", "limit"]
            .contains(&a.as_str())
            && !["id", "meters", "readings", "location", "usage_kwh", "reading_id"].contains(&a.as_str())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// Pairs are (q, q), (q, lowercased q) or (q, unrelated q').
    #[test]
    fn string_match_implies_component_match(
        a in support::ast_gen::query(1),
        b in support::ast_gen::query(1),
        variant in 0..3u8,
    ) {
        let gold = serialize(&a);
        let pred = match variant {
            0 => gold.clone(),
            1 => gold.to_lowercase(),
            _ => serialize(&b),
        };
        let m = compare_forms(&gold, &pred, DecomposeOptions::default());
        prop_assert!(!m.string || m.component, "{} vs {}", gold, pred);
        if variant == 0 {
            prop_assert!(m.string && m.component);
        }
    }
}

proptest! {
    #[test]
    fn conjunct_order_is_irrelevant(parts in proptest::sample::subsequence(PREDICATES.to_vec(), 1..=5).prop_shuffle()) {
        let mut sorted = parts.clone();
        sorted.sort();
        let (a, b) = (conjunction(&parts), conjunction(&sorted));
        prop_assert!(exact_match(&a, &b, ExactMode::Component), "{} vs {}", a, b);
        prop_assert_eq!(decompose(&parse(&a).unwrap()), decompose(&parse(&b).unwrap()));
    }

    #[test]
    fn alias_names_are_irrelevant(x in alias(), y in alias()) {
        prop_assume!(x != y);
        let q = |a: &str, b: &str| {
            format!(
                "SELECT {a}.location, sum({b}.usage_kwh) FROM meters AS {a} JOIN readings AS {b} ON {a}.id = {b}.meters \
                 WHERE {b}.usage_kwh > 10 GROUP BY {a}.location ORDER BY sum({b}.usage_kwh) DESC"
            )
        };
        let gold = q("T1", "T2");
        let pred = q(&x, &y);
        prop_assert!(exact_match(&gold, &pred, ExactMode::Component), "{}", pred);
        prop_assert!(!exact_match(&gold, &pred, ExactMode::String) || (x == "t1" && y == "t2"));
    }

    #[test]
    fn bag_comparison_ignores_row_order(
        rows in proptest::collection::vec((any::<i64>(), "[a-c]{0,2}"), 0..12).prop_shuffle(),
        seed in any::<u64>(),
    ) {
        let to_table = |rows: &[(i64, String)]| ResultTable {
            columns: vec!["n".into(), "s".into()],
            rows: rows.iter().map(|(n, s)| vec![Cell::Integer(*n), Cell::Text(s.clone())]).collect(),
        };
        let gold = to_table(&rows);
        let mut shuffled = rows.clone();
        if !shuffled.is_empty() {
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
        }
        let pred = to_table(&shuffled);
        prop_assert!(results_match(&gold, &pred, false));
        prop_assert_eq!(results_match(&gold, &pred, true), rows == shuffled);
        if !rows.is_empty() {
            let mut fewer = rows.clone();
            fewer.pop();
            prop_assert!(!results_match(&gold, &to_table(&fewer), false));
        }
    }

    #[test]
    fn ratio_order_matches_floats(a in 0u64..1000, b in 1u64..1000, c in 0u64..1000, d in 1u64..1000) {
        let (x, y) = (Ratio::new(a, b), Ratio::new(c, d));
        let fx = a as f64 / b as f64;
        let fy = c as f64 / d as f64;
        if (fx - fy).abs() > 1e-9 {
            prop_assert_eq!(x.partial_cmp(&y), fx.partial_cmp(&fy));
        } else {
            prop_assert!(x.same_value(y));
        }
    }
}

#[test]
fn corpus_queries_match_themselves() {
    for (_, sql) in support::corpus() {
        let m = compare_forms(&sql, &sql, DecomposeOptions::default());
        assert!(m.pred_parses && m.string && m.component, "{sql}");
        let m = compare_forms(&sql, &sql.to_lowercase(), DecomposeOptions::default());
        assert!(!m.string || m.component, "{sql}");
    }
}

#[test]
fn real_cells_use_relative_tolerance() {
    let a = ResultTable { columns: vec!["x".into()], rows: vec![vec![Cell::Real(0.1 + 0.2)]] };
    let b = ResultTable { columns: vec!["x".into()], rows: vec![vec![Cell::Real(0.3)]] };
    let c = ResultTable { columns: vec!["x".into()], rows: vec![vec![Cell::Integer(3)]] };
    assert!(results_match(&a, &b, true));
    assert!(!results_match(&a, &c, true));
}
