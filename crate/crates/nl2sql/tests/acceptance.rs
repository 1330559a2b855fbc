//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints its own PASS/FAIL line; exits non-zero if any fail.

#[path = "../../core/tests/support/ast_gen.rs"]
#[allow(dead_code)]
mod ast_gen;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use nl2sql::backend::{serve_mock, BaselineBackend, HttpBackend, DEFAULT_TIMEOUT};
use nl2sql::corrupt::{generate_corruptions, parse_query_corpus};
use nl2sql::custom::{ingest_custom, load_predictions};
use nl2sql::db::DbCatalog;
use nl2sql::evaluate::{evaluate_corpus, translate_all, EvalOptions};
use nl2sql::spider::ingest_spider;
use nl2sql_core::dataset::{assemble_training, PromptOptions, QueryPair, Split};
use nl2sql_core::metrics::{EvalReport, TestLabel};
use nl2sql_core::repair::{repair, RepairOptions, RepairStatus};
use nl2sql_core::schema::parse_flat;
use nl2sql_core::sql::{parse, serialize, tokenize, TokenKind};
use nl2sql_core::{DbSchema, Ratio};
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn schema(db: &str) -> DbSchema {
    parse_flat(&std::fs::read_to_string(fixtures().join(format!("schemas/{db}.schema"))).unwrap()).unwrap()
}

fn schemas() -> Vec<DbSchema> {
    ["utility", "retail", "music"].iter().map(|d| schema(d)).collect()
}

fn catalog() -> DbCatalog {
    DbCatalog::new(fixtures().join("db"))
}

fn corpus() -> Vec<(String, String)> {
    parse_query_corpus(&std::fs::read_to_string(fixtures().join("corpus/queries.tsv")).unwrap()).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(start.elapsed() < limit, || format!("took {:?}, limit {limit:?}", start.elapsed()))
}

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

#[derive(Deserialize)]
struct Reported {
    entries: Vec<ReportedEntry>,
}

#[derive(Deserialize)]
struct ReportedEntry {
    domain: String,
    test: String,
    percent: f64,
}

fn c1_reported_numbers() -> Check {
    let text = std::fs::read_to_string(fixtures().join("reported/exact_match.json")).map_err(|e| e.to_string())?;
    let reported: Reported = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let expected = [("oltp", "test1", 72.9), ("oltp", "test2", 83.7), ("dw", "test1", 85.4), ("dw", "test2", 87.5)];
    ensure(reported.entries.len() == expected.len(), || "wrong number of entries".into())?;
    let mut shown = Vec::new();
    for (e, (domain, test, percent)) in reported.entries.iter().zip(expected) {
        ensure(e.domain == domain && e.test == test && e.percent == percent, || format!("entry {domain}/{test}"))?;
        let label = match test {
            "test1" => TestLabel::Test1,
            _ => TestLabel::Test2,
        };
        ensure(label.as_str() == test, || format!("label {test}"))?;
        // per-mille counts render back to the published one-decimal figure
        let r = Ratio::new((percent * 10.0).round() as u64, 1000);
        let rendered = format!("{:.1}", r.percent().unwrap());
        ensure(rendered == format!("{percent:.1}"), || format!("{r} rendered as {rendered}"))?;
        shown.push(format!("{domain}/{test}={rendered}%"));
    }
    Ok(format!("{} (formatting fixture only; proprietary data and model, not reproduced)", shown.join(" ")))
}

fn c2_spider_counts() -> Check {
    let start = Instant::now();
    let (train, dev, tables, expect) = match std::env::var_os("SPIDER_DIR") {
        Some(dir) => {
            let dir = PathBuf::from(dir);
            (
                vec![dir.join("train_spider.json"), dir.join("train_others.json")],
                dir.join("dev.json"),
                dir.join("tables.json"),
                (8659, 1034, 166),
            )
        }
        None => {
            let dir = fixtures().join("spider_mini");
            (vec![dir.join("train_spider.json")], dir.join("dev.json"), dir.join("tables.json"), (9, 4, 3))
        }
    };
    let data = ingest_spider(&train, &dev, &tables).map_err(|e| e.to_string())?;
    let got = (data.stats.n_train, data.stats.n_test, data.stats.n_databases);
    ensure(got == expect, || format!("got {got:?}, expected {expect:?}"))?;
    within(start, Duration::from_secs(10))?;
    let source = if std::env::var_os("SPIDER_DIR").is_some() {
        "Spider"
    } else {
        "mini fixture; set SPIDER_DIR for real Spider"
    };
    Ok(format!("train={} test={} databases={} ({source})", got.0, got.1, got.2))
}

fn c3_repair_restores_corruptions() -> Check {
    let schemas = schemas();
    let start = Instant::now();
    let corruptions = generate_corruptions(&corpus(), &schemas, 300, 2, 11);
    ensure(corruptions.len() >= 200, || format!("only {} corruptions", corruptions.len()))?;
    let options = RepairOptions::default();
    for c in &corruptions {
        let schema = schemas.iter().find(|s| s.db_id() == c.db_id).unwrap();
        let fixed = repair(&c.corrupted_sql, schema, &options);
        ensure(fixed.repaired_sql == c.original_sql, || {
            format!("{} -> {} (expected {})", c.corrupted_sql, fixed.repaired_sql, c.original_sql)
        })?;
        let again = repair(&fixed.repaired_sql, schema, &options);
        ensure(again.edits.is_empty() && again.repaired_sql == fixed.repaired_sql, || {
            format!("not idempotent on {}", fixed.repaired_sql)
        })?;
    }
    within(start, Duration::from_secs(5))?;
    Ok(format!("{n}/{n} restored, idempotent", n = corruptions.len()))
}

fn c4_meter_example() -> Check {
    let r = repair("SELECT meter FROM readings", &schema("utility"), &RepairOptions::default());
    ensure(r.repaired_sql == "SELECT meters FROM readings", || r.repaired_sql.clone())?;
    ensure(r.status == RepairStatus::Repaired && r.edits.len() == 1, || format!("{:?}", r.edits))?;
    let e = &r.edits[0];
    ensure(e.original == "meter" && e.replacement == "meters" && e.distance == 1, || format!("{e:?}"))?;
    Ok("meter -> meters, one edit, distance 1".into())
}

#[derive(Deserialize)]
struct ExpectedVerdict {
    index: usize,
    exact_string: bool,
    exact_component: bool,
    execution: Option<bool>,
    repaired: bool,
    failure_reason: Option<String>,
}

fn c5_evaluator_fixture() -> Check {
    let start = Instant::now();
    let utility = schema("utility");
    let (pairs, _) = ingest_custom(&fixtures().join("eval/custom.jsonl"), &utility).map_err(|e| e.to_string())?;
    let predictions = load_predictions(&fixtures().join("eval/predictions.jsonl")).map_err(|e| e.to_string())?;
    let report = evaluate_corpus(&pairs, &predictions, &[utility], Some(&catalog()), &EvalOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(report.exact_match_component == Ratio::new(14, 20), || {
        format!("component {}", report.exact_match_component)
    })?;
    ensure(report.execution_accuracy == Ratio::new(17, 19), || format!("exec {}", report.execution_accuracy))?;
    ensure(report.exact_match_string == Ratio::new(8, 20), || format!("string {}", report.exact_match_string))?;
    let text = std::fs::read_to_string(fixtures().join("eval/expected.jsonl")).map_err(|e| e.to_string())?;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let x: ExpectedVerdict = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let v = &report.verdicts[x.index];
        let got = (
            v.exact_string,
            v.exact_component,
            v.execution,
            v.repaired,
            v.failure_reason.map(|r| r.as_str().to_owned()),
        );
        let want = (x.exact_string, x.exact_component, x.execution, x.repaired, x.failure_reason);
        ensure(got == want, || format!("pair {}: got {got:?}, expected {want:?}", x.index))?;
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("{}, all 20 verdicts agree", report.summary_line()))
}

/// Same query with keyword case and spacing perturbed.
fn respell(sql: &str, rng: &mut ChaCha8Rng) -> String {
    let tokens = tokenize(sql).unwrap();
    let mut out = String::new();
    for t in &tokens {
        if !out.is_empty() {
            out.push_str(if rng.gen_bool(0.2) { "  " } else { " " });
        }
        if t.kind == TokenKind::Keyword && rng.gen_bool(0.5) {
            out.push_str(&t.text.to_lowercase());
        } else {
            out.push_str(&t.text);
        }
    }
    out
}

fn c6_metric_implications() -> Check {
    let schemas = schemas();
    let queries = corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pairs = Vec::new();
    let mut predictions = Vec::new();
    for (db, sql) in &queries {
        let same_db: Vec<&String> = queries.iter().filter(|(d, _)| d == db).map(|(_, s)| s).collect();
        let other = same_db[rng.gen_range(0..same_db.len())].clone();
        for pred in [sql.clone(), respell(sql, &mut rng), serialize(&parse(sql).unwrap()), other] {
            pairs.push(QueryPair {
                question: String::new(),
                gold_sql: sql.clone(),
                db_id: db.clone(),
                split: Split::Test,
            });
            predictions.push(pred);
        }
    }
    ensure(pairs.len() >= 500, || format!("only {} pairs", pairs.len()))?;
    let options = EvalOptions { repair: false, ..EvalOptions::default() };
    let report =
        evaluate_corpus(&pairs, &predictions, &schemas, Some(&catalog()), &options).map_err(|e| e.to_string())?;
    let mut string_hits = 0;
    for v in &report.verdicts {
        if v.exact_string {
            string_hits += 1;
            ensure(v.exact_component, || format!("pair {}: string without component", v.index))?;
            if v.failure_reason.is_none() && v.execution.is_some() {
                ensure(v.execution == Some(true), || format!("pair {}: string match, results differ", v.index))?;
            }
        }
    }
    Ok(format!("{} pairs, {string_hits} string matches, both implications hold", pairs.len()))
}

fn c7_distinct_vs_group_by() -> Check {
    let pair = QueryPair {
        question: "Which cities have stores?".into(),
        gold_sql: "SELECT DISTINCT city FROM stores".into(),
        db_id: "retail".into(),
        split: Split::Test,
    };
    let pred = vec!["SELECT city FROM stores GROUP BY city".to_owned()];
    let report = evaluate_corpus(&[pair], &pred, &[schema("retail")], Some(&catalog()), &EvalOptions::default())
        .map_err(|e| e.to_string())?;
    let v = &report.verdicts[0];
    ensure(v.execution == Some(true), || format!("execution {:?}", v.execution))?;
    ensure(!v.exact_string && !v.exact_component, || "forms should differ".into())?;
    Ok("execution match, no exact match in either mode".into())
}

fn c8_pipeline_smoke() -> Check {
    let start = Instant::now();
    let utility = schema("utility");
    let schemas = vec![utility.clone()];
    let (pairs, _) =
        ingest_custom(&fixtures().join("templates/questions.jsonl"), &utility).map_err(|e| e.to_string())?;
    ensure(pairs.len() == 30, || format!("{} questions", pairs.len()))?;
    let dbs = catalog();
    let options = EvalOptions::default();

    let baseline = BaselineBackend::new(schemas.clone());
    let direct = translate_all(&baseline, &pairs, &schemas, 4).map_err(|e| e.to_string())?;
    let direct_report: EvalReport =
        evaluate_corpus(&pairs, &direct, &schemas, Some(&dbs), &options).map_err(|e| e.to_string())?;
    ensure(direct_report.exact_match_string == Ratio::new(30, 30), || direct_report.summary_line())?;

    let canned: HashMap<String, String> =
        pairs.iter().map(|p| p.question.clone()).zip(direct.iter().cloned()).collect();
    let server = serve_mock(0, canned, None).map_err(|e| e.to_string())?;
    let http = HttpBackend::new(&server.url(), DEFAULT_TIMEOUT);
    let served = translate_all(&http, &pairs, &schemas, 4).map_err(|e| e.to_string())?;
    let served_report = evaluate_corpus(&pairs, &served, &schemas, Some(&dbs), &options).map_err(|e| e.to_string())?;
    drop(server);

    let a = serde_json::to_string(&direct_report).map_err(|e| e.to_string())?;
    let b = serde_json::to_string(&served_report).map_err(|e| e.to_string())?;
    ensure(a == b, || "reports differ".into())?;
    within(start, Duration::from_secs(30))?;
    Ok(format!("{}, HTTP report byte-identical ({} bytes)", direct_report.summary_line(), a.len()))
}

fn c9_round_trip() -> Check {
    let queries = corpus();
    ensure(queries.len() >= 150, || format!("corpus has {}", queries.len()))?;
    for (_, sql) in &queries {
        let ast = parse(sql).map_err(|e| format!("{sql}: {e}"))?;
        ensure(parse(&serialize(&ast)).as_ref() == Ok(&ast), || sql.clone())?;
    }
    runner(1000)
        .run(&ast_gen::query(2), |ast| {
            let printed = serialize(&ast);
            proptest::prop_assert_eq!(parse(&printed), Ok(ast), "{}", printed);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{} corpus queries and 1000 random trees", queries.len()))
}

fn c10_assembly_arithmetic() -> Check {
    let schemas = schemas();
    let split = proptest::prop_oneof![proptest::strategy::Just(Split::Train), proptest::strategy::Just(Split::Test)];
    let pair = (proptest::sample::select(vec!["utility", "retail", "music"]), split).prop_map(|(db, split)| {
        QueryPair { question: "q".into(), gold_sql: "SELECT 1 FROM t".into(), db_id: db.into(), split }
    });
    let sizes = (proptest::collection::vec(pair.clone(), 0..200), proptest::collection::vec(pair, 0..60));
    runner(256)
        .run(&sizes, |(spider, custom)| {
            let out = assemble_training(&spider, &custom, &schemas, PromptOptions::default()).unwrap();
            let train = |ps: &[QueryPair]| ps.iter().filter(|p| p.split == Split::Train).count();
            proptest::prop_assert_eq!(out.len(), train(&spider) + train(&custom));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("len = spider train + custom train over 256 random size mixes".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("reported accuracy kept as formatting fixture", c1_reported_numbers),
        ("Spider ingestion counts", c2_spider_counts),
        ("repair restores generated corruptions", c3_repair_restores_corruptions),
        ("meter -> meters repair", c4_meter_example),
        ("evaluator agrees with fixture verdicts", c5_evaluator_fixture),
        ("metric implications", c6_metric_implications),
        ("DISTINCT vs GROUP BY divergence", c7_distinct_vs_group_by),
        ("baseline pipeline and HTTP parity", c8_pipeline_smoke),
        ("parser round trip", c9_round_trip),
        ("training assembly arithmetic", c10_assembly_arithmetic),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {title}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {title}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
