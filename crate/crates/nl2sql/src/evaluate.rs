//! Corpus evaluation: optional repair, both exact-match modes, and
//! execution accuracy on fixture databases.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use nl2sql_core::dataset::QueryPair;
use nl2sql_core::metrics::{compare_forms, results_match, EvalReport, FailureReason, TestLabel, Verdict};
use nl2sql_core::repair::{repair, RepairOptions, RepairStatus};
use nl2sql_core::sql::{parse, DecomposeOptions, Query};
use nl2sql_core::DbSchema;
use rusqlite::Connection;

use crate::backend::{BackendError, TranslationRequest, Translator};
use crate::db::{execute, DbCatalog, ExecError, DEFAULT_STATEMENT_TIMEOUT};

pub const DEFAULT_PARALLELISM: usize = 4;

#[derive(Clone, Debug)]
pub struct EvalOptions {
    /// Run repair on each prediction before scoring.
    pub repair: bool,
    pub repair_options: RepairOptions,
    pub statement_timeout: Duration,
    pub parallelism: usize,
    pub ignore_values: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            repair: true,
            repair_options: RepairOptions::default(),
            statement_timeout: DEFAULT_STATEMENT_TIMEOUT,
            parallelism: DEFAULT_PARALLELISM,
            ignore_values: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{predictions} predictions for {pairs} pairs")]
    Alignment { pairs: usize, predictions: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("pair {index}: unknown database `{db_id}`")]
    UnknownDb { index: usize, db_id: String },
    #[error("pair {index}: {source}")]
    Backend { index: usize, source: BackendError },
}

/// Result rows are compared in order only when the gold query sorts them.
fn ordered(gold: &Query) -> bool {
    let mut q = gold;
    while let Some(op) = &q.set_op {
        q = &op.right;
    }
    !q.body.order_by.is_empty()
}

struct Worker<'a> {
    dbs: Option<&'a DbCatalog>,
    options: &'a EvalOptions,
    /// `None` caches a database that could not be opened.
    conns: HashMap<String, Option<Connection>>,
}

impl Worker<'_> {
    fn conn(&mut self, db_id: &str) -> Option<&Connection> {
        let dbs = self.dbs?;
        self.conns.entry(db_id.to_owned()).or_insert_with(|| dbs.open(db_id).ok()).as_ref()
    }

    fn verdict(&mut self, index: usize, pair: &QueryPair, prediction: &str, schema: &DbSchema) -> Verdict {
        let (sql, repaired) = if self.options.repair {
            let report = repair(prediction, schema, &self.options.repair_options);
            let repaired = report.status != RepairStatus::Clean && !report.edits.is_empty();
            (report.repaired_sql, repaired)
        } else {
            (prediction.to_owned(), false)
        };
        let forms = compare_forms(&pair.gold_sql, &sql, DecomposeOptions { ignore_values: self.options.ignore_values });
        let mut failure = (!forms.pred_parses).then_some(FailureReason::ParseError);
        let timeout = self.options.statement_timeout;
        let gold_order = parse(&pair.gold_sql).map(|q| ordered(&q)).unwrap_or(false);
        let execution = self.conn(&pair.db_id).and_then(|conn| {
            let gold = execute(conn, &pair.gold_sql, timeout).ok()?;
            Some(match execute(conn, &sql, timeout) {
                Ok(pred) => results_match(&gold, &pred, gold_order),
                Err(e) => {
                    failure.get_or_insert(match e {
                        ExecError::Timeout => FailureReason::Timeout,
                        ExecError::Sql(_) => FailureReason::ExecError,
                    });
                    false
                }
            })
        });
        Verdict {
            index,
            db_id: pair.db_id.clone(),
            sql,
            exact_string: forms.string,
            exact_component: forms.component,
            execution,
            repaired,
            failure_reason: failure,
        }
    }
}

/// Runs `job` over `0..n` on up to `parallelism` threads; results come back
/// in index order.
fn parallel_map<T: Send, E: Send, S>(
    n: usize,
    parallelism: usize,
    init: impl Fn() -> S + Sync,
    job: impl Fn(&mut S, usize) -> Result<T, E> + Sync,
) -> Result<Vec<T>, E> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T, E>>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..parallelism.clamp(1, n.max(1)) {
            scope.spawn(|| {
                let mut state = init();
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let out = job(&mut state, i);
                    slots.lock().expect("worker panicked")[i] = Some(out);
                }
            });
        }
    });
    slots.into_inner().expect("worker panicked").into_iter().map(|s| s.expect("every index visited")).collect()
}

fn schema_index(schemas: &[DbSchema]) -> BTreeMap<&str, &DbSchema> {
    schemas.iter().map(|s| (s.db_id(), s)).collect()
}

fn lookup<'s>(by_id: &BTreeMap<&str, &'s DbSchema>, index: usize, pair: &QueryPair) -> Result<&'s DbSchema, EvalError> {
    by_id.get(pair.db_id.as_str()).copied().ok_or_else(|| EvalError::UnknownDb { index, db_id: pair.db_id.clone() })
}

/// Scores `predictions[i]` against `pairs[i]`. Verdicts keep dataset order
/// whatever order workers finish in.
pub fn evaluate_corpus(
    pairs: &[QueryPair],
    predictions: &[String],
    schemas: &[DbSchema],
    dbs: Option<&DbCatalog>,
    options: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    if pairs.len() != predictions.len() {
        return Err(EvalError::Alignment { pairs: pairs.len(), predictions: predictions.len() });
    }
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    let by_id = schema_index(schemas);
    for (i, pair) in pairs.iter().enumerate() {
        lookup(&by_id, i, pair)?;
    }
    let verdicts = parallel_map(
        pairs.len(),
        options.parallelism,
        || Worker { dbs, options, conns: HashMap::new() },
        |worker, i| {
            let schema = lookup(&by_id, i, &pairs[i])?;
            Ok::<_, EvalError>(worker.verdict(i, &pairs[i], &predictions[i], schema))
        },
    )?;
    let label = TestLabel::for_splits(pairs.iter().map(|p| p.split));
    Ok(EvalReport::from_verdicts(label, options.repair, verdicts))
}

/// Raw backend output for every pair, in dataset order.
pub fn translate_all(
    backend: &dyn Translator,
    pairs: &[QueryPair],
    schemas: &[DbSchema],
    parallelism: usize,
) -> Result<Vec<String>, EvalError> {
    let by_id = schema_index(schemas);
    parallel_map(
        pairs.len(),
        parallelism,
        || (),
        |_, i| {
            let schema = lookup(&by_id, i, &pairs[i])?;
            let req = TranslationRequest::for_pair(i, &pairs[i], schema);
            backend.translate(&req).map(|r| r.sql).map_err(|source| EvalError::Backend { index: i, source })
        },
    )
}

/// Test 2: the test split evaluated together with the custom training pairs.
pub fn compose_test2(test: &[QueryPair], custom_train: &[QueryPair]) -> Vec<QueryPair> {
    test.iter().chain(custom_train.iter().filter(|p| p.split == nl2sql_core::dataset::Split::Train)).cloned().collect()
}
