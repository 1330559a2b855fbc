//! The `nl2sql` command line. Flags override the config file.
//!
//! Exit codes: 0 success, 1 quality gate failed (coverage below threshold),
//! 2 usage or IO error.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nl2sql_core::dataset::{
    assemble_training, coverage_report, dataset_stats, training_tsv, PromptOptions, QueryPair, Split,
};
use nl2sql_core::metrics::EvalReport;
use nl2sql_core::repair::{repair, RepairOptions, DEFAULT_THRESHOLD};
use nl2sql_core::schema::parse_flat;
use nl2sql_core::{DbSchema, Ratio};
use serde::Deserialize;

use crate::backend::{
    serve_mock, BaselineBackend, HttpBackend, ReplayBackend, TranslationRequest, Translator, DEFAULT_TIMEOUT,
};
use crate::config::{BackendKind, Config};
use crate::corrupt::{generate_corruptions, parse_query_corpus};
use crate::custom::{ingest_custom, load_predictions, write_predictions_jsonl};
use crate::db::{DbCatalog, DEFAULT_STATEMENT_TIMEOUT};
use crate::evaluate::{compose_test2, evaluate_corpus, translate_all, EvalOptions, DEFAULT_PARALLELISM};
use crate::repl::Session;
use crate::spider::{load_spider_pairs, load_spider_tables};

pub const EXIT_OK: u8 = 0;
pub const EXIT_GATE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "nl2sql", version, about = "Dataset, repair and evaluation tools for natural-language-to-SQL models")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn on(self) -> bool {
        self == Toggle::On
    }
}

#[derive(Debug, Default, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Flat schema file; repeatable.
    #[arg(long = "schema", global = true)]
    pub schemas: Vec<PathBuf>,
    /// Spider `tables.json`.
    #[arg(long, global = true)]
    pub spider_tables: Option<PathBuf>,
    /// Spider training file; repeatable.
    #[arg(long, global = true)]
    pub spider_train: Vec<PathBuf>,
    /// Spider dev file, used as the test split.
    #[arg(long, global = true)]
    pub spider_dev: Option<PathBuf>,
    /// Custom JSON-lines dataset.
    #[arg(long, global = true)]
    pub custom: Option<PathBuf>,
    /// Database of the custom dataset; defaults to the only loaded schema.
    #[arg(long, global = true)]
    pub custom_db: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,
    #[arg(long, global = true, env = "NL2SQL_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Prediction replay file.
    #[arg(long, global = true)]
    pub predictions: Option<PathBuf>,
    #[arg(long, global = true)]
    pub repair_threshold: Option<usize>,
    /// Also move qualifiers to the table that owns the column.
    #[arg(long, global = true)]
    pub repair_qualifiers: bool,
    #[arg(long, global = true)]
    pub min_coverage: Option<u64>,
    /// Include the schema in training prompts.
    #[arg(long, global = true, value_enum)]
    pub prompt_schema: Option<Toggle>,
    /// Directory of SQLite databases or `.sql` seed scripts.
    #[arg(long, global = true)]
    pub databases: Option<PathBuf>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub parallelism: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the datasets and print their statistics.
    Ingest {
        /// Write statistics as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count schema references in the training pairs; exit 1 if anything is
    /// referenced fewer than `--min-coverage` times.
    Coverage {
        /// Count test pairs too.
        #[arg(long)]
        all_splits: bool,
        #[arg(long)]
        json: bool,
    },
    /// Write prompt/target training examples as TSV.
    PrepareTrain {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate one question, or dump raw predictions for the evaluation set.
    Translate {
        #[arg(long)]
        question: Option<String>,
        #[arg(long)]
        db: Option<String>,
        /// Repair the single-question output.
        #[arg(long)]
        repair: bool,
        /// Evaluation set is Test 2 (test plus custom training pairs).
        #[arg(long)]
        with_train: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repair SQL against a schema; reads stdin lines without an argument.
    Repair {
        sql: Option<String>,
        #[arg(long)]
        db: Option<String>,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Score predictions against gold SQL.
    Evaluate {
        #[arg(long, value_enum)]
        repair: Option<Toggle>,
        /// Run with repair off and on and print the difference.
        #[arg(long)]
        compare_repair: bool,
        /// JSON report path.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        with_train: bool,
        /// Compare literal values as placeholders.
        #[arg(long)]
        ignore_values: bool,
    },
    /// Serve canned translations over the HTTP protocol.
    ServeMock {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// JSON lines of `{"question", "sql"}`.
        #[arg(long)]
        canned: Option<PathBuf>,
        /// Answer for questions not in the table.
        #[arg(long)]
        default_sql: Option<String>,
    },
    /// Ask questions interactively; `\q` quits.
    Repl {
        #[arg(long)]
        db: Option<String>,
        #[arg(long)]
        no_execute: bool,
    },
    /// Generate single-identifier corruptions of a query corpus.
    Corrupt {
        /// `db_id<TAB>sql` lines.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Score the corruptions with repair off and on.
        #[arg(long)]
        compare_repair: bool,
    },
}

/// Config file merged with flags.
#[derive(Clone, Debug)]
pub struct Settings {
    pub schema_files: Vec<PathBuf>,
    pub spider_tables: Option<PathBuf>,
    pub spider_train: Vec<PathBuf>,
    pub spider_dev: Option<PathBuf>,
    pub custom: Option<PathBuf>,
    pub custom_db: Option<String>,
    pub min_coverage: u64,
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    pub predictions: Option<PathBuf>,
    pub http_timeout: Duration,
    pub repair_enabled: bool,
    pub repair: RepairOptions,
    pub prompt: PromptOptions,
    pub databases: Option<PathBuf>,
    pub statement_timeout: Duration,
    pub parallelism: usize,
    pub ignore_values: bool,
    pub report: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(args: &GlobalArgs) -> Result<Settings> {
        let config = match &args.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        let mut schema_files = config.schema.flat;
        schema_files.extend(args.schemas.iter().cloned());
        let spider_train =
            if args.spider_train.is_empty() { config.dataset.spider_train } else { args.spider_train.clone() };
        let predictions = args.predictions.clone().or(config.backend.predictions);
        let endpoint = args.endpoint.clone().or(config.backend.endpoint);
        let backend = args.backend.or(config.backend.kind).unwrap_or(if predictions.is_some() {
            BackendKind::Replay
        } else if endpoint.is_some() {
            BackendKind::Http
        } else {
            BackendKind::Baseline
        });
        Ok(Settings {
            schema_files,
            spider_tables: args.spider_tables.clone().or(config.schema.spider_tables),
            spider_train,
            spider_dev: args.spider_dev.clone().or(config.dataset.spider_dev),
            custom: args.custom.clone().or(config.dataset.custom),
            custom_db: args.custom_db.clone().or(config.dataset.custom_db),
            min_coverage: args
                .min_coverage
                .or(config.dataset.min_coverage)
                .unwrap_or(nl2sql_core::dataset::DEFAULT_MIN_COVERAGE),
            backend,
            endpoint,
            predictions,
            http_timeout: config.backend.timeout_secs.map_or(DEFAULT_TIMEOUT, Duration::from_secs),
            repair_enabled: config.repair.enabled.unwrap_or(true),
            repair: RepairOptions {
                threshold: args.repair_threshold.or(config.repair.threshold).unwrap_or(DEFAULT_THRESHOLD),
                repair_qualifiers: args.repair_qualifiers || config.repair.qualifiers.unwrap_or(false),
            },
            prompt: PromptOptions {
                include_schema: args.prompt_schema.map(Toggle::on).or(config.prompt.schema).unwrap_or(true),
            },
            databases: args.databases.clone().or(config.evaluate.databases),
            statement_timeout: config
                .evaluate
                .statement_timeout_ms
                .map_or(DEFAULT_STATEMENT_TIMEOUT, Duration::from_millis),
            parallelism: args
                .parallelism
                .map(|p| p as usize)
                .or(config.evaluate.parallelism)
                .unwrap_or(DEFAULT_PARALLELISM),
            ignore_values: config.evaluate.ignore_values.unwrap_or(false),
            report: config.evaluate.report,
        })
    }

    pub fn schemas(&self) -> Result<Vec<DbSchema>> {
        let mut schemas = Vec::new();
        for path in &self.schema_files {
            let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
            schemas.push(parse_flat(&text).with_context(|| format!("{}", path.display()))?);
        }
        if let Some(path) = &self.spider_tables {
            schemas.extend(load_spider_tables(path)?);
        }
        if schemas.is_empty() {
            bail!("no schema given; use --schema or --spider-tables");
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &schemas {
            if !seen.insert(s.db_id()) {
                bail!("database `{}` is defined twice", s.db_id());
            }
        }
        Ok(schemas)
    }

    /// The schema named by `db`, or the only one loaded.
    pub fn pick<'s>(&self, schemas: &'s [DbSchema], db: Option<&str>) -> Result<&'s DbSchema> {
        match db {
            Some(id) => schemas.iter().find(|s| s.db_id() == id).ok_or_else(|| anyhow!("unknown database `{id}`")),
            None if schemas.len() == 1 => Ok(&schemas[0]),
            None => bail!("{} schemas loaded; name one with --db", schemas.len()),
        }
    }

    /// Spider pairs and custom pairs, separately.
    pub fn pairs(&self, schemas: &[DbSchema]) -> Result<(Vec<QueryPair>, Vec<QueryPair>)> {
        let mut spider = Vec::new();
        for path in &self.spider_train {
            spider.extend(load_spider_pairs(path, Split::Train, schemas)?);
        }
        if let Some(path) = &self.spider_dev {
            spider.extend(load_spider_pairs(path, Split::Test, schemas)?);
        }
        let custom = match &self.custom {
            Some(path) => {
                let schema = self.pick(schemas, self.custom_db.as_deref()).context("custom dataset")?;
                ingest_custom(path, schema)?.0
            }
            None => Vec::new(),
        };
        if spider.is_empty() && custom.is_empty() {
            bail!("no dataset given; use --spider-train/--spider-dev or --custom");
        }
        Ok((spider, custom))
    }

    /// Test 1 is every test pair; Test 2 adds the custom training pairs.
    pub fn evaluation_pairs(&self, schemas: &[DbSchema], with_train: bool) -> Result<Vec<QueryPair>> {
        let (spider, custom) = self.pairs(schemas)?;
        let test: Vec<QueryPair> = spider.iter().chain(&custom).filter(|p| p.split == Split::Test).cloned().collect();
        Ok(if with_train { compose_test2(&test, &custom) } else { test })
    }

    pub fn backend(&self, schemas: &[DbSchema]) -> Result<Box<dyn Translator>> {
        Ok(match self.backend {
            BackendKind::Replay => {
                let path = self.predictions.as_ref().ok_or_else(|| anyhow!("replay backend needs --predictions"))?;
                Box::new(ReplayBackend::new(load_predictions(path)?))
            }
            BackendKind::Http => {
                let endpoint = self
                    .endpoint
                    .as_ref()
                    .ok_or_else(|| anyhow!("http backend needs --endpoint or NL2SQL_ENDPOINT"))?;
                Box::new(HttpBackend::new(endpoint, self.http_timeout))
            }
            BackendKind::Baseline => Box::new(BaselineBackend::new(schemas.iter().cloned())),
        })
    }

    fn catalog(&self) -> Option<DbCatalog> {
        self.databases.as_ref().map(DbCatalog::new)
    }

    fn eval_options(&self, repair: bool, ignore_values: bool) -> EvalOptions {
        EvalOptions {
            repair,
            repair_options: self.repair,
            statement_timeout: self.statement_timeout,
            parallelism: self.parallelism,
            ignore_values: ignore_values || self.ignore_values,
        }
    }

    /// Raw predictions for `pairs`: the replay file as is, or one backend
    /// call per pair.
    pub fn predictions_for(&self, pairs: &[QueryPair], schemas: &[DbSchema]) -> Result<Vec<String>> {
        if self.backend == BackendKind::Replay {
            let path = self.predictions.as_ref().ok_or_else(|| anyhow!("replay backend needs --predictions"))?;
            return Ok(load_predictions(path)?);
        }
        let backend = self.backend(schemas)?;
        Ok(translate_all(backend.as_ref(), pairs, schemas, self.parallelism)?)
    }
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("{}", p.display())),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Summary, failure counts and one row per pair.
pub fn render_report(report: &EvalReport) -> String {
    let mut s = format!(
        "label={} repair={}\n{}\n",
        report.test_label.as_str(),
        if report.repair { "on" } else { "off" },
        report.summary_line()
    );
    if !report.failures.is_empty() {
        let failures: Vec<String> = report.failures.iter().map(|(r, n)| format!("{}={n}", r.as_str())).collect();
        s += &format!("failures: {}\n", failures.join(" "));
    }
    s += "index | db | string | component | exec | repaired | failure\n";
    for v in &report.verdicts {
        s += &format!(
            "{} | {} | {} | {} | {} | {} | {}\n",
            v.index,
            v.db_id,
            yes_no(v.exact_string),
            yes_no(v.exact_component),
            v.execution.map_or("-", yes_no),
            yes_no(v.repaired),
            v.failure_reason.map_or("-", |r| r.as_str()),
        );
    }
    s
}

fn delta(name: &str, off: Ratio, on: Ratio) -> String {
    format!("{name} {off} -> {on} ({:+})", on.num as i64 - off.num as i64)
}

/// `repair delta: exact(string) 6/20 -> 8/20 (+2) ...`
pub fn repair_delta(off: &EvalReport, on: &EvalReport) -> String {
    format!(
        "repair delta: {} {} {}",
        delta("exact(string)", off.exact_match_string, on.exact_match_string),
        delta("exact(component)", off.exact_match_component, on.exact_match_component),
        delta("exec", off.execution_accuracy, on.execution_accuracy),
    )
}

fn compare_repair(
    settings: &Settings,
    pairs: &[QueryPair],
    predictions: &[String],
    schemas: &[DbSchema],
    ignore_values: bool,
    out: &mut dyn Write,
) -> Result<(EvalReport, EvalReport)> {
    let dbs = settings.catalog();
    let off = evaluate_corpus(pairs, predictions, schemas, dbs.as_ref(), &settings.eval_options(false, ignore_values))?;
    let on = evaluate_corpus(pairs, predictions, schemas, dbs.as_ref(), &settings.eval_options(true, ignore_values))?;
    writeln!(out, "repair=off {}", off.summary_line())?;
    writeln!(out, "repair=on {}", on.summary_line())?;
    writeln!(out, "{}", repair_delta(&off, &on))?;
    Ok((off, on))
}

#[derive(Deserialize)]
struct CannedLine {
    question: String,
    sql: String,
}

fn load_canned(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    let mut canned = HashMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let c: CannedLine =
            serde_json::from_str(line).with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        canned.insert(c.question, c.sql);
    }
    Ok(canned)
}

/// Runs one command, writing its normal output to `out`. Errors map to
/// exit code 2.
pub fn run(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<u8> {
    let settings = Settings::resolve(&cli.global)?;
    match cli.command {
        Command::Ingest { out: path } => {
            let schemas = settings.schemas()?;
            let (spider, custom) = settings.pairs(&schemas)?;
            let pairs: Vec<QueryPair> = spider.into_iter().chain(custom).collect();
            let stats = dataset_stats(&pairs, &schemas);
            writeln!(
                out,
                "train={} test={} databases={} unparseable={}",
                stats.n_train,
                stats.n_test,
                stats.n_databases,
                stats.unparseable.len()
            )?;
            if let Some(path) = path {
                std::fs::write(&path, serde_json::to_string_pretty(&stats)?)
                    .with_context(|| format!("{}", path.display()))?;
            }
            Ok(EXIT_OK)
        }
        Command::Coverage { all_splits, json } => {
            let schemas = settings.schemas()?;
            let (spider, custom) = settings.pairs(&schemas)?;
            let pairs: Vec<QueryPair> =
                spider.into_iter().chain(custom).filter(|p| all_splits || p.split == Split::Train).collect();
            let report = coverage_report(&pairs, &schemas, settings.min_coverage);
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            } else {
                for (element, count) in &report.stats.coverage {
                    writeln!(out, "{} {} {count}", element.db_id, element)?;
                }
                writeln!(out, "uncovered: {} below {}", report.uncovered.len(), report.min_coverage)?;
                for e in &report.uncovered {
                    writeln!(out, "  {} {}", e.db_id, e)?;
                }
            }
            Ok(if report.uncovered.is_empty() { EXIT_OK } else { EXIT_GATE })
        }
        Command::PrepareTrain { out: path } => {
            let schemas = settings.schemas()?;
            let (spider, custom) = settings.pairs(&schemas)?;
            let examples = assemble_training(&spider, &custom, &schemas, settings.prompt)?;
            write_output(path.as_deref(), &training_tsv(&examples), out)?;
            if path.is_some() {
                writeln!(out, "{} examples", examples.len())?;
            }
            Ok(EXIT_OK)
        }
        Command::Translate { question: Some(question), db, repair: fix, .. } => {
            let schemas = settings.schemas()?;
            let schema = settings.pick(&schemas, db.as_deref())?;
            let backend = settings.backend(&schemas)?;
            let response = backend.translate(&TranslationRequest::new(&question, schema))?;
            let sql = if fix { repair(&response.sql, schema, &settings.repair).repaired_sql } else { response.sql };
            writeln!(out, "{sql}")?;
            Ok(EXIT_OK)
        }
        Command::Translate { question: None, with_train, out: path, .. } => {
            let schemas = settings.schemas()?;
            let pairs = settings.evaluation_pairs(&schemas, with_train)?;
            let backend = settings.backend(&schemas)?;
            let predictions = translate_all(backend.as_ref(), &pairs, &schemas, settings.parallelism)?;
            write_output(path.as_deref(), &write_predictions_jsonl(&predictions), out)?;
            Ok(EXIT_OK)
        }
        Command::Repair { sql, db, json } => {
            let schemas = settings.schemas()?;
            let schema = settings.pick(&schemas, db.as_deref())?;
            let lines: Vec<String> = match sql {
                Some(s) => vec![s],
                None => input.lines().collect::<io::Result<_>>()?,
            };
            for line in lines.iter().filter(|l| !l.trim().is_empty()) {
                let report = repair(line, schema, &settings.repair);
                if json {
                    writeln!(out, "{}", serde_json::to_string(&report)?)?;
                } else {
                    writeln!(out, "{}", report.repaired_sql)?;
                    for e in &report.edits {
                        eprintln!("edit: {} -> {} (distance {})", e.original, e.replacement, e.distance);
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Evaluate { repair: toggle, compare_repair: compare, report, with_train, ignore_values } => {
            let schemas = settings.schemas()?;
            let pairs = settings.evaluation_pairs(&schemas, with_train)?;
            if pairs.is_empty() {
                bail!("evaluation set is empty");
            }
            let predictions = settings.predictions_for(&pairs, &schemas)?;
            let report_path = report.or(settings.report.clone());
            let result = if compare {
                compare_repair(&settings, &pairs, &predictions, &schemas, ignore_values, out)?.1
            } else {
                let repair_on = toggle.map_or(settings.repair_enabled, Toggle::on);
                let options = settings.eval_options(repair_on, ignore_values);
                let result = evaluate_corpus(&pairs, &predictions, &schemas, settings.catalog().as_ref(), &options)?;
                write!(out, "{}", render_report(&result))?;
                result
            };
            if let Some(path) = report_path {
                std::fs::write(&path, serde_json::to_string_pretty(&result)?)
                    .with_context(|| format!("{}", path.display()))?;
            }
            Ok(EXIT_OK)
        }
        Command::ServeMock { port, canned, default_sql } => {
            let canned = canned.as_deref().map(load_canned).transpose()?.unwrap_or_default();
            let server = serve_mock(port, canned, default_sql)?;
            writeln!(out, "listening on {}", server.url())?;
            out.flush()?;
            server.join();
            Ok(EXIT_OK)
        }
        Command::Repl { db, no_execute } => {
            let schemas = settings.schemas()?;
            let schema = settings.pick(&schemas, db.as_deref())?;
            let backend = settings.backend(&schemas)?;
            let conn = match settings.catalog() {
                Some(c) if !no_execute => Some(c.open(schema.db_id())?),
                _ => None,
            };
            let session = Session {
                backend: backend.as_ref(),
                schema,
                repair: settings.repair_enabled.then_some(settings.repair),
                conn,
                statement_timeout: settings.statement_timeout,
            };
            session.run(input, out)?;
            Ok(EXIT_OK)
        }
        Command::Corrupt { corpus, count, seed, out: path, compare_repair: compare } => {
            let schemas = settings.schemas()?;
            let text = std::fs::read_to_string(&corpus).with_context(|| format!("{}", corpus.display()))?;
            let queries = parse_query_corpus(&text)
                .map_err(|line| anyhow!("{}: line {line}: expected db_id<TAB>sql", corpus.display()))?;
            let corruptions = generate_corruptions(&queries, &schemas, count, settings.repair.threshold, seed);
            let mut jsonl = String::new();
            for c in &corruptions {
                jsonl += &serde_json::to_string(c)?;
                jsonl.push('\n');
            }
            if compare {
                if let Some(p) = &path {
                    std::fs::write(p, &jsonl).with_context(|| format!("{}", p.display()))?;
                }
                let pairs: Vec<QueryPair> = corruptions
                    .iter()
                    .map(|c| QueryPair {
                        question: String::new(),
                        gold_sql: c.original_sql.clone(),
                        db_id: c.db_id.clone(),
                        split: Split::Test,
                    })
                    .collect();
                let predictions: Vec<String> = corruptions.iter().map(|c| c.corrupted_sql.clone()).collect();
                compare_repair(&settings, &pairs, &predictions, &schemas, false, out)?;
            } else {
                write_output(path.as_deref(), &jsonl, out)?;
            }
            if corruptions.len() < count {
                eprintln!("only {} of {count} corruptions found", corruptions.len());
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with(args: impl IntoIterator<Item = String>, input: &mut dyn BufRead, out: &mut dyn Write) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli, input, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}
