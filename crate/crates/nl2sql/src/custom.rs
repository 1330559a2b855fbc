//! Line-oriented files: custom datasets (`{question, sql, split}` per line)
//! and prediction replay files (`{index, sql}` per line, or bare SQL).

use std::path::Path;

use nl2sql_core::dataset::{dataset_stats, DatasetStats, QueryPair, Split};
use nl2sql_core::DbSchema;
use serde::{Deserialize, Serialize};

use crate::spider::{read, IngestError};

#[derive(Deserialize)]
struct CustomLine {
    question: Option<String>,
    sql: Option<String>,
    split: Option<String>,
}

#[derive(Serialize)]
struct CustomLineOut<'a> {
    question: &'a str,
    sql: &'a str,
    split: &'a str,
}

pub fn parse_custom(text: &str, path: &Path, schema: &DbSchema) -> Result<Vec<QueryPair>, IngestError> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| IngestError::Line { path: path.into(), line: i + 1, message };
        let raw: CustomLine = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let field = |value: Option<String>, name: &str| match value {
            Some(v) if !v.trim().is_empty() => Ok(v),
            _ => Err(err(format!("missing field `{name}`"))),
        };
        let question = field(raw.question, "question")?;
        let gold_sql = field(raw.sql, "sql")?;
        let split_name = field(raw.split, "split")?;
        let split = Split::from_name(&split_name).ok_or_else(|| err(format!("unknown split `{split_name}`")))?;
        pairs.push(QueryPair { question, gold_sql, db_id: schema.db_id().into(), split });
    }
    Ok(pairs)
}

/// Pairs of a custom dataset, bound to `schema`. Gold SQL that does not
/// parse is kept and listed in `stats.unparseable`.
pub fn ingest_custom(path: &Path, schema: &DbSchema) -> Result<(Vec<QueryPair>, DatasetStats), IngestError> {
    let pairs = parse_custom(&read(path)?, path, schema)?;
    let stats = dataset_stats(&pairs, std::slice::from_ref(schema));
    Ok((pairs, stats))
}

pub fn write_custom_jsonl(pairs: &[QueryPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let line = CustomLineOut { question: &p.question, sql: &p.gold_sql, split: p.split.as_str() };
        out.push_str(&serde_json::to_string(&line).expect("plain strings serialize"));
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
struct PredictionLine {
    index: usize,
    sql: String,
}

/// Predictions in dataset order. JSON lines must cover indices `0..n`
/// exactly once; in plain text, line `i` (from 0) is prediction `i`.
pub fn parse_predictions(text: &str, path: &Path) -> Result<Vec<String>, IngestError> {
    let json = text.lines().find(|l| !l.trim().is_empty()).is_some_and(|l| l.trim_start().starts_with('{'));
    if !json {
        return Ok(text.lines().map(|l| l.trim_end_matches('\r').to_owned()).collect());
    }
    let mut slots: Vec<Option<String>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| IngestError::Line { path: path.into(), line: i + 1, message };
        let p: PredictionLine = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if p.index >= slots.len() {
            slots.resize(p.index + 1, None);
        }
        if slots[p.index].replace(p.sql).is_some() {
            return Err(err(format!("index {} appears twice", p.index)));
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| IngestError::Line {
                path: path.into(),
                line: 0,
                message: format!("no prediction for index {i}"),
            })
        })
        .collect()
}

pub fn load_predictions(path: &Path) -> Result<Vec<String>, IngestError> {
    parse_predictions(&read(path)?, path)
}

pub fn write_predictions_jsonl(predictions: &[String]) -> String {
    let mut out = String::new();
    for (index, sql) in predictions.iter().enumerate() {
        out.push_str(
            &serde_json::to_string(&PredictionLine { index, sql: sql.clone() }).expect("plain strings serialize"),
        );
        out.push('\n');
    }
    out
}
