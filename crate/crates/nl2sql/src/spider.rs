//! Spider benchmark files: `tables.json`, `train_spider.json`, `dev.json`.

use std::fs;
use std::path::{Path, PathBuf};

use nl2sql_core::dataset::{dataset_stats, DatasetStats, QueryPair, Split};
use nl2sql_core::schema::{Column, ColumnRef, ColumnType, DbSchema, SchemaError, Table};
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: invalid JSON at byte {offset}: {message}", path.display())]
    Json { path: PathBuf, offset: usize, message: String },
    #[error("schema `{db_id}`: {message}")]
    Schema { db_id: String, message: String },
    #[error("{}: record {index}: missing field `{field}`", path.display())]
    MissingField { path: PathBuf, index: usize, field: &'static str },
    #[error("{}: record {index}: unknown database `{db_id}`", path.display())]
    UnknownDb { path: PathBuf, index: usize, db_id: String },
    #[error("{}: line {line}: {message}", path.display())]
    Line { path: PathBuf, line: usize, message: String },
}

pub(crate) fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.into(), source })
}

/// Byte offset of a serde_json error, from its 1-based line and column.
pub(crate) fn byte_offset(text: &str, err: &serde_json::Error) -> usize {
    let line_start: usize = text.split_inclusive('\n').take(err.line().saturating_sub(1)).map(str::len).sum();
    (line_start + err.column().saturating_sub(1)).min(text.len())
}

fn json_error(path: &Path, text: &str, err: serde_json::Error) -> IngestError {
    IngestError::Json { path: path.into(), offset: byte_offset(text, &err), message: err.to_string() }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PrimaryKey {
    Single(usize),
    Composite(Vec<usize>),
}

#[derive(Deserialize)]
struct RawSchema {
    db_id: String,
    table_names_original: Vec<String>,
    column_names_original: Vec<(i64, String)>,
    column_types: Vec<String>,
    #[serde(default)]
    primary_keys: Vec<PrimaryKey>,
    #[serde(default)]
    foreign_keys: Vec<(usize, usize)>,
}

fn build_schema(raw: RawSchema) -> Result<DbSchema, IngestError> {
    let db_id = raw.db_id;
    let schema_err = |message: String| IngestError::Schema { db_id: db_id.clone(), message };
    if raw.column_types.len() != raw.column_names_original.len() {
        return Err(schema_err("column_types and column_names_original differ in length".into()));
    }
    let mut tables: Vec<Table> = raw.table_names_original.iter().map(|n| Table::new(n.clone(), Vec::new())).collect();
    // column index -> reference, None for the `*` sentinel
    let mut refs: Vec<Option<ColumnRef>> = Vec::with_capacity(raw.column_names_original.len());
    for ((table_index, name), col_type) in raw.column_names_original.iter().zip(&raw.column_types) {
        if *table_index < 0 {
            refs.push(None);
            continue;
        }
        let table = tables
            .get_mut(*table_index as usize)
            .ok_or_else(|| schema_err(format!("column `{name}` names table index {table_index}")))?;
        table.columns.push(Column::new(name.clone(), ColumnType::from_spider(col_type)));
        refs.push(Some(ColumnRef::new(table.name.clone(), name.clone())));
    }
    let resolve = |i: usize| -> Result<ColumnRef, IngestError> {
        refs.get(i).cloned().flatten().ok_or_else(|| schema_err(format!("key references column index {i}")))
    };
    let mut pks = Vec::new();
    for pk in &raw.primary_keys {
        match pk {
            PrimaryKey::Single(i) => pks.push(resolve(*i)?),
            PrimaryKey::Composite(is) => {
                for i in is {
                    pks.push(resolve(*i)?);
                }
            }
        }
    }
    let fks = raw.foreign_keys.iter().map(|&(a, b)| Ok((resolve(a)?, resolve(b)?))).collect::<Result<Vec<_>, _>>()?;
    DbSchema::new(db_id.clone(), tables, fks, pks).map_err(|e: SchemaError| schema_err(e.to_string()))
}

pub fn parse_spider_tables(text: &str, path: &Path) -> Result<Vec<DbSchema>, IngestError> {
    let raw: Vec<RawSchema> = serde_json::from_str(text).map_err(|e| json_error(path, text, e))?;
    raw.into_iter().map(build_schema).collect()
}

pub fn load_spider_tables(path: &Path) -> Result<Vec<DbSchema>, IngestError> {
    parse_spider_tables(&read(path)?, path)
}

fn string_field(record: &Value, field: &'static str, path: &Path, index: usize) -> Result<String, IngestError> {
    match record.get(field).and_then(Value::as_str) {
        Some(s) if !s.trim().is_empty() => Ok(s.to_owned()),
        _ => Err(IngestError::MissingField { path: path.into(), index, field }),
    }
}

/// Question/query records of one Spider split file.
pub fn load_spider_pairs(path: &Path, split: Split, schemas: &[DbSchema]) -> Result<Vec<QueryPair>, IngestError> {
    let text = read(path)?;
    let records: Vec<Value> = serde_json::from_str(&text).map_err(|e| json_error(path, &text, e))?;
    records
        .iter()
        .enumerate()
        .map(|(index, record)| {
            let db_id = string_field(record, "db_id", path, index)?;
            if !schemas.iter().any(|s| s.db_id() == db_id) {
                return Err(IngestError::UnknownDb { path: path.into(), index, db_id });
            }
            Ok(QueryPair {
                question: string_field(record, "question", path, index)?,
                gold_sql: string_field(record, "query", path, index)?,
                db_id,
                split,
            })
        })
        .collect()
}

#[derive(Debug)]
pub struct SpiderData {
    pub schemas: Vec<DbSchema>,
    pub pairs: Vec<QueryPair>,
    pub stats: DatasetStats,
}

/// Loads every train file (Spider ships two), then the dev file as the
/// test split.
pub fn ingest_spider(train: &[PathBuf], dev: &Path, tables: &Path) -> Result<SpiderData, IngestError> {
    let schemas = load_spider_tables(tables)?;
    let mut pairs = Vec::new();
    for path in train {
        pairs.extend(load_spider_pairs(path, Split::Train, &schemas)?);
    }
    pairs.extend(load_spider_pairs(dev, Split::Test, &schemas)?);
    let stats = dataset_stats(&pairs, &schemas);
    Ok(SpiderData { schemas, pairs, stats })
}
