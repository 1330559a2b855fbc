//! Question/SQL pairs, schema coverage, training assembly and the prompt
//! and TSV formats handed to an external trainer.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::schema::DbSchema;
use crate::sql::bind::{schema_references, SchemaReference};
use crate::sql::parse_detailed;

pub const DEFAULT_MIN_COVERAGE: u64 = 2;

/// First line of every training export.
pub const TSV_HEADER: &str = "# nl2sql-train v1 prompt=pipe";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn from_name(name: &str) -> Option<Split> {
        match name {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPair {
    pub question: String,
    pub gold_sql: String,
    pub db_id: String,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SchemaElement {
    pub db_id: String,
    pub table: String,
    /// `None` for the table itself.
    pub column: Option<String>,
}

impl fmt::Display for SchemaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.column {
            Some(c) => write!(f, "{}.{}", self.table, c),
            None => f.write_str(&self.table),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageEntry {
    #[serde(flatten)]
    pub element: SchemaElement,
    pub count: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_train: usize,
    pub n_test: usize,
    pub n_databases: usize,
    /// Every table and column of the schemas in play, with its number of
    /// references in parseable gold SQL.
    #[serde(with = "coverage_entries")]
    pub coverage: BTreeMap<SchemaElement, u64>,
    /// Pair indices whose gold SQL does not parse; excluded from coverage.
    pub unparseable: Vec<usize>,
}

mod coverage_entries {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<SchemaElement, u64>, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<CoverageEntry> =
            map.iter().map(|(element, &count)| CoverageEntry { element: element.clone(), count }).collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<SchemaElement, u64>, D::Error> {
        let entries = Vec::<CoverageEntry>::deserialize(d)?;
        Ok(entries.into_iter().map(|e| (e.element, e.count)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub stats: DatasetStats,
    pub min_coverage: u64,
    /// Elements referenced fewer than `min_coverage` times, in schema order.
    pub uncovered: Vec<SchemaElement>,
}

fn schema_elements(schema: &DbSchema) -> impl Iterator<Item = SchemaElement> + '_ {
    schema.tables().iter().flat_map(move |t| {
        let table = SchemaElement { db_id: schema.db_id().into(), table: t.name.clone(), column: None };
        let columns = t.columns.iter().map(move |c| SchemaElement {
            db_id: schema.db_id().into(),
            table: t.name.clone(),
            column: Some(c.name.clone()),
        });
        core::iter::once(table).chain(columns)
    })
}

/// Counts alias-resolved table and column references in gold SQL.
pub fn coverage_report(pairs: &[QueryPair], schemas: &[DbSchema], min_coverage: u64) -> CoverageReport {
    let by_id: BTreeMap<&str, &DbSchema> = schemas.iter().map(|s| (s.db_id(), s)).collect();
    let mut coverage: BTreeMap<SchemaElement, u64> = schemas.iter().flat_map(schema_elements).map(|e| (e, 0)).collect();
    let mut unparseable = Vec::new();
    for (index, pair) in pairs.iter().enumerate() {
        let Ok(parsed) = parse_detailed(&pair.gold_sql) else {
            unparseable.push(index);
            continue;
        };
        let Some(schema) = by_id.get(pair.db_id.as_str()) else { continue };
        for reference in schema_references(&parsed, schema) {
            let element = match reference {
                SchemaReference::Table(table) => SchemaElement { db_id: pair.db_id.clone(), table, column: None },
                SchemaReference::Column(c) => {
                    SchemaElement { db_id: pair.db_id.clone(), table: c.table, column: Some(c.column) }
                }
            };
            *coverage.entry(element).or_insert(0) += 1;
        }
    }
    let uncovered = schemas
        .iter()
        .flat_map(schema_elements)
        .filter(|e| coverage.get(e).copied().unwrap_or(0) < min_coverage)
        .collect();
    let n_train = pairs.iter().filter(|p| p.split == Split::Train).count();
    let stats =
        DatasetStats { n_train, n_test: pairs.len() - n_train, n_databases: schemas.len(), coverage, unparseable };
    CoverageReport { stats, min_coverage, uncovered }
}

pub fn dataset_stats(pairs: &[QueryPair], schemas: &[DbSchema]) -> DatasetStats {
    coverage_report(pairs, schemas, DEFAULT_MIN_COVERAGE).stats
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptOptions {
    /// Append the schema after the database id.
    pub include_schema: bool,
}

impl Default for PromptOptions {
    fn default() -> Self {
        PromptOptions { include_schema: true }
    }
}

fn push_escaped(out: &mut String, text: &str) {
    for ch in text.chars() {
        if ch == '|' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
}

/// `meters: id, location | readings: ...`
pub fn schema_segment(schema: &DbSchema) -> String {
    let mut out = String::new();
    for (i, table) in schema.tables().iter().enumerate() {
        if i > 0 {
            out.push_str(" | ");
        }
        push_escaped(&mut out, &table.name);
        out.push_str(": ");
        for (j, column) in table.columns.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            push_escaped(&mut out, &column.name);
        }
    }
    out
}

/// `translate to SQL: <question> | db: <db_id> | <table>: <col>, <col> | ...`
pub fn serialize_prompt_with(question: &str, schema: &DbSchema, options: PromptOptions) -> String {
    let mut out = String::from("translate to SQL: ");
    push_escaped(&mut out, question);
    out.push_str(" | db: ");
    push_escaped(&mut out, schema.db_id());
    if options.include_schema && !schema.tables().is_empty() {
        out.push_str(" | ");
        out.push_str(&schema_segment(schema));
    }
    out
}

pub fn serialize_prompt(pair: &QueryPair, schema: &DbSchema) -> String {
    serialize_prompt_with(&pair.question, schema, PromptOptions::default())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub source: String,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("pair {index}: unknown database `{db_id}`")]
    UnknownDb { index: usize, db_id: String },
    #[error("line {line}: {message}")]
    Tsv { line: usize, message: &'static str },
}

/// Training pairs of `spider` followed by those of `custom`, each turned
/// into a prompt/target example. Test pairs are skipped.
pub fn assemble_training(
    spider: &[QueryPair],
    custom: &[QueryPair],
    schemas: &[DbSchema],
    options: PromptOptions,
) -> Result<Vec<TrainingExample>, DatasetError> {
    let by_id: BTreeMap<&str, &DbSchema> = schemas.iter().map(|s| (s.db_id(), s)).collect();
    spider
        .iter()
        .chain(custom)
        .enumerate()
        .filter(|(_, p)| p.split == Split::Train)
        .map(|(index, pair)| {
            let schema = by_id
                .get(pair.db_id.as_str())
                .ok_or_else(|| DatasetError::UnknownDb { index, db_id: pair.db_id.clone() })?;
            Ok(TrainingExample {
                source: serialize_prompt_with(&pair.question, schema, options),
                target: pair.gold_sql.clone(),
            })
        })
        .collect()
}

pub fn escape_tsv_field(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    for ch in field.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(ch),
        }
    }
    out
}

pub fn unescape_tsv_field(field: &str) -> Option<String> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

pub fn training_tsv(examples: &[TrainingExample]) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for ex in examples {
        out.push_str(&escape_tsv_field(&ex.source));
        out.push('\t');
        out.push_str(&escape_tsv_field(&ex.target));
        out.push('\n');
    }
    out
}

pub fn parse_training_tsv(text: &str) -> Result<Vec<TrainingExample>, DatasetError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TSV_HEADER => {}
        _ => return Err(DatasetError::Tsv { line: 1, message: "missing header" }),
    }
    lines
        .map(|(i, line)| {
            let err = |message| DatasetError::Tsv { line: i + 1, message };
            let (source, target) = line.split_once('\t').ok_or_else(|| err("expected two fields"))?;
            if target.contains('\t') {
                return Err(err("expected two fields"));
            }
            Ok(TrainingExample {
                source: unescape_tsv_field(source).ok_or_else(|| err("bad escape"))?,
                target: unescape_tsv_field(target).ok_or_else(|| err("bad escape"))?,
            })
        })
        .collect()
}
