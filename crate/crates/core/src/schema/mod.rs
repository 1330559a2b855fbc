//! Database schema model and the name lookups the repair engine relies on.

mod flat;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use flat::{parse_flat, render_flat};

/// Column type, mirroring Spider's `column_types` vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Text,
    Number,
    Time,
    Boolean,
    Other,
}

impl ColumnType {
    /// Maps a Spider type string; anything unrecognized becomes `Other`.
    pub fn from_spider(name: &str) -> Self {
        match name.to_ascii_lowercase().as_str() {
            "text" => ColumnType::Text,
            "number" => ColumnType::Number,
            "time" => ColumnType::Time,
            "boolean" => ColumnType::Boolean,
            _ => ColumnType::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ColumnType::Text => "text",
            ColumnType::Number => "number",
            ColumnType::Time => "time",
            ColumnType::Boolean => "boolean",
            ColumnType::Other => "other",
        }
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub col_type: ColumnType,
}

impl Column {
    pub fn new(name: impl Into<String>, col_type: ColumnType) -> Self {
        Column { name: name.into(), col_type }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Table { name: name.into(), columns }
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| names_eq(&c.name, name))
    }
}

/// A `table.column` reference, stored in the schema's casing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef { table: table.into(), column: column.into() }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("{db_id}: table with empty name")]
    EmptyTableName { db_id: String },
    #[error("{db_id}: table `{table}` has no columns")]
    NoColumns { db_id: String, table: String },
    #[error("{db_id}: column with empty name in table `{table}`")]
    EmptyColumnName { db_id: String, table: String },
    #[error("{db_id}: duplicate table `{table}`")]
    DuplicateTable { db_id: String, table: String },
    #[error("{db_id}: duplicate column `{column}` in table `{table}`")]
    DuplicateColumn { db_id: String, table: String, column: String },
    #[error("{db_id}: key references unknown column `{reference}`")]
    DanglingKey { db_id: String, reference: String },
    #[error("line {line}: {message}")]
    Flat { line: usize, message: String },
}

/// Tables, columns and keys of one database. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbSchema {
    db_id: String,
    tables: Vec<Table>,
    foreign_keys: Vec<(ColumnRef, ColumnRef)>,
    primary_keys: Vec<ColumnRef>,
}

/// Outcome of a case-insensitive name lookup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Resolution {
    Unknown,
    Table(String),
    /// Every table owning a column of that name, in schema order.
    Column {
        owners: Vec<String>,
    },
    TableAndColumn {
        table: String,
        owners: Vec<String>,
    },
}

impl Resolution {
    pub fn is_unknown(&self) -> bool {
        matches!(self, Resolution::Unknown)
    }
}

/// Where an identifier sits in a query, which decides its candidate names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "position")]
pub enum IdentContext {
    Table,
    Column { visible: Vec<String> },
}

impl DbSchema {
    /// Builds a schema, checking name uniqueness and key integrity. Key
    /// references are rewritten to the stored casing of their targets.
    pub fn new(
        db_id: impl Into<String>,
        tables: Vec<Table>,
        foreign_keys: Vec<(ColumnRef, ColumnRef)>,
        primary_keys: Vec<ColumnRef>,
    ) -> Result<Self, SchemaError> {
        let db_id = db_id.into();
        for (i, table) in tables.iter().enumerate() {
            if table.name.is_empty() {
                return Err(SchemaError::EmptyTableName { db_id });
            }
            if table.columns.is_empty() {
                return Err(SchemaError::NoColumns { db_id, table: table.name.clone() });
            }
            if tables[..i].iter().any(|t| names_eq(&t.name, &table.name)) {
                return Err(SchemaError::DuplicateTable { db_id, table: table.name.clone() });
            }
            for (j, column) in table.columns.iter().enumerate() {
                if column.name.is_empty() {
                    return Err(SchemaError::EmptyColumnName { db_id, table: table.name.clone() });
                }
                if table.columns[..j].iter().any(|c| names_eq(&c.name, &column.name)) {
                    return Err(SchemaError::DuplicateColumn {
                        db_id,
                        table: table.name.clone(),
                        column: column.name.clone(),
                    });
                }
            }
        }
        let mut schema = DbSchema { db_id, tables, foreign_keys: Vec::new(), primary_keys: Vec::new() };
        let mut pks = Vec::with_capacity(primary_keys.len());
        for pk in &primary_keys {
            pks.push(schema.canonical_ref(pk)?);
        }
        let mut fks = Vec::with_capacity(foreign_keys.len());
        for (from, to) in &foreign_keys {
            fks.push((schema.canonical_ref(from)?, schema.canonical_ref(to)?));
        }
        schema.primary_keys = pks;
        schema.foreign_keys = fks;
        Ok(schema)
    }

    fn canonical_ref(&self, r: &ColumnRef) -> Result<ColumnRef, SchemaError> {
        self.table(&r.table)
            .and_then(|t| t.column(&r.column).map(|c| ColumnRef::new(t.name.clone(), c.name.clone())))
            .ok_or_else(|| SchemaError::DanglingKey { db_id: self.db_id.clone(), reference: r.to_string() })
    }

    pub fn db_id(&self) -> &str {
        &self.db_id
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn foreign_keys(&self) -> &[(ColumnRef, ColumnRef)] {
        &self.foreign_keys
    }

    pub fn primary_keys(&self) -> &[ColumnRef] {
        &self.primary_keys
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| names_eq(&t.name, name))
    }

    /// True when some table declares a column with this name.
    pub fn has_column(&self, name: &str) -> bool {
        self.tables.iter().any(|t| t.column(name).is_some())
    }

    pub fn resolve_identifier(&self, name: &str) -> Resolution {
        let table = self.table(name).map(|t| t.name.clone());
        let owners: Vec<String> =
            self.tables.iter().filter(|t| t.column(name).is_some()).map(|t| t.name.clone()).collect();
        match (table, owners.is_empty()) {
            (None, true) => Resolution::Unknown,
            (Some(table), true) => Resolution::Table(table),
            (None, false) => Resolution::Column { owners },
            (Some(table), false) => Resolution::TableAndColumn { table, owners },
        }
    }

    /// Names an identifier in `context` may legally be replaced with.
    ///
    /// Column positions list the columns of visible tables first and every
    /// other column after; each group keeps schema declaration order and a
    /// name appears once, at its first position.
    pub fn candidate_names(&self, context: &IdentContext) -> Vec<String> {
        match context {
            IdentContext::Table => self.tables.iter().map(|t| t.name.clone()).collect(),
            IdentContext::Column { visible } => {
                let is_visible = |t: &Table| visible.iter().any(|v| names_eq(v, &t.name));
                let in_scope = self.tables.iter().filter(|t| is_visible(t));
                let out_of_scope = self.tables.iter().filter(|t| !is_visible(t));
                let mut out: Vec<String> = Vec::new();
                for table in in_scope.chain(out_of_scope) {
                    for column in &table.columns {
                        if !out.iter().any(|c| names_eq(c, &column.name)) {
                            out.push(column.name.clone());
                        }
                    }
                }
                out
            }
        }
    }
}

/// Case-insensitive name comparison used for every schema lookup.
pub fn names_eq(a: &str, b: &str) -> bool {
    if a.is_ascii() && b.is_ascii() {
        a.eq_ignore_ascii_case(b)
    } else {
        a.to_lowercase() == b.to_lowercase()
    }
}
