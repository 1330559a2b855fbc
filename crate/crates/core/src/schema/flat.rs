//! Line-oriented schema file.
//!
//! ```text
//! db utility
//! table meters
//!   column id number
//!   column location text
//! pk meters.id
//! fk readings.meter_id meters.id
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Names may not
//! contain whitespace.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{Column, ColumnRef, ColumnType, DbSchema, SchemaError, Table};

fn flat_err(line: usize, message: impl Into<String>) -> SchemaError {
    SchemaError::Flat { line, message: message.into() }
}

fn column_type(name: &str) -> Option<ColumnType> {
    Some(match name {
        "text" => ColumnType::Text,
        "number" => ColumnType::Number,
        "time" => ColumnType::Time,
        "boolean" => ColumnType::Boolean,
        "other" => ColumnType::Other,
        _ => return None,
    })
}

fn column_ref(line: usize, text: &str) -> Result<ColumnRef, SchemaError> {
    match text.split_once('.') {
        Some((t, c)) if !t.is_empty() && !c.is_empty() => Ok(ColumnRef::new(t, c)),
        _ => Err(flat_err(line, format!("expected table.column, found `{text}`"))),
    }
}

pub fn parse_flat(text: &str) -> Result<DbSchema, SchemaError> {
    let mut db_id: Option<String> = None;
    let mut tables: Vec<Table> = Vec::new();
    let mut pks = Vec::new();
    let mut fks = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indented = raw.starts_with(' ') || raw.starts_with('\t');
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match (indented, fields.as_slice()) {
            (false, ["db", id]) => {
                if db_id.replace(id.to_string()).is_some() {
                    return Err(flat_err(line, "duplicate `db` line"));
                }
            }
            (false, ["table", name]) => tables.push(Table::new(*name, Vec::new())),
            (true, ["column", name, ty]) => {
                let ty = column_type(ty).ok_or_else(|| flat_err(line, format!("unknown column type `{ty}`")))?;
                let table = tables.last_mut().ok_or_else(|| flat_err(line, "column outside of a table"))?;
                table.columns.push(Column::new(*name, ty));
            }
            (false, ["pk", target]) => pks.push(column_ref(line, target)?),
            (false, ["fk", from, to]) => fks.push((column_ref(line, from)?, column_ref(line, to)?)),
            _ => return Err(flat_err(line, format!("unrecognized line `{trimmed}`"))),
        }
    }
    let db_id = db_id.ok_or_else(|| flat_err(0, "missing `db` line"))?;
    DbSchema::new(db_id, tables, fks, pks)
}

pub fn render_flat(schema: &DbSchema) -> Result<String, SchemaError> {
    let check = |name: &str| {
        if name.chars().any(char::is_whitespace) || name.is_empty() {
            Err(flat_err(0, format!("name `{name}` cannot be written to a flat schema")))
        } else {
            Ok(())
        }
    };
    let mut out = String::new();
    check(schema.db_id())?;
    let _ = writeln!(out, "db {}", schema.db_id());
    for table in schema.tables() {
        check(&table.name)?;
        let _ = writeln!(out, "table {}", table.name);
        for column in &table.columns {
            check(&column.name)?;
            let _ = writeln!(out, "  column {} {}", column.name, column.col_type);
        }
    }
    for pk in schema.primary_keys() {
        let _ = writeln!(out, "pk {pk}");
    }
    for (from, to) in schema.foreign_keys() {
        let _ = writeln!(out, "fk {from} {to}");
    }
    Ok(out)
}
