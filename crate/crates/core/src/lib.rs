//! Pure building blocks for a natural-language-to-SQL pipeline.
//!
//! Everything in this crate is IO-free and runs on `alloc` alone: the schema
//! model, a lexer/parser/printer for the Spider SQL subset, clause-level
//! decomposition, schema-aware identifier repair, dataset statistics and
//! prompt formatting, and the scoring primitives used by evaluation. The
//! `nl2sql` crate layers file formats, SQLite execution, HTTP and the CLI on
//! top.

#![no_std]

extern crate alloc;

pub mod baseline;
pub mod dataset;
pub mod metrics;
pub mod ratio;
pub mod repair;
pub mod schema;
pub mod sql;

pub use ratio::Ratio;
pub use repair::{repair, RepairOptions, RepairReport, RepairStatus};
pub use schema::{Column, ColumnRef, ColumnType, DbSchema, Table};
pub use sql::{parse, serialize, tokenize, Query};
