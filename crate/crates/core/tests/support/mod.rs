#![allow(dead_code)]

pub mod ast_gen;

use std::path::PathBuf;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// `(db_id, sql)` rows of the bundled query corpus.
pub fn corpus() -> Vec<(String, String)> {
    std::fs::read_to_string(fixtures().join("corpus/queries.tsv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (db, sql) = l.split_once('\t').unwrap();
            (db.to_owned(), sql.to_owned())
        })
        .collect()
}

pub fn flat_schema(db: &str) -> nl2sql_core::DbSchema {
    let text = std::fs::read_to_string(fixtures().join(format!("schemas/{db}.schema"))).unwrap();
    nl2sql_core::schema::parse_flat(&text).unwrap()
}
