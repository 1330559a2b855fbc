//! Filesystem, database, network and command-line layer over `nl2sql-core`.

pub mod backend;
pub mod cli;
pub mod config;
pub mod corrupt;
pub mod custom;
pub mod db;
pub mod evaluate;
pub mod repl;
pub mod spider;

pub use nl2sql_core as core;
