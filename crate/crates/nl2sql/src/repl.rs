//! Line-at-a-time question answering: translate, repair, execute, print.

use std::io::{self, BufRead, Write};
use std::time::Duration;

use nl2sql_core::repair::{repair, EditKind, RepairOptions, RepairStatus};
use nl2sql_core::DbSchema;
use rusqlite::Connection;

use crate::backend::{TranslationRequest, Translator};
use crate::db::execute;

pub const PROMPT: &str = "nl2sql> ";
pub const QUIT: &str = "\\q";

pub struct Session<'a> {
    pub backend: &'a dyn Translator,
    pub schema: &'a DbSchema,
    pub repair: Option<RepairOptions>,
    pub conn: Option<Connection>,
    pub statement_timeout: Duration,
}

impl Session<'_> {
    /// Answers one question. Failures are written to `out`, not returned.
    pub fn answer(&self, question: &str, out: &mut impl Write) -> io::Result<()> {
        let response = match self.backend.translate(&TranslationRequest::new(question, self.schema)) {
            Ok(r) => r,
            Err(e) => return writeln!(out, "error: {e}"),
        };
        let sql = match &self.repair {
            Some(options) => {
                let report = repair(&response.sql, self.schema, options);
                if report.status == RepairStatus::Unrepairable {
                    writeln!(out, "warning: output does not parse, left as is")?;
                }
                if !report.edits.is_empty() {
                    writeln!(out, "raw: {}", report.original_sql)?;
                    for e in &report.edits {
                        match e.kind {
                            EditKind::Name => {
                                writeln!(out, "  edit: {} -> {} (distance {})", e.original, e.replacement, e.distance)?
                            }
                            EditKind::Qualifier => {
                                writeln!(out, "  edit: qualifier {} -> {}", e.original, e.replacement)?
                            }
                        }
                    }
                }
                report.repaired_sql
            }
            None => response.sql,
        };
        writeln!(out, "sql: {sql}")?;
        if let Some(conn) = &self.conn {
            match execute(conn, &sql, self.statement_timeout) {
                Ok(table) => write!(out, "{}", table.render())?,
                Err(e) => writeln!(out, "error: {e}")?,
            }
        }
        Ok(())
    }

    /// Reads questions until EOF or `\q`.
    pub fn run(&self, input: impl BufRead, mut out: impl Write) -> io::Result<()> {
        write!(out, "{PROMPT}")?;
        out.flush()?;
        for line in input.lines() {
            let line = line?;
            let question = line.trim();
            if question == QUIT {
                break;
            }
            if !question.is_empty() {
                self.answer(question, &mut out)?;
            }
            write!(out, "{PROMPT}")?;
            out.flush()?;
        }
        writeln!(out)
    }
}
