//! Deterministic template translator.
//!
//! Four question shapes are understood (words are case-insensitive, a
//! trailing `?` or `.` is ignored):
//!
//! | family        | question                                     | SQL                                  |
//! |---------------|----------------------------------------------|--------------------------------------|
//! | count-rows    | `how many rows are in <table>`               | `SELECT count(*) FROM <table>`       |
//! |               | `how many <table> are there`                 |                                      |
//! | list-column   | `list <column> of <table>` (`show` also)     | `SELECT <column> FROM <table>`       |
//! | max/min       | `what is the max <column> in <table>`        | `SELECT max(<column>) FROM <table>`  |
//! | filter-equals | `list <column> of <table> where <c> is <v>`  | `... WHERE <c> = <v>`                |
//!
//! `max` also accepts `maximum`/`highest`, `min` accepts `minimum`/`lowest`,
//! and `in` may be written `of`. Names must exist in the schema and are
//! emitted in stored casing. Numeric values are emitted bare, anything else
//! as a string literal.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::repair::render_identifier;
use crate::schema::{DbSchema, Table};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("question matches no template: {question}")]
pub struct NoMatch {
    pub question: String,
}

fn word_is(word: &str, options: &[&str]) -> bool {
    options.iter().any(|o| word.eq_ignore_ascii_case(o))
}

fn value_literal(words: &[&str]) -> Option<String> {
    if words.is_empty() {
        return None;
    }
    let raw = words.join(" ");
    let unquoted = raw
        .strip_prefix('\'')
        .and_then(|r| r.strip_suffix('\''))
        .or_else(|| raw.strip_prefix('"').and_then(|r| r.strip_suffix('"')));
    if let Some(text) = unquoted {
        return Some(format!("'{}'", text.replace('\'', "''")));
    }
    let numeric = raw.parse::<f64>().is_ok() && raw.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '-');
    Some(if numeric { raw } else { format!("'{}'", raw.replace('\'', "''")) })
}

struct Matcher<'s> {
    schema: &'s DbSchema,
}

impl<'s> Matcher<'s> {
    fn table(&self, word: &str) -> Option<&'s Table> {
        self.schema.table(word)
    }

    fn column(&self, table: &Table, word: &str) -> Option<String> {
        table.column(word).map(|c| render_identifier(&c.name, false))
    }

    fn table_name(table: &Table) -> String {
        render_identifier(&table.name, false)
    }

    fn count_rows(&self, w: &[&str]) -> Option<String> {
        let table = match w {
            [how, many, rows, are, inn, t]
                if word_is(how, &["how"])
                    && word_is(many, &["many"])
                    && word_is(rows, &["rows"])
                    && word_is(are, &["are"])
                    && word_is(inn, &["in"]) =>
            {
                self.table(t)?
            }
            [how, many, t, are, there]
                if word_is(how, &["how"])
                    && word_is(many, &["many"])
                    && word_is(are, &["are"])
                    && word_is(there, &["there"]) =>
            {
                self.table(t)?
            }
            _ => return None,
        };
        Some(format!("SELECT count(*) FROM {}", Self::table_name(table)))
    }

    fn aggregate(&self, w: &[&str]) -> Option<String> {
        let [what, is, the, agg, c, inn, t] = w else { return None };
        if !(word_is(what, &["what"]) && word_is(is, &["is"]) && word_is(the, &["the"]) && word_is(inn, &["in", "of"]))
        {
            return None;
        }
        let func = if word_is(agg, &["max", "maximum", "highest"]) {
            "max"
        } else if word_is(agg, &["min", "minimum", "lowest"]) {
            "min"
        } else {
            return None;
        };
        let table = self.table(t)?;
        Some(format!("SELECT {func}({}) FROM {}", self.column(table, c)?, Self::table_name(table)))
    }

    fn list(&self, w: &[&str]) -> Option<String> {
        let [verb, c, of, t, rest @ ..] = w else { return None };
        if !(word_is(verb, &["list", "show"]) && word_is(of, &["of"])) {
            return None;
        }
        let table = self.table(t)?;
        let mut sql = format!("SELECT {} FROM {}", self.column(table, c)?, Self::table_name(table));
        match rest {
            [] => {}
            [where_, key, is, value @ ..] if word_is(where_, &["where"]) && (word_is(is, &["is"]) || *is == "=") => {
                sql.push_str(&format!(" WHERE {} = {}", self.column(table, key)?, value_literal(value)?));
            }
            _ => return None,
        }
        Some(sql)
    }
}

pub fn baseline_translate(question: &str, schema: &DbSchema) -> Result<String, NoMatch> {
    let trimmed = question.trim().trim_end_matches(['?', '.']).trim_end();
    let words: Vec<&str> = trimmed.split_whitespace().collect();
    let m = Matcher { schema };
    m.count_rows(&words)
        .or_else(|| m.aggregate(&words))
        .or_else(|| m.list(&words))
        .ok_or_else(|| NoMatch { question: question.into() })
}
