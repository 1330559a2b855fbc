//! Schema-aware correction of generated SQL.
//!
//! After translation, identifiers that name no table or column of the target
//! schema are replaced by the closest schema name (Levenshtein distance,
//! bounded by a threshold). Context comes from the parse: a name in FROM is
//! matched against tables, a name in an expression against columns, with
//! the columns of the tables in scope ranked first. Everything that is not a
//! replaced identifier token is copied through untouched.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::schema::{names_eq, DbSchema, IdentContext};
use crate::sql::bind::is_select_alias;
use crate::sql::{is_reserved, parse_detailed, tokenize, ParsedQuery, ScopeTable, SiteRole, Span, TokenKind};

pub const DEFAULT_THRESHOLD: usize = 2;

/// Levenshtein distance over characters, ignoring case.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().flat_map(char::to_lowercase).collect();
    let b: Vec<char> = b.chars().flat_map(char::to_lowercase).collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            curr[j + 1] = substitution.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        core::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Closest candidate within `threshold`; the earliest candidate wins ties.
pub fn best_candidate(name: &str, candidates: &[String], threshold: usize) -> Option<(String, usize)> {
    let mut best: Option<(&String, usize)> = None;
    for candidate in candidates {
        let d = edit_distance(name, candidate);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((candidate, d));
        }
    }
    best.filter(|&(_, d)| d <= threshold).map(|(c, d)| (c.clone(), d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairOptions {
    pub threshold: usize,
    /// Also rewrite `a.col` to `b.col` when only `b` in scope has `col`.
    pub repair_qualifiers: bool,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions { threshold: DEFAULT_THRESHOLD, repair_qualifiers: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    /// Unknown name replaced by the nearest schema name.
    Name,
    /// Qualifier moved to the table that owns the column. Not bounded by
    /// the threshold.
    Qualifier,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub token_index: usize,
    pub span: Span,
    pub original: String,
    pub replacement: String,
    pub distance: usize,
    pub context: IdentContext,
    pub kind: EditKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairStatus {
    Clean,
    Repaired,
    Unrepairable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairReport {
    pub original_sql: String,
    pub repaired_sql: String,
    pub edits: Vec<Edit>,
    pub status: RepairStatus,
}

struct Pass<'a> {
    parsed: &'a ParsedQuery,
    schema: &'a DbSchema,
    options: RepairOptions,
    /// token index -> replacement name
    replaced: BTreeMap<usize, String>,
    edits: Vec<Edit>,
    unrepairable: bool,
}

impl<'a> Pass<'a> {
    /// Current name of a token, after any replacement already decided.
    fn name_at(&self, token: usize) -> Option<String> {
        self.replaced.get(&token).cloned().or_else(|| self.parsed.tokens[token].ident_value())
    }

    fn fix(&mut self, token: usize, original: &str, context: IdentContext) {
        let candidates = self.schema.candidate_names(&context);
        match best_candidate(original, &candidates, self.options.threshold) {
            Some((replacement, _)) => self.record(token, original, replacement, context, EditKind::Name),
            None => self.unrepairable = true,
        }
    }

    /// Names of the tables visible from `scope`, innermost first.
    fn visible_tables(&self, scope: usize) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in self.parsed.scope_chain(scope) {
            for t in &s.tables {
                if let Some(name) = t.name_token.and_then(|tok| self.name_at(tok)) {
                    if !out.iter().any(|o| names_eq(o, &name)) {
                        out.push(name);
                    }
                }
            }
        }
        out
    }

    /// Scope entry a qualifier refers to: by alias, by current table name,
    /// or by the table name as originally written.
    fn scope_table(&self, scope: usize, qualifier: &str) -> Option<&'a ScopeTable> {
        let parsed = self.parsed;
        parsed.scope_chain(scope).find_map(|s| {
            s.tables.iter().find(|t| t.alias.as_deref().is_some_and(|a| names_eq(a, qualifier))).or_else(|| {
                s.tables.iter().find(|t| {
                    t.name.as_deref().is_some_and(|n| names_eq(n, qualifier))
                        || t.name_token.and_then(|tok| self.name_at(tok)).is_some_and(|n| names_eq(&n, qualifier))
                })
            })
        })
    }

    fn qualifier_table(&self, scope: usize, qualifier_token: usize) -> Option<String> {
        let q = self.name_at(qualifier_token)?;
        match self.scope_table(scope, &q) {
            Some(t) => t.name_token.and_then(|tok| self.name_at(tok)),
            None => self.schema.table(&q).map(|t| t.name.clone()),
        }
    }

    fn defined_alias(&self, name: &str) -> bool {
        self.parsed.scopes.iter().any(|s| s.select_aliases.iter().any(|a| names_eq(a, name)))
    }

    fn qualifies_derived(&self, scope: usize, qualifier_token: usize) -> bool {
        let Some(q) = self.name_at(qualifier_token) else { return false };
        self.scope_table(scope, &q).is_some_and(|t| t.name_token.is_none())
    }

    fn record(&mut self, token: usize, original: &str, replacement: String, context: IdentContext, kind: EditKind) {
        self.replaced.insert(token, replacement.clone());
        self.edits.push(Edit {
            token_index: token,
            span: self.parsed.tokens[token].span,
            distance: edit_distance(original, &replacement),
            original: original.into(),
            replacement,
            context,
            kind,
        });
    }

    fn run(&mut self) {
        let parsed = self.parsed;
        for site in parsed.sites.iter().filter(|s| s.role == SiteRole::Table) {
            if self.schema.table(&site.value).is_none() {
                self.fix(site.token, &site.value, IdentContext::Table);
            }
        }
        for site in parsed.sites.iter().filter(|s| s.role == SiteRole::Qualifier) {
            match self.scope_table(site.scope, &site.value) {
                Some(t) if t.alias.as_deref().is_some_and(|a| names_eq(a, &site.value)) => {}
                Some(t) => {
                    // follow a FROM table that was itself renamed
                    let current = t.name_token.and_then(|tok| self.name_at(tok));
                    if let Some(current) = current.filter(|c| !names_eq(c, &site.value)) {
                        self.record(site.token, &site.value, current, IdentContext::Table, EditKind::Name);
                    }
                }
                None if self.schema.table(&site.value).is_some() => {}
                None => self.fix(site.token, &site.value, IdentContext::Table),
            }
        }
        for site in &parsed.sites {
            let SiteRole::Column { qualifier } = site.role else { continue };
            if self.schema.has_column(&site.value) {
                continue;
            }
            let table = qualifier.and_then(|q| self.qualifier_table(site.scope, q));
            // output names of derived tables are select aliases somewhere in the query
            let derived_or_alias = match qualifier {
                None => is_select_alias(parsed, site.scope, &site.value) || self.defined_alias(&site.value),
                Some(q) => table.is_none() && self.qualifies_derived(site.scope, q) && self.defined_alias(&site.value),
            };
            if derived_or_alias {
                continue;
            }
            let visible = match table {
                Some(table) => vec![table],
                None => self.visible_tables(site.scope),
            };
            self.fix(site.token, &site.value, IdentContext::Column { visible });
        }
        if self.options.repair_qualifiers {
            self.move_qualifiers();
        }
    }

    fn move_qualifiers(&mut self) {
        let parsed = self.parsed;
        for site in &parsed.sites {
            let SiteRole::Column { qualifier: Some(q) } = site.role else { continue };
            let Some(column) = self.name_at(site.token) else { continue };
            let Some(current) = self.qualifier_table(site.scope, q) else { continue };
            if self.schema.table(&current).is_some_and(|t| t.column(&column).is_some()) {
                continue;
            }
            let mut owners = Vec::new();
            for s in parsed.scope_chain(site.scope) {
                for t in &s.tables {
                    let Some(name) = t.name_token.and_then(|tok| self.name_at(tok)) else { continue };
                    if self.schema.table(&name).is_some_and(|tbl| tbl.column(&column).is_some()) {
                        owners.push(t.alias.clone().unwrap_or(name));
                    }
                }
            }
            if let [owner] = owners.as_slice() {
                let original = parsed.tokens[q].ident_value().unwrap_or_default();
                self.edits.retain(|e| e.token_index != q);
                self.record(q, &original, owner.clone(), IdentContext::Table, EditKind::Qualifier);
            }
        }
    }
}

/// Text for a replacement identifier, quoted when the original was or when
/// the bare name would not lex back as a single identifier.
pub(crate) fn render_identifier(name: &str, was_quoted: bool) -> String {
    let bare_ok = !was_quoted
        && !is_reserved(name)
        && matches!(tokenize(name).as_deref(), Ok([t]) if t.kind == TokenKind::Identifier);
    if bare_ok {
        String::from(name)
    } else {
        let mut out = String::from("\"");
        out.push_str(&name.replace('"', "\"\""));
        out.push('"');
        out
    }
}

pub fn repair(sql: &str, schema: &DbSchema, options: &RepairOptions) -> RepairReport {
    let Ok(parsed) = parse_detailed(sql) else {
        return RepairReport {
            original_sql: sql.into(),
            repaired_sql: sql.into(),
            edits: Vec::new(),
            status: RepairStatus::Unrepairable,
        };
    };
    let mut pass = Pass {
        parsed: &parsed,
        schema,
        options: *options,
        replaced: BTreeMap::new(),
        edits: Vec::new(),
        unrepairable: false,
    };
    pass.run();
    let Pass { mut edits, replaced, unrepairable, .. } = pass;
    edits.sort_by_key(|e| e.token_index);

    let byte_of: Vec<usize> = sql.char_indices().map(|(b, _)| b).chain(core::iter::once(sql.len())).collect();
    let mut repaired = String::with_capacity(sql.len() + 8);
    let mut cursor = 0;
    for (&token, name) in &replaced {
        let tok = &parsed.tokens[token];
        let (start, end) = (byte_of[tok.span.start], byte_of[tok.span.end]);
        repaired.push_str(&sql[cursor..start]);
        repaired.push_str(&render_identifier(name, tok.kind == TokenKind::QuotedIdentifier));
        cursor = end;
    }
    repaired.push_str(&sql[cursor..]);

    let status = if unrepairable {
        RepairStatus::Unrepairable
    } else if edits.is_empty() {
        RepairStatus::Clean
    } else {
        RepairStatus::Repaired
    };
    RepairReport { original_sql: sql.into(), repaired_sql: repaired, edits, status }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_flat;

    /// Plain dynamic-programming table, kept separate from the rolling-row
    /// implementation above.
    fn levenshtein_table(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.to_lowercase().chars().collect();
        let b: Vec<char> = b.to_lowercase().chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
                d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            }
        }
        d[a.len()][b.len()]
    }

    fn schema() -> DbSchema {
        parse_flat(
            "db utility
table meters
  column id number
  column location text
  column customer_id number
table readings
  column reading_id number
  column meters number
  column usage_kwh number
table sites
  column site_id number
  column location text
  column allocation number
",
        )
        .unwrap()
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| String::from(*s)).collect()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(edit_distance("meter", "meters"), 1);
        assert_eq!(edit_distance("abc", "abc"), 0);
        assert_eq!(levenshtein_table("locatoin", "location"), 2);
        assert_eq!(edit_distance("locatoin", "location"), 2);
        assert_eq!(edit_distance("METER", "meters"), 1);
        assert_eq!(edit_distance("", "abc"), 3);
    }

    #[test]
    fn distance_matches_table_oracle() {
        let words = [
            "",
            "a",
            "meters",
            "meter",
            "locatoin",
            "location",
            "allocation",
            "kitten",
            "sitting",
            "Ünïcode",
            "unicode",
        ];
        for a in words {
            for b in words {
                assert_eq!(edit_distance(a, b), levenshtein_table(a, b), "{a} / {b}");
            }
        }
    }

    #[test]
    fn best_candidate_examples() {
        let c = strings(&["meters", "sites"]);
        assert_eq!(best_candidate("meter", &c, 2), Some(("meters".into(), 1)));
        assert_eq!(best_candidate("zzzz", &c, 2), None);
        assert_eq!(best_candidate("x", &[], 2), None);
        // tie at distance 1: list order decides
        assert_eq!(best_candidate("cat", &strings(&["cot", "cut"]), 2), Some(("cot".into(), 1)));
    }

    #[test]
    fn in_scope_column_wins_tie() {
        // `colz` is one edit from both `colx` (declared first, out of scope)
        // and `coly` (in scope)
        let s = parse_flat("db t\ntable a\n  column colx text\ntable b\n  column coly text\n").unwrap();
        assert_eq!(edit_distance("colz", "colx"), 1);
        assert_eq!(edit_distance("colz", "coly"), 1);
        let r = repair("SELECT colz FROM b", &s, &RepairOptions::default());
        assert_eq!(r.repaired_sql, "SELECT coly FROM b");
        let r = repair("SELECT colz FROM a", &s, &RepairOptions::default());
        assert_eq!(r.repaired_sql, "SELECT colx FROM a");
    }

    #[test]
    fn paper_example() {
        let r = repair("SELECT meter FROM readings", &schema(), &RepairOptions::default());
        assert_eq!(r.repaired_sql, "SELECT meters FROM readings");
        assert_eq!(r.status, RepairStatus::Repaired);
        assert_eq!(r.edits.len(), 1);
        assert_eq!(r.edits[0].distance, 1);
        assert_eq!(r.edits[0].original, "meter");
        assert_eq!(r.edits[0].replacement, "meters");
        assert_eq!(r.edits[0].span, Span { start: 7, end: 12 });
    }

    #[test]
    fn nearest_of_two_candidates() {
        let r = repair("SELECT locatoin FROM sites", &schema(), &RepairOptions::default());
        assert_eq!(r.repaired_sql, "SELECT location FROM sites");
        assert_eq!(r.edits[0].distance, 2);
        assert!(levenshtein_table("locatoin", "allocation") > 2);
    }

    #[test]
    fn valid_query_is_clean_and_untouched() {
        let sql = "select  T1.location FROM meters as T1 join readings T2 on T1.id = T2.meters where T2.usage_kwh > 10";
        let r = repair(sql, &schema(), &RepairOptions::default());
        assert_eq!(r.status, RepairStatus::Clean);
        assert_eq!(r.repaired_sql, sql);
        assert!(r.edits.is_empty());
    }

    #[test]
    fn unparseable_passes_through() {
        let r = repair("SELEKT meter FROM readings", &schema(), &RepairOptions::default());
        assert_eq!(r.status, RepairStatus::Unrepairable);
        assert_eq!(r.repaired_sql, r.original_sql);
        assert!(r.edits.is_empty());
    }

    #[test]
    fn far_names_are_unrepairable() {
        let r = repair("SELECT meter, zzzzzz FROM readings", &schema(), &RepairOptions::default());
        assert_eq!(r.status, RepairStatus::Unrepairable);
        assert_eq!(r.repaired_sql, "SELECT meters, zzzzzz FROM readings");
        let wide = RepairOptions { threshold: 0, ..RepairOptions::default() };
        assert_eq!(repair("SELECT meter FROM readings", &schema(), &wide).status, RepairStatus::Unrepairable);
    }

    #[test]
    fn tables_and_qualifiers() {
        let r = repair("SELECT meter.location FROM meter WHERE meter.id = 1", &schema(), &RepairOptions::default());
        assert_eq!(r.repaired_sql, "SELECT meters.location FROM meters WHERE meters.id = 1");
        assert_eq!(r.edits.len(), 3);
        assert!(r.edits.windows(2).all(|w| w[0].token_index < w[1].token_index));
        assert_eq!(r.edits[2].context, IdentContext::Table);
    }

    #[test]
    fn qualified_columns_prefer_their_table() {
        // `locaton` is distance 1 from `location`, owned by both meters and sites
        let r = repair("SELECT s.locaton FROM sites AS s", &schema(), &RepairOptions::default());
        assert_eq!(r.edits[0].context, IdentContext::Column { visible: vec!["sites".into()] });
        assert_eq!(r.repaired_sql, "SELECT s.location FROM sites AS s");
    }

    #[test]
    fn literals_and_keywords_are_never_touched() {
        let sql = "SELECT meter FROM readings WHERE usage_kwh = 'meter' AND meters > 3";
        let r = repair(sql, &schema(), &RepairOptions::default());
        assert_eq!(r.repaired_sql, "SELECT meters FROM readings WHERE usage_kwh = 'meter' AND meters > 3");
    }

    #[test]
    fn quoted_identifiers_stay_quoted() {
        let r = repair("SELECT \"Meter\" FROM readings", &schema(), &RepairOptions::default());
        assert_eq!(r.repaired_sql, "SELECT \"meters\" FROM readings");
    }

    #[test]
    fn select_aliases_are_left_alone() {
        let r = repair("SELECT count(*) AS total FROM readings ORDER BY total", &schema(), &RepairOptions::default());
        assert_eq!(r.status, RepairStatus::Clean);
    }

    #[test]
    fn derived_table_outputs_are_known() {
        let sql = "SELECT s.total FROM (SELECT meters, sum(usage_kwh) AS total FROM readings GROUP BY meters) AS s WHERE s.total > 3";
        assert_eq!(repair(sql, &schema(), &RepairOptions::default()).status, RepairStatus::Clean);
        let sql = "SELECT total FROM (SELECT count(*) AS total FROM readings) AS s";
        assert_eq!(repair(sql, &schema(), &RepairOptions::default()).status, RepairStatus::Clean);
        let r = repair(
            "SELECT s.totl FROM (SELECT count(*) AS total FROM readings) AS s",
            &schema(),
            &RepairOptions::default(),
        );
        assert_eq!(r.status, RepairStatus::Unrepairable);
    }

    #[test]
    fn qualifier_repair_is_opt_in() {
        let sql = "SELECT T1.usage_kwh FROM meters AS T1 JOIN readings AS T2 ON T1.id = T2.meters";
        assert_eq!(repair(sql, &schema(), &RepairOptions::default()).status, RepairStatus::Clean);
        let opts = RepairOptions { repair_qualifiers: true, ..RepairOptions::default() };
        let r = repair(sql, &schema(), &opts);
        assert_eq!(r.repaired_sql, "SELECT T2.usage_kwh FROM meters AS T1 JOIN readings AS T2 ON T1.id = T2.meters");
        assert_eq!(r.edits[0].kind, EditKind::Qualifier);
    }

    #[test]
    fn repair_is_idempotent_on_examples() {
        for sql in ["SELECT meter FROM readings", "SELECT meter.location FROM meter", "SELECT locatoin FROM sites"] {
            let once = repair(sql, &schema(), &RepairOptions::default());
            let twice = repair(&once.repaired_sql, &schema(), &RepairOptions::default());
            assert_eq!(twice.status, RepairStatus::Clean, "{sql}");
        }
    }
}
