//! Seeded single-identifier corruptions of schema-valid queries.
//!
//! One table or column token is mutated by one or two random character
//! edits. A mutation is kept only when repair can undo it unambiguously:
//! the new name resolves to nothing in the schema or the query, lexes as a
//! plain identifier, and the original is its unique nearest name among all
//! tables (or all columns) within the threshold.

use nl2sql_core::repair::edit_distance;
use nl2sql_core::schema::{names_eq, DbSchema, IdentContext};
use nl2sql_core::sql::{is_reserved, parse_detailed, tokenize, ParsedQuery, SiteRole, TokenKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz_0123456789";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corruption {
    pub db_id: String,
    pub original_sql: String,
    pub corrupted_sql: String,
    pub original_name: String,
    pub corrupted_name: String,
    pub distance: usize,
}

fn mutate(name: &str, edits: usize, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = name.chars().collect();
    for _ in 0..edits {
        let c = char::from(*ALPHABET.choose(rng).expect("non-empty"));
        match rng.gen_range(0..3) {
            0 => {
                let at = rng.gen_range(0..=chars.len());
                chars.insert(at, c);
            }
            1 if chars.len() > 1 => {
                let at = rng.gen_range(0..chars.len());
                chars.remove(at);
            }
            _ => {
                let at = rng.gen_range(0..chars.len());
                chars[at] = c;
            }
        }
    }
    chars.into_iter().collect()
}

fn plain_identifier(name: &str) -> bool {
    !is_reserved(name) && matches!(tokenize(name).as_deref(), Ok([t]) if t.kind == TokenKind::Identifier)
}

fn names_in_query(parsed: &ParsedQuery) -> impl Iterator<Item = &str> {
    parsed.scopes.iter().flat_map(|s| {
        s.tables
            .iter()
            .flat_map(|t| t.alias.as_deref().into_iter().chain(t.name.as_deref()))
            .chain(s.select_aliases.iter().map(String::as_str))
    })
}

/// Accepts `mutated` as a stand-in for `original` if repair must map it back.
fn acceptable(
    mutated: &str,
    original: &str,
    context: &IdentContext,
    schema: &DbSchema,
    parsed: &ParsedQuery,
    threshold: usize,
) -> Option<usize> {
    if !plain_identifier(mutated) || !schema.resolve_identifier(mutated).is_unknown() {
        return None;
    }
    if names_in_query(parsed).any(|n| names_eq(n, mutated)) {
        return None;
    }
    let d = edit_distance(mutated, original);
    if d == 0 || d > threshold {
        return None;
    }
    let all = schema.candidate_names(context);
    let unique = all.iter().filter(|c| !names_eq(c, original)).all(|c| edit_distance(mutated, c) > d);
    unique.then_some(d)
}

/// Reads `db_id<TAB>sql` lines; `#` lines and blank lines are skipped.
/// A malformed line is reported by its 1-based number.
pub fn parse_query_corpus(text: &str) -> Result<Vec<(String, String)>, usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| match l.split_once('\t') {
            Some((db, sql)) if !db.trim().is_empty() && !sql.trim().is_empty() => {
                Ok((db.trim().to_owned(), sql.trim().to_owned()))
            }
            _ => Err(i + 1),
        })
        .collect()
}

fn splice(sql: &str, start: usize, end: usize, with: &str) -> String {
    let byte = |c: usize| sql.char_indices().nth(c).map_or(sql.len(), |(b, _)| b);
    format!("{}{}{}", &sql[..byte(start)], with, &sql[byte(end)..])
}

/// Up to `count` corruptions drawn from `queries` (`(db_id, sql)`), fully
/// determined by `seed`.
pub fn generate_corruptions(
    queries: &[(String, String)],
    schemas: &[DbSchema],
    count: usize,
    threshold: usize,
    seed: u64,
) -> Vec<Corruption> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<(&DbSchema, &String, ParsedQuery)> = queries
        .iter()
        .filter_map(|(db_id, sql)| {
            let schema = schemas.iter().find(|s| s.db_id() == db_id)?;
            Some((schema, sql, parse_detailed(sql).ok()?))
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && !candidates.is_empty() && attempts < count * 200 {
        attempts += 1;
        let (schema, sql, parsed) = &candidates[rng.gen_range(0..candidates.len())];
        let sites: Vec<_> = parsed
            .sites
            .iter()
            .filter(|s| parsed.tokens[s.token].kind == TokenKind::Identifier)
            .filter(|s| match s.role {
                SiteRole::Table => schema.table(&s.value).is_some(),
                SiteRole::Column { .. } => schema.has_column(&s.value),
                _ => false,
            })
            .collect();
        let Some(site) = sites.choose(&mut rng) else { continue };
        let context = match site.role {
            SiteRole::Table => IdentContext::Table,
            _ => IdentContext::Column { visible: Vec::new() },
        };
        let edits = rng.gen_range(1..=threshold.max(1));
        let mutated = mutate(&site.value, edits, &mut rng);
        let Some(distance) = acceptable(&mutated, &site.value, &context, schema, parsed, threshold) else { continue };
        let span = parsed.tokens[site.token].span;
        out.push(Corruption {
            db_id: schema.db_id().into(),
            original_sql: (*sql).clone(),
            corrupted_sql: splice(sql, span.start, span.end, &mutated),
            original_name: site.value.clone(),
            corrupted_name: mutated,
            distance,
        });
    }
    out
}
