//! Resolution of identifier sites against a schema.

use alloc::vec::Vec;

use super::parser::{IdentSite, ParsedQuery, ScopeTable, SiteRole};
use crate::schema::{names_eq, ColumnRef, DbSchema};

/// Table entry a qualifier names, searching aliases before table names,
/// innermost scope first.
pub fn qualifier_target<'p>(parsed: &'p ParsedQuery, scope: usize, qualifier: &str) -> Option<&'p ScopeTable> {
    parsed.scope_chain(scope).find_map(|s| {
        s.tables
            .iter()
            .find(|t| t.alias.as_deref().is_some_and(|a| names_eq(a, qualifier)))
            .or_else(|| s.tables.iter().find(|t| t.name.as_deref().is_some_and(|n| names_eq(n, qualifier))))
    })
}

/// True when an unqualified name refers to a SELECT-list alias in scope.
pub fn is_select_alias(parsed: &ParsedQuery, scope: usize, name: &str) -> bool {
    parsed.scope_chain(scope).any(|s| s.select_aliases.iter().any(|a| names_eq(a, name)))
}

/// Schema column a column site refers to, if it can be pinned to one.
pub fn resolve_column(parsed: &ParsedQuery, schema: &DbSchema, site: &IdentSite) -> Option<ColumnRef> {
    let SiteRole::Column { qualifier } = site.role else { return None };
    let in_table = |table_name: &str| {
        let table = schema.table(table_name)?;
        let column = table.column(&site.value)?;
        Some(ColumnRef::new(table.name.clone(), column.name.clone()))
    };
    match qualifier {
        Some(q) => {
            let q = parsed.tokens[q].ident_value()?;
            match qualifier_target(parsed, site.scope, &q) {
                Some(target) => in_table(target.name.as_deref()?),
                None => in_table(&q),
            }
        }
        None => {
            if is_select_alias(parsed, site.scope, &site.value) {
                return None;
            }
            parsed
                .scope_chain(site.scope)
                .find_map(|s| s.tables.iter().filter_map(|t| t.name.as_deref()).find_map(in_table))
        }
    }
}

/// Every table and column reference of a parsed query, in token order.
pub fn schema_references(parsed: &ParsedQuery, schema: &DbSchema) -> Vec<SchemaReference> {
    let mut out = Vec::new();
    for site in &parsed.sites {
        match site.role {
            SiteRole::Table => {
                if let Some(t) = schema.table(&site.value) {
                    out.push(SchemaReference::Table(t.name.clone()));
                }
            }
            SiteRole::Column { .. } => {
                if let Some(c) = resolve_column(parsed, schema, site) {
                    out.push(SchemaReference::Column(c));
                }
            }
            _ => {}
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SchemaReference {
    Table(alloc::string::String),
    Column(ColumnRef),
}
