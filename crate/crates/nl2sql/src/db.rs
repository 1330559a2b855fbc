//! Read-only SQLite fixtures and timed query execution.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nl2sql_core::metrics::{Cell, ResultTable};
use rusqlite::types::ValueRef;
use rusqlite::{Connection, ErrorCode, OpenFlags};

pub const DEFAULT_STATEMENT_TIMEOUT: Duration = Duration::from_secs(5);

/// Progress-handler granularity, in virtual machine instructions.
const PROGRESS_STEP: i32 = 1_000;

#[derive(Debug, thiserror::Error)]
pub enum DbError {
    #[error("no database for `{0}`")]
    Missing(String),
    #[error("{}: {source}", path.display())]
    Open { path: PathBuf, source: rusqlite::Error },
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: seed script failed: {source}", path.display())]
    Seed { path: PathBuf, source: rusqlite::Error },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("{0}")]
    Sql(String),
    #[error("statement timed out")]
    Timeout,
}

/// Where a database comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DbSource {
    File(PathBuf),
    /// SQL script loaded into a private in-memory database.
    Seed(PathBuf),
}

/// Looks up databases under a directory, Spider style: `<db_id>/<db_id>.sqlite`,
/// then `<db_id>.sqlite`, then a `<db_id>.sql` seed script.
#[derive(Debug, Clone)]
pub struct DbCatalog {
    dir: PathBuf,
}

impl DbCatalog {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DbCatalog { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn locate(&self, db_id: &str) -> Option<DbSource> {
        let nested = self.dir.join(db_id).join(format!("{db_id}.sqlite"));
        let flat = self.dir.join(format!("{db_id}.sqlite"));
        let seed = self.dir.join(format!("{db_id}.sql"));
        if nested.is_file() {
            Some(DbSource::File(nested))
        } else if flat.is_file() {
            Some(DbSource::File(flat))
        } else {
            seed.is_file().then_some(DbSource::Seed(seed))
        }
    }

    pub fn open(&self, db_id: &str) -> Result<Connection, DbError> {
        match self.locate(db_id).ok_or_else(|| DbError::Missing(db_id.into()))? {
            DbSource::File(path) => {
                let flags =
                    OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX | OpenFlags::SQLITE_OPEN_URI;
                Connection::open_with_flags(&path, flags).map_err(|source| DbError::Open { path, source })
            }
            DbSource::Seed(path) => {
                let script =
                    std::fs::read_to_string(&path).map_err(|source| DbError::Read { path: path.clone(), source })?;
                let conn =
                    Connection::open_in_memory().map_err(|source| DbError::Open { path: path.clone(), source })?;
                conn.execute_batch(&script).map_err(|source| DbError::Seed { path: path.clone(), source })?;
                conn.execute_batch("PRAGMA query_only = ON").map_err(|source| DbError::Seed { path, source })?;
                Ok(conn)
            }
        }
    }
}

fn cell(value: ValueRef<'_>) -> Cell {
    match value {
        ValueRef::Null => Cell::Null,
        ValueRef::Integer(i) => Cell::Integer(i),
        ValueRef::Real(r) => Cell::Real(r),
        ValueRef::Text(t) => Cell::Text(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => Cell::Text(b.iter().map(|x| format!("{x:02x}")).collect()),
    }
}

/// Runs one statement, interrupting it after `timeout`.
pub fn execute(conn: &Connection, sql: &str, timeout: Duration) -> Result<ResultTable, ExecError> {
    let deadline = Instant::now() + timeout;
    conn.progress_handler(PROGRESS_STEP, Some(move || Instant::now() > deadline));
    let result = run(conn, sql);
    conn.progress_handler(PROGRESS_STEP, None::<fn() -> bool>);
    result.map_err(|e| match e.sqlite_error_code() {
        Some(ErrorCode::OperationInterrupted) => ExecError::Timeout,
        _ => ExecError::Sql(e.to_string()),
    })
}

fn run(conn: &Connection, sql: &str) -> rusqlite::Result<ResultTable> {
    let mut stmt = conn.prepare(sql)?;
    let columns: Vec<String> = stmt.column_names().into_iter().map(str::to_owned).collect();
    let width = columns.len();
    let mut rows = stmt.query([])?;
    let mut out = Vec::new();
    while let Some(row) = rows.next()? {
        out.push((0..width).map(|i| row.get_ref(i).map(cell)).collect::<rusqlite::Result<Vec<_>>>()?);
    }
    Ok(ResultTable { columns, rows: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn retail() -> Connection {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/db");
        DbCatalog::new(dir).open("retail").unwrap()
    }

    #[test]
    fn count_on_three_rows() {
        let t = execute(&retail(), "SELECT count(*) FROM stores", DEFAULT_STATEMENT_TIMEOUT).unwrap();
        assert_eq!(t.rows, vec![vec![Cell::Integer(3)]]);
    }

    #[test]
    fn missing_table_is_an_error() {
        assert!(matches!(
            execute(&retail(), "SELECT * FROM nonexistent", DEFAULT_STATEMENT_TIMEOUT),
            Err(ExecError::Sql(_))
        ));
    }

    #[test]
    fn ordered_rows() {
        let t = execute(&retail(), "SELECT city FROM stores ORDER BY city", DEFAULT_STATEMENT_TIMEOUT).unwrap();
        let cities: Vec<&Cell> = t.rows.iter().map(|r| &r[0]).collect();
        assert_eq!(cities, [&Cell::Text("Bergen".into()), &Cell::Text("Oslo".into()), &Cell::Text("Oslo".into())]);
    }

    #[test]
    fn writes_are_refused() {
        let conn = retail();
        assert!(execute(&conn, "DELETE FROM stores", DEFAULT_STATEMENT_TIMEOUT).is_err());
        let t = execute(&conn, "SELECT count(*) FROM stores", DEFAULT_STATEMENT_TIMEOUT).unwrap();
        assert_eq!(t.rows[0][0], Cell::Integer(3));
    }

    #[test]
    fn runaway_query_times_out() {
        let conn = retail();
        let sql = "WITH RECURSIVE n(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM n) SELECT count(*) FROM n";
        let start = Instant::now();
        assert_eq!(execute(&conn, sql, Duration::from_millis(100)), Err(ExecError::Timeout));
        assert!(start.elapsed() < Duration::from_secs(3));
        assert!(execute(&conn, "SELECT 1", Duration::from_millis(100)).is_ok());
    }

    #[test]
    fn catalog_resolution_order() {
        let dir = tempfile::tempdir().unwrap();
        let cat = DbCatalog::new(dir.path());
        assert_eq!(cat.locate("x"), None);
        std::fs::write(dir.path().join("x.sql"), "CREATE TABLE t (a INTEGER);").unwrap();
        assert!(matches!(cat.locate("x"), Some(DbSource::Seed(_))));
        std::fs::create_dir(dir.path().join("x")).unwrap();
        let file = dir.path().join("x").join("x.sqlite");
        Connection::open(&file)
            .unwrap()
            .execute_batch("CREATE TABLE t (a INTEGER); INSERT INTO t VALUES (7);")
            .unwrap();
        assert_eq!(cat.locate("x"), Some(DbSource::File(file)));
        let t = execute(&cat.open("x").unwrap(), "SELECT a FROM t", DEFAULT_STATEMENT_TIMEOUT).unwrap();
        assert_eq!(t.rows, vec![vec![Cell::Integer(7)]]);
    }
}
