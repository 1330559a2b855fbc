//! Scoring primitives: logical-form match in two modes, result-set
//! comparison, per-pair verdicts and their exact aggregation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::Split;
use crate::ratio::Ratio;
use crate::sql::{canonical_string, decompose_with, parse, DecomposeOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMode {
    /// Canonical serializations (case-folded) are equal.
    String,
    /// Clause multisets are equal; conjunct order and aliases do not matter.
    Component,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FormMatch {
    pub pred_parses: bool,
    pub string: bool,
    pub component: bool,
}

/// Both exact-match modes at once. An unparseable gold or prediction
/// matches nothing.
pub fn compare_forms(gold: &str, pred: &str, options: DecomposeOptions) -> FormMatch {
    let Ok(pred) = parse(pred) else { return FormMatch::default() };
    let Ok(gold) = parse(gold) else { return FormMatch { pred_parses: true, ..FormMatch::default() } };
    FormMatch {
        pred_parses: true,
        string: canonical_string(&gold) == canonical_string(&pred),
        component: decompose_with(&gold, options) == decompose_with(&pred, options),
    }
}

pub fn exact_match(gold: &str, pred: &str, mode: ExactMode) -> bool {
    let m = compare_forms(gold, pred, DecomposeOptions::default());
    match mode {
        ExactMode::String => m.string,
        ExactMode::Component => m.component,
    }
}

pub const REAL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn rank(&self) -> u8 {
        match self {
            Cell::Null => 0,
            Cell::Integer(_) | Cell::Real(_) => 1,
            Cell::Text(_) => 2,
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Integer(i) => Some(i as f64),
            Cell::Real(r) => Some(r),
            _ => None,
        }
    }

    /// Equality used for result comparison: integers and reals compare
    /// numerically, reals with relative tolerance.
    pub fn matches(&self, other: &Cell) -> bool {
        match (self, other) {
            (Cell::Null, Cell::Null) => true,
            (Cell::Integer(a), Cell::Integer(b)) => a == b,
            (Cell::Text(a), Cell::Text(b)) => a == b,
            _ => match (self.as_f64(), other.as_f64()) {
                (Some(a), Some(b)) => reals_close(a, b),
                _ => false,
            },
        }
    }

    fn total_cmp(&self, other: &Cell) -> Ordering {
        match (self, other) {
            (Cell::Integer(a), Cell::Integer(b)) => a.cmp(b),
            (Cell::Text(a), Cell::Text(b)) => a.cmp(b),
            _ => match (self.as_f64(), other.as_f64()) {
                (Some(a), Some(b)) => a.total_cmp(&b),
                _ => self.rank().cmp(&other.rank()),
            },
        }
    }
}

fn reals_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REAL_TOLERANCE * a.abs().max(b.abs())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn is_rectangular(&self) -> bool {
        self.rows.iter().all(|r| r.len() == self.columns.len())
    }

    /// Plain-text grid for terminals.
    pub fn render(&self) -> String {
        let text = |c: &Cell| match c {
            Cell::Null => String::from("NULL"),
            Cell::Integer(i) => alloc::format!("{i}"),
            Cell::Real(r) => alloc::format!("{r}"),
            Cell::Text(t) => t.clone(),
        };
        let body: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(text).collect()).collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let line = |cells: &[String], out: &mut String| {
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                let _ = write!(out, "{cell:<w$}");
            }
            out.push('\n');
        };
        line(&self.columns, &mut out);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        line(&rule, &mut out);
        for row in &body {
            line(row, &mut out);
        }
        let _ = writeln!(out, "({} rows)", self.rows.len());
        out
    }
}

fn row_cmp(a: &[Cell], b: &[Cell]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.len().cmp(&b.len()))
}

fn rows_match(a: &[Cell], b: &[Cell]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.matches(y))
}

/// Compares two results as bags of rows, or as sequences when `ordered`.
/// Column names are ignored; column counts must agree.
pub fn results_match(gold: &ResultTable, pred: &ResultTable, ordered: bool) -> bool {
    if gold.columns.len() != pred.columns.len() || gold.rows.len() != pred.rows.len() {
        return false;
    }
    if ordered {
        return gold.rows.iter().zip(&pred.rows).all(|(g, p)| rows_match(g, p));
    }
    let mut g: Vec<&Vec<Cell>> = gold.rows.iter().collect();
    let mut p: Vec<&Vec<Cell>> = pred.rows.iter().collect();
    g.sort_by(|a, b| row_cmp(a, b));
    p.sort_by(|a, b| row_cmp(a, b));
    g.iter().zip(&p).all(|(a, b)| rows_match(a, b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    ParseError,
    ExecError,
    Timeout,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::ParseError => "parse_error",
            FailureReason::ExecError => "exec_error",
            FailureReason::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub index: usize,
    pub db_id: String,
    /// The prediction as scored, after repair when enabled.
    pub sql: String,
    pub exact_string: bool,
    pub exact_component: bool,
    /// `None` when no database is available or the gold query fails.
    pub execution: Option<bool>,
    pub repaired: bool,
    pub failure_reason: Option<FailureReason>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestLabel {
    /// Unseen test split only.
    Test1,
    /// Test split together with custom training pairs.
    Test2,
    Custom,
}

impl TestLabel {
    pub fn for_splits(splits: impl IntoIterator<Item = Split>) -> TestLabel {
        let (mut test, mut train) = (false, false);
        for s in splits {
            match s {
                Split::Test => test = true,
                Split::Train => train = true,
            }
        }
        match (test, train) {
            (true, false) => TestLabel::Test1,
            (true, true) => TestLabel::Test2,
            _ => TestLabel::Custom,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TestLabel::Test1 => "test1",
            TestLabel::Test2 => "test2",
            TestLabel::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub test_label: TestLabel,
    pub repair: bool,
    pub exact_match_string: Ratio,
    pub exact_match_component: Ratio,
    /// Over the pairs whose gold query executed.
    pub execution_accuracy: Ratio,
    pub failures: BTreeMap<FailureReason, u64>,
    pub verdicts: Vec<Verdict>,
}

impl EvalReport {
    pub fn from_verdicts(test_label: TestLabel, repair: bool, verdicts: Vec<Verdict>) -> Self {
        let total = verdicts.len() as u64;
        let count = |f: &dyn Fn(&Verdict) -> bool| verdicts.iter().filter(|v| f(v)).count() as u64;
        let mut failures = BTreeMap::new();
        for reason in verdicts.iter().filter_map(|v| v.failure_reason) {
            *failures.entry(reason).or_insert(0) += 1;
        }
        EvalReport {
            test_label,
            repair,
            exact_match_string: Ratio::new(count(&|v| v.exact_string), total),
            exact_match_component: Ratio::new(count(&|v| v.exact_component), total),
            execution_accuracy: Ratio::new(count(&|v| v.execution == Some(true)), count(&|v| v.execution.is_some())),
            failures,
            verdicts,
        }
    }

    /// `exact(string)=a/b exact(component)=c/b exec=d/e`
    pub fn summary_line(&self) -> String {
        alloc::format!(
            "exact(string)={} exact(component)={} exec={}",
            self.exact_match_string,
            self.exact_match_component,
            self.execution_accuracy
        )
    }
}
