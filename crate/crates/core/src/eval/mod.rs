//! Scoring: confusion matrices, per-class and macro precision/recall/F1,
//! stratified fold plans and tabular reports.

mod folds;
mod metrics;
mod report;

use thiserror::Error;

pub use folds::{make_folds, make_folds_for, record_key, FoldPlan};
pub use metrics::{binary_metrics, class_prf, confusion, macro_avg, ClassMetrics, ConfusionMatrix, MacroAverage, UNPARSED};
pub use report::{emit_report, parse_csv_report, write_report, Condition, MetricRow, ReportFormat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("prediction for unknown record `{0}`")]
    UnknownRecord(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("empty input")]
    EmptyInput,
    #[error("class `{class}` has {count} records, fewer than k = {k}")]
    ClassTooSmall { class: String, count: usize, k: usize },
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("record `{0}` listed twice")]
    DuplicateRecord(String),
    #[error("report parse error: {0}")]
    Parse(String),
}
