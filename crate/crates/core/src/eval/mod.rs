//! Classification metrics, inter-annotator agreement and the
//! cross-validation harness.

mod cv;
mod kappa;
mod metrics;
mod report;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::features::FeatureError;
use crate::models::ModelError;

pub use cv::{cross_validate, CvConfig, CvReport, FoldReport};
pub use kappa::cohen_kappa;
pub use metrics::{confusion, metrics, ClassMetrics, ConfusionMatrix, MetricsReport, Summary};
pub use report::{
    class_row, classification_report_json, classification_report_markdown, confusion_markdown,
    format_score, results_table_markdown, Aggregation, ClassificationReport, ReportRow, ResultsRow,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0} gold labels but {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("no evaluated pairs")]
    Empty,
    #[error("label {0} is not one of the class codes")]
    UnknownLabel(u8),
    #[error("confusion matrix is empty")]
    ZeroTotal,
    #[error("confusion matrices cover different classes")]
    ClassMismatch,
    #[error("kappa undefined: chance agreement is 1 but observed agreement is {0}")]
    DegenerateKappa(f64),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, EvalError>;
