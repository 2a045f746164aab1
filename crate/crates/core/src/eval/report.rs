use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{ClassMetrics, ConfusionMatrix, MetricsReport, Summary};
use crate::corpus::Task;
use crate::models::ModelKind;
use crate::scalar::Scalar;

pub fn format_score<F: Scalar>(x: F) -> String {
    format!("{:.4}", x.to_f64_lossy())
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// One markdown row: label name then precision, recall and F1.
pub fn class_row<F: Scalar>(name: &str, m: &ClassMetrics<F>) -> String {
    format!(
        "| {name} | {} | {} | {} |",
        format_score(m.precision),
        format_score(m.recall),
        format_score(m.f1)
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: u8,
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub task: u8,
    pub rows: Vec<ReportRow>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

/// Per-label table with scores rounded to four decimals.
pub fn classification_report_json<F: Scalar>(
    task: Task,
    r: &MetricsReport<F>,
) -> ClassificationReport {
    let rows = r
        .per_class
        .iter()
        .map(|(&label, m)| ReportRow {
            label,
            name: task.label_name(label),
            precision: round4(m.precision.to_f64_lossy()),
            recall: round4(m.recall.to_f64_lossy()),
            f1: round4(m.f1.to_f64_lossy()),
            support: m.support,
        })
        .collect();
    ClassificationReport {
        task: task.number(),
        rows,
        accuracy: round4(r.accuracy.to_f64_lossy()),
        macro_f1: round4(r.macro_f1.to_f64_lossy()),
        weighted_f1: round4(r.weighted_f1.to_f64_lossy()),
    }
}

pub fn classification_report_markdown<F: Scalar>(task: Task, r: &MetricsReport<F>) -> String {
    let mut out = format!("| {task} | Precision | Recall | F1-Score |\n|---|---|---|---|\n");
    for (&label, m) in &r.per_class {
        out.push_str(&class_row(&task.label_name(label), m));
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "| Macro avg | {} | {} | {} |",
        format_score(r.macro_precision),
        format_score(r.macro_recall),
        format_score(r.macro_f1)
    );
    let _ = writeln!(
        out,
        "| Weighted avg | {} | {} | {} |",
        format_score(r.weighted_precision),
        format_score(r.weighted_recall),
        format_score(r.weighted_f1)
    );
    let _ = writeln!(out, "| Accuracy | | | {} |", format_score(r.accuracy));
    out
}

/// Rows are gold labels, columns predicted labels.
pub fn confusion_markdown(task: Task, cm: &ConfusionMatrix) -> String {
    let names: Vec<String> = cm.classes.iter().map(|&c| task.label_name(c)).collect();
    let mut out = String::from("| Gold \\ Predicted |");
    for n in &names {
        let _ = write!(out, " {n} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(names.len()));
    out.push('\n');
    for (name, row) in names.iter().zip(&cm.counts) {
        let _ = write!(out, "| {name} |");
        for c in row {
            let _ = write!(out, " {c} |");
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Metrics of the summed confusion matrix.
    Pooled,
    /// Mean of per-fold metrics.
    FoldMean,
}

impl Aggregation {
    pub fn caption(self) -> &'static str {
        match self {
            Aggregation::Pooled => "Pooled over folds (summed confusion matrix)",
            Aggregation::FoldMean => "Mean over folds",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow<F> {
    pub model: ModelKind,
    pub summary: Summary<F>,
}

/// Model comparison table with weighted, macro and accuracy columns.
pub fn results_table_markdown<F: Scalar>(
    rows: &[ResultsRow<F>],
    aggregation: Aggregation,
) -> String {
    let mut out = format!(
        "{}\n\n| Model | W-Prec | W-Rec | W-F1 | M-Prec | M-Rec | M-F1 | Accuracy |\n|---|---|---|---|---|---|---|---|\n",
        aggregation.caption()
    );
    for row in rows {
        let _ = write!(out, "| {} |", row.model.display_name());
        for v in row.summary.as_array() {
            let _ = write!(out, " {} |", format_score(v));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{confusion, metrics};

    #[test]
    fn row_layout() {
        let m = ClassMetrics {
            precision: 0.8224,
            recall: 0.8368,
            f1: 0.8296,
            support: 98,
        };
        let row = class_row("Predictive Neutral", &m);
        assert_eq!(row, "| Predictive Neutral | 0.8224 | 0.8368 | 0.8296 |");
        let plain: Vec<&str> = row
            .split('|')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        assert_eq!(plain.join(" "), "Predictive Neutral 0.8224 0.8368 0.8296");
    }

    #[test]
    fn hand_example_renders() {
        let cm = ConfusionMatrix {
            classes: vec![0, 1],
            counts: vec![vec![4, 0], vec![1, 1]],
        };
        let r = metrics::<f64>(&cm).unwrap();
        let md = classification_report_markdown(Task::Task1, &r);
        assert!(md.contains("| Non-Predictive | 0.8000 | 1.0000 | 0.8889 |"));
        assert!(md.contains("| Predictive | 1.0000 | 0.5000 | 0.6667 |"));
        assert!(md.contains("| Macro avg | 0.9000 | 0.7500 | 0.7778 |"));
        assert!(md.contains("| Weighted avg | 0.8667 | 0.8333 | 0.8148 |"));
        assert!(md.contains("| Accuracy | | | 0.8333 |"));
        let json = classification_report_json(Task::Task1, &r);
        assert_eq!(json.rows[0].f1, 0.8889);
        assert_eq!(json.weighted_f1, 0.8148);
        let text = serde_json::to_string(&json).unwrap();
        assert!(text.contains("\"precision\":0.8"));
    }

    #[test]
    fn perfect_classifier_is_all_ones() {
        let y = [1, 2, 3, 1];
        let r = metrics::<f64>(&confusion(&y, &y, &[1, 2, 3]).unwrap()).unwrap();
        let md = classification_report_markdown(Task::Task2, &r);
        for line in md.lines().skip(2) {
            for cell in line
                .split('|')
                .map(str::trim)
                .filter(|c| c.starts_with(char::is_numeric))
            {
                assert_eq!(cell, "1.0000");
            }
        }
        assert!(md.contains("Predictive Incremental"));
    }

    #[test]
    fn confusion_and_results_tables() {
        let cm = confusion(&[0, 0, 1], &[0, 1, 1], &[0, 1]).unwrap();
        let md = confusion_markdown(Task::Task1, &cm);
        assert!(md.contains("| Non-Predictive | 1 | 1 |"));
        assert!(md.contains("| Predictive | 0 | 1 |"));
        let r = metrics::<f64>(&cm).unwrap();
        let rows = [ResultsRow {
            model: ModelKind::Svm,
            summary: r.summary(),
        }];
        let t = results_table_markdown(&rows, Aggregation::Pooled);
        assert!(t.starts_with("Pooled"));
        assert!(t.contains("| Model | W-Prec | W-Rec | W-F1 | M-Prec | M-Rec | M-F1 | Accuracy |"));
        assert!(t.contains("| SVM (Linear) |"));
        assert!(t.trim_end().ends_with("0.6667 |"));
    }
}
