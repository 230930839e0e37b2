//! Confusion matrices, binary metrics for the sarcastic class, and report
//! emission (text table, CSV, JSON).

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Counts with sarcastic as the positive class.
pub fn confusion(pred: &[Label], gold: &[Label]) -> Result<ConfusionMatrix> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let mut cm = ConfusionMatrix::default();
    for (p, g) in pred.iter().zip(gold) {
        match (p.is_sarcastic(), g.is_sarcastic()) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Metrics whose denominator was zero and were reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_denominator: Vec<String>,
}

fn ratio(num: usize, den: usize, name: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let mut flags = Vec::new();
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision", &mut flags);
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall", &mut flags);
    // Harmonic mean of precision and recall, in counts to avoid double rounding.
    let f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_, "f1", &mut flags);
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1,
        zero_denominator: flags,
    })
}

/// Three decimals, ties to even on the exact binary value.
pub fn display3(x: f64) -> String {
    format!("{x:.3}")
}

/// Evaluation of one system (base model or ensemble).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub evaluated: usize,
    pub dropped: usize,
    pub confusion: ConfusionMatrix,
    /// Ensemble members; empty for a single model.
    #[serde(default)]
    pub members: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_denominator: Vec<String>,
}

impl EvalReport {
    pub fn from_confusion(name: impl Into<String>, cm: ConfusionMatrix, dropped: usize) -> Result<Self> {
        let m = metrics(&cm)?;
        Ok(EvalReport {
            name: name.into(),
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            evaluated: cm.total(),
            dropped,
            confusion: cm,
            members: Vec::new(),
            zero_denominator: m.zero_denominator,
        })
    }

    pub fn from_labels(name: impl Into<String>, pred: &[Label], gold: &[Label], dropped: usize) -> Result<Self> {
        EvalReport::from_confusion(name, confusion(pred, gold)?, dropped)
    }

    pub fn with_members(mut self, members: Vec<String>) -> Self {
        self.members = members;
        self
    }
}

/// Always predicts `label`; the majority/dummy baseline.
pub fn constant_predictions(label: Label, n: usize) -> Vec<Label> {
    vec![label; n]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "text" | "table" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}` (expected text, csv or json)")),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Text => "txt",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

pub const CSV_HEADER: [&str; 7] = ["system", "accuracy", "precision", "recall", "f1", "evaluated", "dropped"];

/// Renders reports sorted by name. Text and CSV show metrics at three
/// decimals; JSON keeps full precision.
pub fn emit_report(reports: &[EvalReport], format: ReportFormat) -> String {
    let mut sorted: Vec<&EvalReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(&sorted).expect("reports serialize");
            out.push('\n');
            out
        }
        ReportFormat::Csv => {
            let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            writer.write_record(CSV_HEADER).expect("in-memory write");
            for r in sorted {
                writer
                    .write_record([
                        r.name.clone(),
                        display3(r.accuracy),
                        display3(r.precision),
                        display3(r.recall),
                        display3(r.f1),
                        r.evaluated.to_string(),
                        r.dropped.to_string(),
                    ])
                    .expect("in-memory write");
            }
            String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
        }
        ReportFormat::Text => text_table(&sorted),
    }
}

fn text_table(reports: &[&EvalReport]) -> String {
    let headers = ["System", "Accuracy", "Precision", "Recall", "F1-score", "Evaluated", "Dropped"];
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                display3(r.accuracy),
                display3(r.precision),
                display3(r.recall),
                display3(r.f1),
                r.evaluated.to_string(),
                r.dropped.to_string(),
            ]
        })
        .collect();
    let mut widths = headers.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: &[String], out: &mut String| {
        let mut parts = Vec::with_capacity(cells.len());
        for (i, cell) in cells.iter().enumerate() {
            let pad = widths[i] - cell.chars().count();
            if i == 0 {
                parts.push(format!("{cell}{}", " ".repeat(pad)));
            } else {
                parts.push(format!("{}{cell}", " ".repeat(pad)));
            }
        }
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&headers.map(String::from), &mut out);
    let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    let _ = writeln!(out, "{}", "-".repeat(rule));
    for row in &rows {
        line(row, &mut out);
    }
    let ensembles: Vec<&&EvalReport> = reports.iter().filter(|r| !r.members.is_empty()).collect();
    if !ensembles.is_empty() {
        out.push('\n');
        for r in ensembles {
            let _ = writeln!(out, "{} members: {}", r.name, r.members.join(", "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: Label = Label::Sarcastic;
    const N: Label = Label::NotSarcastic;

    #[test]
    fn confusion_counts() {
        let cm = confusion(&[S, S, N, N, S], &[S, N, S, N, S]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(2, 1, 1, 1));
        let perfect = confusion(&[S, N, N], &[S, N, N]).unwrap();
        assert_eq!((perfect.fp, perfect.fn_), (0, 0));
        assert!(matches!(confusion(&[S], &[S, N]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(confusion(&[], &[]), Err(Error::EmptyEvaluation)));
    }

    #[test]
    fn all_positive_on_balanced_set() {
        let k = 50;
        let gold: Vec<Label> = (0..2 * k).map(|i| if i < k { S } else { N }).collect();
        let cm = confusion(&constant_predictions(S, 2 * k), &gold).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(k, k, 0, 0));
        let m = metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(display3(m.f1), "0.667");
    }

    #[test]
    fn gpt4o_confusion_counts() {
        let m = metrics(&ConfusionMatrix::new(202, 123, 11, 91)).unwrap();
        assert_eq!(display3(m.accuracy), "0.686");
        assert_eq!(display3(m.f1), "0.751");
    }

    #[test]
    fn zero_denominators_flagged() {
        let m = metrics(&ConfusionMatrix::new(0, 0, 200, 1200)).unwrap();
        assert_eq!(display3(m.accuracy), "0.857");
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(m.zero_denominator, vec!["precision"]);
        let m = metrics(&ConfusionMatrix::new(0, 0, 0, 5)).unwrap();
        assert_eq!(m.zero_denominator, vec!["precision", "recall", "f1"]);
        assert!(metrics(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn display_rounds_half_to_even() {
        assert_eq!(display3(0.0625), "0.062");
        assert_eq!(display3(0.1875), "0.188");
        assert_eq!(display3(1.0), "1.000");
    }

    fn sample_reports() -> Vec<EvalReport> {
        vec![
            EvalReport::from_confusion("zeta", ConfusionMatrix::new(202, 123, 11, 91), 2).unwrap(),
            EvalReport::from_confusion("alpha, the first", ConfusionMatrix::new(5, 5, 0, 0), 0)
                .unwrap()
                .with_members(vec!["a".into(), "b".into(), "c".into()]),
        ]
    }

    #[test]
    fn csv_report() {
        let csv = emit_report(&sample_reports(), ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "system,accuracy,precision,recall,f1,evaluated,dropped");
        assert_eq!(lines[1], "\"alpha, the first\",0.500,0.500,1.000,0.667,10,0");
        assert_eq!(lines[2], "zeta,0.686,0.622,0.948,0.751,427,2");
    }

    #[test]
    fn text_and_json_reports() {
        let text = emit_report(&sample_reports(), ReportFormat::Text);
        assert!(text.lines().next().unwrap().starts_with("System"));
        assert!(text.contains("0.686") && text.contains("0.751"));
        assert!(text.contains("alpha, the first members: a, b, c"));
        let json = emit_report(&sample_reports(), ReportFormat::Json);
        let back: Vec<EvalReport> = serde_json::from_str(&json).unwrap();
        assert_eq!(back[0].name, "alpha, the first");
        assert_eq!(back[1].confusion.fn_, 11);
        assert!(json.contains("\"fn\": 11"));
    }
}
