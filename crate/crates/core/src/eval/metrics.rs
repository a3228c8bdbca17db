use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::extraction::Prediction;

/// Column name for predictions that did not parse to a single class.
pub const UNPARSED: &str = "unparsed";

/// Rows are truth classes, columns predicted classes, plus one extra
/// `unparsed` column per row for non-`Ok` predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    counts: Vec<Vec<u64>>,
    unparsed: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let n = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; n]; n],
            unparsed: vec![0; n],
        }
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    /// Counts one record; `predicted = None` lands in the unparsed column.
    pub fn add(&mut self, truth: usize, predicted: Option<usize>) {
        match predicted {
            Some(p) => self.counts[truth][p] += 1,
            None => self.unparsed[truth] += 1,
        }
    }

    pub fn add_named(&mut self, truth: &str, predicted: Option<&str>) -> Result<(), EvalError> {
        let t = self.class_index(truth).ok_or_else(|| EvalError::UnknownClass(truth.to_string()))?;
        let p = predicted
            .map(|name| self.class_index(name).ok_or_else(|| EvalError::UnknownClass(name.to_string())))
            .transpose()?;
        self.add(t, p);
        Ok(())
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn unparsed(&self, truth: usize) -> u64 {
        self.unparsed[truth]
    }

    pub fn row_total(&self, truth: usize) -> u64 {
        self.counts[truth].iter().sum::<u64>() + self.unparsed[truth]
    }

    pub fn column_total(&self, predicted: usize) -> u64 {
        self.counts.iter().map(|row| row[predicted]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn total(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.row_total(i)).sum()
    }
}

/// Builds the matrix from ground truth (record id → class) and predictions.
/// Records without a prediction are not counted.
pub fn confusion(classes: &[String], truth: &HashMap<String, String>, preds: &[Prediction]) -> Result<ConfusionMatrix, EvalError> {
    let mut cm = ConfusionMatrix::new(classes.to_vec());
    for p in preds {
        let t = truth.get(&p.record_id).ok_or_else(|| EvalError::UnknownRecord(p.record_id.clone()))?;
        let predicted = if p.is_ok() { p.label.as_deref() } else { None };
        cm.add_named(t, predicted)?;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class_name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

impl ClassMetrics {
    pub fn from_counts(class_name: &str, tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        ClassMetrics {
            class_name: class_name.to_string(),
            precision,
            recall,
            f1: harmonic(precision, recall),
            support: tp + fn_,
        }
    }
}

/// Precision, recall and F1 of one class. Unparsed predictions count as
/// misses for their truth class.
pub fn class_prf(cm: &ConfusionMatrix, class_name: &str) -> Result<ClassMetrics, EvalError> {
    let i = cm.class_index(class_name).ok_or_else(|| EvalError::UnknownClass(class_name.to_string()))?;
    let tp = cm.get(i, i);
    Ok(ClassMetrics::from_counts(class_name, tp, cm.column_total(i) - tp, cm.row_total(i) - tp))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroAverage {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unweighted mean over classes.
pub fn macro_avg(metrics: &[ClassMetrics]) -> Result<MacroAverage, EvalError> {
    if metrics.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = metrics.len() as f64;
    Ok(MacroAverage {
        precision: metrics.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: metrics.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: metrics.iter().map(|m| m.f1).sum::<f64>() / n,
    })
}

/// Target-vs-rest scores from paired truth/prediction flags.
pub fn binary_metrics(class_name: &str, pairs: impl IntoIterator<Item = (bool, bool)>) -> ClassMetrics {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (truth, predicted) in pairs {
        match (truth, predicted) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    ClassMetrics::from_counts(class_name, tp, fp, fn_)
}
