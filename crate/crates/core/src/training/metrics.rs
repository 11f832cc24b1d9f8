use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::NUM_CLASSES;

pub const CLASS_NAMES: [&str; NUM_CLASSES] = ["S", "YN", "WH", "RQ", "C", "R", "RC"];

/// Precision, recall and F1 of one class. Undefined ratios are 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Unweighted mean over all seven classes.
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[truth][pred]`.
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
    pub truth: Vec<usize>,
    pub predictions: Vec<usize>,
}

impl EvalReport {
    pub fn from_predictions(truth: &[usize], predictions: &[usize]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::Config("cannot evaluate an empty set".into()));
        }
        if truth.len() != predictions.len() {
            return Err(Error::shape("evaluate", &[truth.len()], &[predictions.len()]));
        }
        let mut confusion = [[0usize; NUM_CLASSES]; NUM_CLASSES];
        for (&t, &p) in truth.iter().zip(predictions) {
            if t >= NUM_CLASSES || p >= NUM_CLASSES {
                return Err(Error::Label(format!("class index {} out of range", t.max(p))));
            }
            confusion[t][p] += 1;
        }
        let correct: usize = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let per_class: Vec<ClassMetrics> = (0..NUM_CLASSES)
            .map(|c| {
                let tp = confusion[c][c];
                let support: usize = confusion[c].iter().sum();
                let predicted: usize = confusion.iter().map(|row| row[c]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassMetrics {
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();
        Ok(Self {
            accuracy: correct as f64 / truth.len() as f64,
            macro_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / NUM_CLASSES as f64,
            per_class,
            confusion,
            truth: truth.to_vec(),
            predictions: predictions.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    /// `key: value` lines.
    pub fn metrics_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "records: {}", self.len()).unwrap();
        writeln!(out, "accuracy: {:.6}", self.accuracy).unwrap();
        writeln!(out, "macro_f1: {:.6}", self.macro_f1).unwrap();
        for (name, m) in CLASS_NAMES.iter().zip(&self.per_class) {
            writeln!(out, "f1_{name}: {:.6}", m.f1).unwrap();
        }
        out
    }

    /// Rows are true classes, columns predictions.
    pub fn confusion_csv(&self) -> String {
        let mut out = format!("truth\\pred,{}\n", CLASS_NAMES.join(","));
        for (name, row) in CLASS_NAMES.iter().zip(&self.confusion) {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            writeln!(out, "{name},{}", cells.join(",")).unwrap();
        }
        out
    }

    pub fn per_class_csv(&self) -> String {
        let mut out = String::from("class,precision,recall,f1,support\n");
        for (name, m) in CLASS_NAMES.iter().zip(&self.per_class) {
            writeln!(
                out,
                "{name},{:.6},{:.6},{:.6},{}",
                m.precision, m.recall, m.f1, m.support
            )
            .unwrap();
        }
        out
    }
}
