use std::collections::BTreeSet;

use super::EpochRecord;

const TOP_K: usize = 5;

/// Indices of the `k` largest values, ties going to the later index.
fn top_k(values: &[f64], k: usize) -> BTreeSet<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(b.cmp(&a)));
    idx.into_iter().take(k).collect()
}

/// Highest accuracy among `candidates`, latest index on ties.
fn best_by_accuracy(acc: &[f64], candidates: impl IntoIterator<Item = usize>) -> Option<usize> {
    candidates
        .into_iter()
        .max_by(|&a, &b| acc[a].total_cmp(&acc[b]).then(a.cmp(&b)))
}

/// Position of the chosen epoch: the intersection of the five best
/// accuracy and five best F1 epochs, falling back to the best accuracy.
/// `None` only for empty input.
pub fn select_index(accuracy: &[f64], f1: &[f64]) -> Option<usize> {
    assert_eq!(accuracy.len(), f1.len(), "one F1 per accuracy");
    if accuracy.is_empty() {
        return None;
    }
    let a = top_k(accuracy, TOP_K);
    let f = top_k(f1, TOP_K);
    best_by_accuracy(accuracy, a.intersection(&f).copied()).or_else(|| best_by_accuracy(accuracy, 0..accuracy.len()))
}

pub fn select_checkpoint(records: &[EpochRecord]) -> Option<&EpochRecord> {
    let acc: Vec<f64> = records.iter().map(|r| r.accuracy).collect();
    let f1: Vec<f64> = records.iter().map(|r| r.f1).collect();
    select_index(&acc, &f1).map(|i| &records[i])
}
