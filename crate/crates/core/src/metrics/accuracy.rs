use crate::{Error, LabelVector, MetricValue, Result};

/// Mean of per-class recalls over the classes of `y_true`.
pub fn balanced_accuracy(y_true: &LabelVector, y_pred: &LabelVector) -> Result<MetricValue> {
    y_pred.ensure_len(y_true.len())?;
    let k = y_true.n_classes();
    let mut hits = alloc::vec![0usize; k];
    let mut support = alloc::vec![0usize; k];
    for (&t, &p) in y_true.labels().iter().zip(y_pred.labels()) {
        support[t] += 1;
        if t == p {
            hits[t] += 1;
        }
    }
    if let Some(empty) = support.iter().position(|&s| s == 0) {
        return Err(Error::DegenerateLabels(empty));
    }
    let recall_sum: f64 = hits
        .iter()
        .zip(&support)
        .map(|(&h, &s)| h as f64 / s as f64)
        .sum();
    MetricValue::higher(recall_sum / k as f64)
}
