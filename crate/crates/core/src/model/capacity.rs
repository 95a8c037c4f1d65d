use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::classifier::{fit_and_score, ModelConfig};
use crate::split::{stratified_split, SplitRatios};
use crate::{Error, FeatureMatrix, LabelVector, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthScore {
    pub width: usize,
    pub n_params: usize,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub chosen: usize,
    pub scores: Vec<WidthScore>,
}

/// Trains one model per hidden width (every hidden layer of `template` set to
/// that width) on a shared split and seed, and picks the smallest width whose
/// validation balanced accuracy is within `tol` of the best.
pub fn capacity_search(
    x: &FeatureMatrix,
    y: &LabelVector,
    widths: &[usize],
    template: &ModelConfig,
    ratios: SplitRatios,
    tol: f64,
    seed: u64,
) -> Result<CapacityResult> {
    if widths.is_empty() {
        return Err(Error::EmptyInput("no widths to search"));
    }
    if widths.windows(2).any(|w| w[0] >= w[1]) || widths[0] == 0 {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "widths must be positive and strictly ascending",
        )));
    }
    y.ensure_len(x.rows())?;
    let split = stratified_split(y, ratios, seed)?;
    capacity_search_holdout(
        &x.select_rows(&split.train)?,
        &y.select(&split.train),
        &x.select_rows(&split.val)?,
        &y.select(&split.val),
        widths,
        template,
        tol,
        seed,
    )
}

/// [`capacity_search`] on caller-supplied training and validation rows.
#[allow(clippy::too_many_arguments)]
pub fn capacity_search_holdout(
    x_train: &FeatureMatrix,
    y_train: &LabelVector,
    x_val: &FeatureMatrix,
    y_val: &LabelVector,
    widths: &[usize],
    template: &ModelConfig,
    tol: f64,
    seed: u64,
) -> Result<CapacityResult> {
    if widths.is_empty() {
        return Err(Error::EmptyInput("no widths to search"));
    }
    if widths.windows(2).any(|w| w[0] >= w[1]) || widths[0] == 0 {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "widths must be positive and strictly ascending",
        )));
    }
    let hidden_layers = template.hidden.len().max(1);
    let mut scores = Vec::with_capacity(widths.len());
    for &width in widths {
        let cfg = ModelConfig {
            hidden: alloc::vec![width; hidden_layers],
            ..template.clone()
        };
        let m = fit_and_score(&cfg, x_train, y_train, x_val, y_val, seed)?;
        scores.push(WidthScore {
            width,
            n_params: m.spec.n_params(),
            val_accuracy: m.score.value,
        });
    }
    let best = scores
        .iter()
        .map(|s| s.val_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    let chosen = scores
        .iter()
        .find(|s| s.val_accuracy >= best - tol - 1e-12)
        .map(|s| s.width)
        .unwrap_or(widths[0]);
    Ok(CapacityResult { chosen, scores })
}
