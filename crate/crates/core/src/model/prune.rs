use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::mlp::{evaluate_model, MlpSpec, ParamVector};
use crate::metrics::redundancy_index_eps;
use crate::{
    redundancy_index, Error, FeatureMatrix, LabelVector, MetricValue, RedundancyScore, Result,
    DEFAULT_EPSILON,
};

/// Which parameters survive pruning. Biases are always kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneMask {
    keep: Vec<bool>,
    sparsity: f64,
}

impl PruneMask {
    pub fn keep_all(n: usize) -> Self {
        Self {
            keep: alloc::vec![true; n],
            sparsity: 0.0,
        }
    }

    /// Prunes the listed indices, ignoring any that address biases.
    pub fn pruning(params: &ParamVector, indices: &[usize]) -> Self {
        let mut keep = alloc::vec![true; params.len()];
        for &i in indices {
            if !params.is_bias(i) {
                keep[i] = false;
            }
        }
        let pruned = keep.iter().filter(|k| !**k).count();
        Self {
            sparsity: pruned as f64 / params.len() as f64,
            keep,
        }
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    /// Pruned parameters over all parameters.
    pub fn sparsity(&self) -> f64 {
        self.sparsity
    }

    pub fn pruned_count(&self) -> usize {
        self.keep.iter().filter(|k| !**k).count()
    }

    pub fn apply(&self, params: &ParamVector) -> Result<ParamVector> {
        if self.keep.len() != params.len() {
            return Err(Error::ShapeMismatch {
                expected: params.len(),
                found: self.keep.len(),
            });
        }
        let mut out = params.clone();
        for (v, &k) in out.values_mut().iter_mut().zip(&self.keep) {
            if !k {
                *v = 0.0;
            }
        }
        Ok(out)
    }
}

pub fn evaluate_masked(
    params: &ParamVector,
    mask: &PruneMask,
    spec: &MlpSpec,
    x: &FeatureMatrix,
    y: &LabelVector,
) -> Result<MetricValue> {
    evaluate_model(&mask.apply(params)?, spec, x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverparamMode {
    /// `θ'` added on top of the base parameters `θ₀`.
    Added,
    /// `θ'` removed from the base parameters `θ₀`.
    Removed,
}

/// Overparameterization redundancy in either orientation:
///
/// * `Added`: `1 - (P(θ₀ ∪ θ') - P(θ₀)) / |P(θ₀)|`
/// * `Removed`: `1 - (P(θ₀) - P(θ₀ \ θ')) / |P(θ₀)|`
///
/// The removal form is the index with the metric direction mirrored.
pub fn overparam_redundancy(
    acc_base: MetricValue,
    acc_modified: MetricValue,
    mode: OverparamMode,
) -> Result<RedundancyScore> {
    match mode {
        OverparamMode::Added => redundancy_index(acc_base, acc_modified, DEFAULT_EPSILON),
        OverparamMode::Removed => {
            if acc_base.direction != acc_modified.direction {
                return Err(Error::DirectionMismatch);
            }
            redundancy_index_eps(
                acc_base.value,
                acc_modified.value,
                acc_base.direction.flipped(),
                DEFAULT_EPSILON,
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneOutcome {
    pub mask: PruneMask,
    pub score: RedundancyScore,
    pub baseline: MetricValue,
    pub pruned: MetricValue,
    /// Fraction of prunable weights removed by `mask`.
    pub weight_fraction: f64,
    /// `(weight fraction, balanced accuracy)` at every grid point.
    pub curve: Vec<(f64, f64)>,
}

/// One-shot L1 magnitude pruning sweep.
///
/// Weights are ranked by `|θ|` (ties by index) and the smallest fraction
/// `step, 2·step, …` of them is masked. The largest fraction whose validation
/// balanced accuracy stays within `tol` of the unpruned network is returned.
pub fn l1_prune_search(
    params: &ParamVector,
    spec: &MlpSpec,
    x_val: &FeatureMatrix,
    y_val: &LabelVector,
    step: f64,
    tol: f64,
) -> Result<PruneOutcome> {
    if !(step > 0.0 && step <= 0.05) {
        return Err(Error::InvalidArgument(alloc::format!(
            "prune step must be in (0, 0.05], got {step}"
        )));
    }
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let baseline = evaluate_model(params, spec, x_val, y_val)?;
    let mut ranked: Vec<usize> = (0..params.len()).filter(|&i| !params.is_bias(i)).collect();
    let v = params.values();
    ranked.sort_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(a.cmp(&b)));
    let n_w = ranked.len();

    let mut best = (PruneMask::keep_all(params.len()), baseline, 0.0);
    let mut curve = Vec::new();
    let mut i = 1usize;
    loop {
        let frac = i as f64 * step;
        if frac >= 1.0 - 1e-12 {
            break;
        }
        let n = libm::round(frac * n_w as f64) as usize;
        let mask = PruneMask::pruning(params, &ranked[..n]);
        let acc = evaluate_masked(params, &mask, spec, x_val, y_val)?;
        curve.push((frac, acc.value));
        if acc.value >= baseline.value - tol - 1e-12 {
            best = (mask, acc, frac);
        }
        i += 1;
    }
    let (mask, pruned, weight_fraction) = best;
    let score = overparam_redundancy(baseline, pruned, OverparamMode::Removed)?;
    Ok(PruneOutcome {
        mask,
        score,
        baseline,
        pruned,
        weight_fraction,
        curve,
    })
}
