use serde::{Deserialize, Serialize};

use super::coverage::GridFrame;
use super::diversity::avg_pairwise_distance;
use crate::metrics::{redundancy_index_eps, DistanceMetric};
use crate::metrics::{Direction, Histogram};
use crate::{Error, FeatureMatrix, RedundancyScore, Result, DEFAULT_EPSILON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolisticMeasure {
    Entropy,
    Diversity,
    Coverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HolisticParams {
    /// Grid dimensions for entropy and coverage (at most 3).
    pub dims: usize,
    /// Bins per grid dimension.
    pub bins: usize,
    pub metric: DistanceMetric,
    pub max_pairs: Option<usize>,
    pub seed: u64,
    pub epsilon: f64,
}

impl Default for HolisticParams {
    fn default() -> Self {
        Self {
            dims: 2,
            bins: 16,
            metric: DistanceMetric::Euclidean,
            max_pairs: None,
            seed: 0,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolisticOutcome {
    pub measure: HolisticMeasure,
    /// `P(X₀)`
    pub p_before: f64,
    /// `P(X₀ ∪ X')`
    pub p_after: f64,
    pub score: RedundancyScore,
}

/// Entropy in bits of the joint grid-cell distribution of `x` under `frame`.
pub fn dataset_entropy(frame: &GridFrame, x: &FeatureMatrix) -> Result<f64> {
    let cells = frame.cells(x)?;
    let mut sorted = cells;
    sorted.sort_unstable();
    let mut counts = alloc::vec::Vec::new();
    let mut run = 0u64;
    for (i, c) in sorted.iter().enumerate() {
        run += 1;
        if i + 1 == sorted.len() || sorted[i + 1] != *c {
            counts.push(run);
            run = 0;
        }
    }
    Ok(crate::metrics::shannon_entropy(&Histogram::new(counts)?))
}

fn dims_for(x: &FeatureMatrix, params: &HolisticParams) -> usize {
    params.dims.min(x.cols()).min(3)
}

/// Redundancy of a batch `X'` relative to a base dataset `X₀`:
/// `1 - (P(X₀ ∪ X') - P(X₀)) / |P(X₀)|` with `P` the dataset entropy, the
/// average pairwise distance or the grid coverage. Grids and projections are
/// fitted on `X₀` alone so the two values share one reference frame.
pub fn holistic_redundancy(
    x0: &FeatureMatrix,
    batch: &FeatureMatrix,
    measure: HolisticMeasure,
    params: &HolisticParams,
) -> Result<HolisticOutcome> {
    if batch.cols() != x0.cols() {
        return Err(Error::ShapeMismatch {
            expected: x0.cols(),
            found: batch.cols(),
        });
    }
    let union = x0.vstack(batch)?;
    let (p_before, p_after) = match measure {
        HolisticMeasure::Entropy => {
            let frame = GridFrame::fit(x0, dims_for(x0, params), params.bins)?;
            (dataset_entropy(&frame, x0)?, dataset_entropy(&frame, &union)?)
        }
        HolisticMeasure::Coverage => {
            let frame = GridFrame::fit(x0, dims_for(x0, params), params.bins)?;
            (frame.coverage(x0)?.fraction, frame.coverage(&union)?.fraction)
        }
        HolisticMeasure::Diversity => (
            avg_pairwise_distance(x0, params.metric, params.max_pairs, params.seed)?,
            avg_pairwise_distance(&union, params.metric, params.max_pairs, params.seed)?,
        ),
    };
    let score = redundancy_index_eps(p_before, p_after, Direction::HigherIsBetter, params.epsilon)?;
    Ok(HolisticOutcome {
        measure,
        p_before,
        p_after,
        score,
    })
}
