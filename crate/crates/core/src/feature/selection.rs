use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::matrix::CodedMatrix;
use crate::metrics::{
    conditional_mutual_information, joint_entropy, mutual_information, quantize_features,
    BinScheme,
};
use crate::model::{fit_and_score, ModelConfig};
use crate::split::{stratified_split, SplitRatios};
use crate::{
    redundancy_index, Error, FeatureMatrix, LabelVector, MetricValue, RedundancyScore, Result,
    DEFAULT_EPSILON, TAU_MODEL, TAU_NUM,
};

pub const DEFAULT_MI_BINS: usize = 16;

/// Sorted, unique column indices into a feature matrix.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureSubset {
    indices: Vec<usize>,
}

impl FeatureSubset {
    pub fn new(mut indices: Vec<usize>, n_cols: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n_cols) {
            return Err(Error::InvalidSize {
                size: bad,
                max: n_cols.saturating_sub(1),
            });
        }
        Ok(Self { indices })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn all(n_cols: usize) -> Self {
        Self {
            indices: (0..n_cols).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    fn with(&self, j: usize) -> Self {
        let mut indices = self.indices.clone();
        if let Err(pos) = indices.binary_search(&j) {
            indices.insert(pos, j);
        }
        Self { indices }
    }

    fn without(&self, j: usize) -> Self {
        Self {
            indices: self.indices.iter().copied().filter(|&i| i != j).collect(),
        }
    }
}

/// Normalized mutual information `I(a; b) / min(H(a), H(b))` between two
/// quantile-binned columns; `1` means either column determines the other.
pub fn pair_redundancy(a: &[f64], b: &[f64], bins: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let x = FeatureMatrix::from_columns(&[a.to_vec(), b.to_vec()])?;
    let codes = quantize_features(&x, bins, BinScheme::Quantile)?;
    let (ca, cb) = (codes.column(0), codes.column(1));
    let mi = mutual_information(ca, cb)?;
    let h = joint_entropy(&[ca])?.min(joint_entropy(&[cb])?);
    Ok(mi / h.max(TAU_NUM))
}

fn cmi_on_codes(codes: &CodedMatrix, y: &[u32], candidate: usize, given: &[usize]) -> Result<f64> {
    let cols: Vec<&[u32]> = given.iter().map(|&j| codes.column(j)).collect();
    conditional_mutual_information(codes.column(candidate), y, &cols)
}

/// `I(f_k; Y | F_l)` in bits after quantile binning every column.
pub fn cmi_gain(
    x: &FeatureMatrix,
    candidate: usize,
    y: &LabelVector,
    given: &FeatureSubset,
    bins: usize,
) -> Result<f64> {
    y.ensure_len(x.rows())?;
    if candidate >= x.cols() {
        return Err(Error::InvalidSize {
            size: candidate,
            max: x.cols() - 1,
        });
    }
    let codes = quantize_features(x, bins, BinScheme::Quantile)?;
    cmi_on_codes(&codes, &y.codes(), candidate, given.indices())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrapperOutcome {
    pub score: RedundancyScore,
    pub p_base: MetricValue,
    pub p_with: MetricValue,
}

fn subset_accuracy(
    x: &FeatureMatrix,
    y: &LabelVector,
    subset: &FeatureSubset,
    cfg: &ModelConfig,
    ratios: SplitRatios,
    seed: u64,
) -> Result<MetricValue> {
    if subset.is_empty() {
        // a classifier without inputs predicts one class everywhere
        return MetricValue::higher(1.0 / y.n_classes() as f64);
    }
    y.ensure_len(x.rows())?;
    let split = stratified_split(y, ratios, seed)?;
    let xs = x.select_columns(subset.indices())?;
    let model = fit_and_score(
        cfg,
        &xs.select_rows(&split.train)?,
        &y.select(&split.train),
        &xs.select_rows(&split.val)?,
        &y.select(&split.val),
        seed,
    )
    .map_err(|e| match e {
        Error::DivergenceDetected { .. } => Error::TrainingFailed(alloc::format!("{e}")),
        other => other,
    })?;
    Ok(model.score)
}

/// Validation balanced accuracy with and without `candidate`, trained on one
/// shared split and seed, fed through the redundancy index.
pub fn wrapper_redundancy(
    x: &FeatureMatrix,
    y: &LabelVector,
    base: &FeatureSubset,
    candidate: usize,
    cfg: &ModelConfig,
    ratios: SplitRatios,
    seed: u64,
) -> Result<WrapperOutcome> {
    y.ensure_len(x.rows())?;
    if candidate >= x.cols() {
        return Err(Error::InvalidSize {
            size: candidate,
            max: x.cols() - 1,
        });
    }
    if base.contains(candidate) {
        return Err(Error::InvalidArgument(alloc::format!(
            "candidate {candidate} is already in the base set"
        )));
    }
    let p_base = subset_accuracy(x, y, base, cfg, ratios, seed)?;
    let p_with = subset_accuracy(x, y, &base.with(candidate), cfg, ratios, seed)?;
    let score = redundancy_index(p_base, p_with, DEFAULT_EPSILON)?;
    Ok(WrapperOutcome {
        score,
        p_base,
        p_with,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    /// Conditional mutual information in bits on quantile-binned columns.
    Cmi { bins: usize },
    /// `1 - R` of the wrapper redundancy index.
    Wrapper {
        model: ModelConfig,
        ratios: SplitRatios,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stop {
    pub max_features: Option<usize>,
    pub min_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    /// Feature added (forward) or removed (backward) this round.
    pub feature: usize,
    /// Gain of adding, or loss from removing, `feature`.
    pub gain: f64,
    /// Every candidate evaluated this round with its gain or loss.
    pub candidates: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub subset: FeatureSubset,
    pub trail: Vec<SelectionStep>,
}

struct Evaluator<'a> {
    x: &'a FeatureMatrix,
    y: &'a LabelVector,
    scorer: &'a Scorer,
    codes: Option<(CodedMatrix, Vec<u32>)>,
    seed: u64,
}

impl Evaluator<'_> {
    /// Information `candidate` adds on top of `base`.
    fn gain(&self, base: &FeatureSubset, candidate: usize) -> Result<f64> {
        match (self.scorer, &self.codes) {
            (Scorer::Cmi { .. }, Some((codes, y))) => {
                cmi_on_codes(codes, y, candidate, base.indices())
            }
            (Scorer::Wrapper { model, ratios }, _) => {
                let w = wrapper_redundancy(self.x, self.y, base, candidate, model, *ratios, self.seed)?;
                Ok(1.0 - w.score.r)
            }
            _ => unreachable!("codes are prepared for the CMI scorer"),
        }
    }
}

/// Greedy forward selection or backward elimination.
///
/// Forward adds the candidate with the largest gain until `max_features` is
/// reached or the best gain drops below `min_gain`. Backward drops the
/// feature whose removal loses least while the set exceeds `max_features` or
/// that loss is below `min_gain` (default: the scorer's noise slack). Ties go
/// to the lowest column index.
pub fn select_features(
    x: &FeatureMatrix,
    y: &LabelVector,
    mode: SelectionMode,
    stop: Stop,
    scorer: &Scorer,
    seed: u64,
) -> Result<SelectionResult> {
    y.ensure_len(x.rows())?;
    let codes = match scorer {
        Scorer::Cmi { bins } => Some((quantize_features(x, *bins, BinScheme::Quantile)?, y.codes())),
        Scorer::Wrapper { .. } => None,
    };
    let eval = Evaluator {
        x,
        y,
        scorer,
        codes,
        seed,
    };
    let m = x.cols();
    let mut trail = Vec::new();
    let subset = match mode {
        SelectionMode::Forward => {
            let mut selected = FeatureSubset::empty();
            let limit = stop.max_features.unwrap_or(m).min(m);
            while selected.len() < limit {
                let mut candidates = Vec::new();
                for j in (0..m).filter(|&j| !selected.contains(j)) {
                    candidates.push((j, eval.gain(&selected, j)?));
                }
                let Some(&(best, gain)) = candidates
                    .iter()
                    .fold(None, |acc: Option<&(usize, f64)>, c| match acc {
                        Some(a) if a.1 >= c.1 => Some(a),
                        _ => Some(c),
                    })
                else {
                    break;
                };
                if stop.min_gain.is_some_and(|g| gain < g) {
                    break;
                }
                selected = selected.with(best);
                trail.push(SelectionStep {
                    feature: best,
                    gain,
                    candidates,
                });
            }
            selected
        }
        SelectionMode::Backward => {
            let mut selected = FeatureSubset::all(m);
            let threshold = stop.min_gain.or(match (stop.max_features, scorer) {
                (Some(_), _) => None,
                (None, Scorer::Cmi { .. }) => Some(TAU_NUM),
                (None, Scorer::Wrapper { .. }) => Some(TAU_MODEL),
            });
            while !selected.is_empty() {
                let mut candidates = Vec::new();
                for &j in selected.indices() {
                    candidates.push((j, eval.gain(&selected.without(j), j)?));
                }
                let &(worst, loss) = candidates
                    .iter()
                    .fold(None, |acc: Option<&(usize, f64)>, c| match acc {
                        Some(a) if a.1 <= c.1 => Some(a),
                        _ => Some(c),
                    })
                    .expect("selected is nonempty");
                let must = stop.max_features.is_some_and(|mx| selected.len() > mx);
                let may = threshold.is_some_and(|t| loss < t);
                if !(must || may) {
                    break;
                }
                selected = selected.without(worst);
                trail.push(SelectionStep {
                    feature: worst,
                    gain: loss,
                    candidates,
                });
            }
            selected
        }
    };
    Ok(SelectionResult { subset, trail })
}
