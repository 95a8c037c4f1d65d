//! Redundancy between two sensors: mutual information of their feature
//! sets, how well one set predicts the other, and whether either sensor can
//! be dropped at inference without losing accuracy.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::feature::{pca_fit, pca_transform};
use crate::linalg::cholesky_solve;
use crate::metrics::{joint_entropy, quantize_features, BinScheme};
use crate::model::{fit_and_score, ModelConfig, Standardizer};
use crate::split::{stratified_split, SplitRatios};
use crate::{
    redundancy_index, rng, Error, FeatureMatrix, LabelVector, MetricValue, RedundancyScore,
    Result, DEFAULT_EPSILON, TAU_MODEL,
};

/// Dimensions kept per side before joint binning.
pub const DEFAULT_MAX_DIMS: usize = 2;

fn check_registered(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::NotRegistered {
            left: a.rows(),
            right: b.rows(),
        });
    }
    Ok(())
}

fn reduce(x: &FeatureMatrix, max_dims: usize) -> Result<FeatureMatrix> {
    if x.cols() <= max_dims {
        return Ok(x.clone());
    }
    let k = max_dims.min(x.rows().saturating_sub(1)).max(1);
    pca_transform(&pca_fit(x, k)?, x)
}

/// Entropies in bits of the coded visual side, the coded audio side and
/// their joint code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorEntropies {
    pub visual: f64,
    pub audio: f64,
    pub joint: f64,
}

impl SensorEntropies {
    pub fn mutual_information(&self) -> f64 {
        (self.visual + self.audio - self.joint).max(0.0)
    }
}

/// Each side is projected onto at most `max_dims` principal axes,
/// quantile-binned per axis, and treated as one joint variable.
pub fn cross_sensor_entropies(
    f_v: &FeatureMatrix,
    f_a: &FeatureMatrix,
    bins: usize,
    max_dims: usize,
) -> Result<SensorEntropies> {
    check_registered(f_v, f_a)?;
    if max_dims == 0 {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "max_dims must be at least 1",
        )));
    }
    let cv = quantize_features(&reduce(f_v, max_dims)?, bins, BinScheme::Quantile)?;
    let ca = quantize_features(&reduce(f_a, max_dims)?, bins, BinScheme::Quantile)?;
    let v: Vec<&[u32]> = (0..cv.cols()).map(|j| cv.column(j)).collect();
    let a: Vec<&[u32]> = (0..ca.cols()).map(|j| ca.column(j)).collect();
    let both: Vec<&[u32]> = v.iter().chain(&a).copied().collect();
    Ok(SensorEntropies {
        visual: joint_entropy(&v)?,
        audio: joint_entropy(&a)?,
        joint: joint_entropy(&both)?,
    })
}

/// `I(F_V; F_A)` in bits, coded as in [`cross_sensor_entropies`].
pub fn cross_sensor_mi(
    f_v: &FeatureMatrix,
    f_a: &FeatureMatrix,
    bins: usize,
    max_dims: usize,
) -> Result<f64> {
    Ok(cross_sensor_entropies(f_v, f_a, bins, max_dims)?.mutual_information())
}

/// Affine map `y = W x + b` fitted by ridge regression on centered data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeMap {
    /// `outputs x inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub lambda: f64,
    pub inputs: usize,
    pub outputs: usize,
}

impl RidgeMap {
    /// Solves `(XᵀX + λI) W = XᵀY` on centered `x`, `y`. Without `lambda`
    /// the penalty is `1e-3 · trace(XᵀX) / inputs`.
    pub fn fit(x: &FeatureMatrix, y: &FeatureMatrix, lambda: Option<f64>) -> Result<Self> {
        check_registered(x, y)?;
        let (n, m, r) = (x.rows(), x.cols(), y.cols());
        let xm = x.column_means();
        let ym = y.column_means();
        let mut g = vec![0.0; m * m];
        let mut b = vec![0.0; m * r];
        let mut xc = vec![0.0; m];
        for i in 0..n {
            for (c, (v, mu)) in xc.iter_mut().zip(x.row(i).iter().zip(&xm)) {
                *c = v - mu;
            }
            let yr = y.row(i);
            for p in 0..m {
                let xp = xc[p];
                for q in p..m {
                    g[p * m + q] += xp * xc[q];
                }
                for o in 0..r {
                    b[p * r + o] += xp * (yr[o] - ym[o]);
                }
            }
        }
        for p in 0..m {
            for q in 0..p {
                g[p * m + q] = g[q * m + p];
            }
        }
        let lambda = match lambda {
            Some(l) if l > 0.0 && l.is_finite() => l,
            Some(l) => {
                return Err(Error::InvalidArgument(alloc::format!(
                    "ridge penalty must be positive, got {l}"
                )))
            }
            None => {
                let trace: f64 = (0..m).map(|p| g[p * m + p]).sum();
                let l = 1e-3 * trace / m as f64;
                if l > 0.0 {
                    l
                } else {
                    1e-12
                }
            }
        };
        for p in 0..m {
            g[p * m + p] += lambda;
        }
        let sol = cholesky_solve(&g, m, &b, r)?;
        let mut weights = vec![0.0; r * m];
        for p in 0..m {
            for o in 0..r {
                weights[o * m + p] = sol[p * r + o];
            }
        }
        let bias = (0..r)
            .map(|o| ym[o] - (0..m).map(|p| weights[o * m + p] * xm[p]).sum::<f64>())
            .collect();
        Ok(Self {
            weights,
            bias,
            lambda,
            inputs: m,
            outputs: r,
        })
    }

    pub fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                self.bias[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.cols() != self.inputs {
            return Err(Error::ShapeMismatch {
                expected: self.inputs,
                found: x.cols(),
            });
        }
        let data = x.iter_rows().flat_map(|row| self.predict_row(row)).collect();
        FeatureMatrix::from_vec(x.rows(), self.outputs, data)
    }

    /// Mean squared error over every output of every row.
    pub fn mse(&self, x: &FeatureMatrix, y: &FeatureMatrix) -> Result<f64> {
        check_registered(x, y)?;
        if y.cols() != self.outputs {
            return Err(Error::ShapeMismatch {
                expected: self.outputs,
                found: y.cols(),
            });
        }
        let pred = self.predict(x)?;
        let sse: f64 = pred
            .data()
            .iter()
            .zip(y.data())
            .map(|(p, t)| (p - t) * (p - t))
            .sum();
        Ok(sse / y.data().len() as f64)
    }
}

/// Fits `d_v -> d_a` on a seeded share of the rows and reports the
/// held-out MSE on the remaining `holdout` fraction.
pub fn mapping_fit_mse(
    d_v: &FeatureMatrix,
    d_a: &FeatureMatrix,
    lambda: Option<f64>,
    holdout: f64,
    seed: u64,
) -> Result<(RidgeMap, f64)> {
    check_registered(d_v, d_a)?;
    let n = d_v.rows();
    if n < 10 {
        return Err(Error::TooFewSamples { needed: 10, got: n });
    }
    if !(holdout > 0.0 && holdout < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "holdout fraction must be in (0, 1), got {holdout}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::derive(seed, 0x5e45));
    let n_test = (libm::round(n as f64 * holdout) as usize).clamp(1, n - 1);
    let (test, train) = idx.split_at(n_test);
    let map = RidgeMap::fit(&d_v.select_rows(train)?, &d_a.select_rows(train)?, lambda)?;
    let mse = map.mse(&d_v.select_rows(test)?, &d_a.select_rows(test)?)?;
    Ok((map, mse))
}

/// Redundancy of the second sensor given the first: `before` is the
/// single-sensor accuracy, `after` the fused one.
pub fn cross_sensor_performance_redundancy(
    acc_with: MetricValue,
    acc_without: MetricValue,
) -> Result<RedundancyScore> {
    for m in [acc_with, acc_without] {
        if !(0.0..=1.0).contains(&m.value) {
            return Err(Error::InvalidMetric(m.value));
        }
    }
    redundancy_index(acc_without, acc_with, DEFAULT_EPSILON)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Visual,
    Audio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictBasis {
    PerformanceDelta,
    MappingMse,
    MutualInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recommendation {
    Keep,
    RemovableAtInference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorVerdict {
    pub sensor_id: Modality,
    pub r: RedundancyScore,
    pub basis: VerdictBasis,
    pub recommendation: Recommendation,
    /// Held-out MSE of predicting this sensor's standardized features from
    /// the other sensor's.
    pub mapping_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorAssessment {
    pub visual: SensorVerdict,
    pub audio: SensorVerdict,
    pub acc_visual: MetricValue,
    pub acc_audio: MetricValue,
    pub acc_fusion: MetricValue,
}

impl SensorAssessment {
    pub fn verdicts(&self) -> [&SensorVerdict; 2] {
        [&self.visual, &self.audio]
    }
}

fn verdict(
    sensor_id: Modality,
    fused: MetricValue,
    other_only: MetricValue,
    mapping_mse: Option<f64>,
) -> Result<SensorVerdict> {
    let r = cross_sensor_performance_redundancy(fused, other_only)?;
    let recommendation = if r.r >= 1.0 - TAU_MODEL {
        Recommendation::RemovableAtInference
    } else {
        Recommendation::Keep
    };
    Ok(SensorVerdict {
        sensor_id,
        r,
        basis: VerdictBasis::PerformanceDelta,
        recommendation,
        mapping_mse,
    })
}

/// Trains visual-only, audio-only and fused classifiers on one 8:1:1 split
/// and judges each sensor by what the fused model gains over the other
/// sensor alone. Scores are test-split balanced accuracies.
pub fn recommend_sensor_removal(
    x_v: &FeatureMatrix,
    x_a: &FeatureMatrix,
    y: &LabelVector,
    model_cfg: &ModelConfig,
    seed: u64,
) -> Result<SensorAssessment> {
    check_registered(x_v, x_a)?;
    y.ensure_len(x_v.rows())?;
    let split = stratified_split(y, SplitRatios::default(), seed)?;
    let (y_tr, y_te) = (y.select(&split.train), y.select(&split.test));
    let fused = x_v.hstack(x_a)?;
    let score = |x: &FeatureMatrix| -> Result<MetricValue> {
        let m = fit_and_score(
            model_cfg,
            &x.select_rows(&split.train)?,
            &y_tr,
            &x.select_rows(&split.test)?,
            &y_te,
            seed,
        )?;
        Ok(m.score)
    };
    let acc_visual = score(x_v)?;
    let acc_audio = score(x_a)?;
    let acc_fusion = score(&fused)?;

    let zv = Standardizer::fit(x_v).apply(x_v)?;
    let za = Standardizer::fit(x_a).apply(x_a)?;
    let tv = zv.select_rows(&split.train)?;
    let ta = za.select_rows(&split.train)?;
    let mse = |from: &FeatureMatrix, to: &FeatureMatrix| {
        mapping_fit_mse(from, to, None, 0.2, seed).ok().map(|(_, e)| e)
    };
    let audio_mse = mse(&tv, &ta);
    let visual_mse = mse(&ta, &tv);

    Ok(SensorAssessment {
        visual: verdict(Modality::Visual, acc_fusion, acc_audio, visual_mse)?,
        audio: verdict(Modality::Audio, acc_fusion, acc_visual, audio_mse)?,
        acc_visual,
        acc_audio,
        acc_fusion,
    })
}
