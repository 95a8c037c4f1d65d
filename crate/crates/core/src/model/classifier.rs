use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::mlp::{evaluate_model, train_mlp, Activation, MlpSpec, ParamVector, TrainingLog};
use crate::{Error, FeatureMatrix, LabelVector, MetricValue, Result};

/// Architecture and optimizer settings shared by every classifier the
/// redundancy audits train; input and output widths come from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: vec![16],
            activation: Activation::ReLU,
            learning_rate: 0.05,
            epochs: 150,
            batch_size: 32,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self, inputs: usize, classes: usize, seed: u64) -> MlpSpec {
        let mut layer_sizes = vec![inputs];
        layer_sizes.extend_from_slice(&self.hidden);
        layer_sizes.push(classes);
        MlpSpec {
            layer_sizes,
            activation: self.activation,
            seed,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
        }
    }
}

/// Per-column z-scoring fitted on training rows. Constant columns are only
/// centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &FeatureMatrix) -> Self {
        let mean = x.column_means();
        let mut var = vec![0.0; x.cols()];
        for row in x.iter_rows() {
            for ((v, m), r) in var.iter_mut().zip(&mean).zip(row) {
                *v += (r - m) * (r - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = libm::sqrt(v / x.rows() as f64);
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::ShapeMismatch {
                expected: self.mean.len(),
                found: x.cols(),
            });
        }
        let data = x
            .iter_rows()
            .flat_map(|row| {
                row.iter()
                    .zip(&self.mean)
                    .zip(&self.scale)
                    .map(|((v, m), s)| (v - m) / s)
            })
            .collect();
        FeatureMatrix::new(x.rows(), x.cols(), data, x.col_names().to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredModel {
    pub spec: MlpSpec,
    pub params: ParamVector,
    pub scaler: Standardizer,
    pub log: TrainingLog,
    /// Balanced accuracy on the evaluation rows.
    pub score: MetricValue,
}

impl ScoredModel {
    pub fn evaluate(&self, x: &FeatureMatrix, y: &LabelVector) -> Result<MetricValue> {
        evaluate_model(&self.params, &self.spec, &self.scaler.apply(x)?, y)
    }
}

/// Standardizes on the training rows, trains, and scores on the evaluation
/// rows.
pub fn fit_and_score(
    cfg: &ModelConfig,
    x_train: &FeatureMatrix,
    y_train: &LabelVector,
    x_eval: &FeatureMatrix,
    y_eval: &LabelVector,
    seed: u64,
) -> Result<ScoredModel> {
    let scaler = Standardizer::fit(x_train);
    let spec = cfg.spec(x_train.cols(), y_train.n_classes(), seed);
    let (params, log) = train_mlp(&spec, &scaler.apply(x_train)?, y_train)?;
    let score = evaluate_model(&params, &spec, &scaler.apply(x_eval)?, y_eval)?;
    Ok(ScoredModel {
        spec,
        params,
        scaler,
        log,
        score,
    })
}
