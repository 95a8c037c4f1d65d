use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::metrics::balanced_accuracy;
use crate::{rng, Error, FeatureMatrix, LabelVector, MetricValue, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    #[serde(rename = "relu")]
    ReLU,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Self::ReLU => z.max(0.0),
            Self::Tanh => libm::tanh(z),
        }
    }

    /// Derivative expressed through the activation output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Self::ReLU => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tanh => 1.0 - a * a,
        }
    }
}

/// Fully connected network shape and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// `input, hidden..., classes`
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidArgument(String::from(
                "an MLP needs at least an input and an output layer",
            )));
        }
        if self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArgument(String::from("layer sizes must be >= 1")));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument(String::from("batch size must be >= 1")));
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn classes(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Parameter offsets: one entry per layer start plus the total.
    pub fn layout(&self) -> Vec<usize> {
        let mut offsets = vec![0];
        for w in self.layer_sizes.windows(2) {
            let last = *offsets.last().unwrap();
            offsets.push(last + w[0] * w[1] + w[1]);
        }
        offsets
    }

    pub fn n_params(&self) -> usize {
        *self.layout().last().unwrap()
    }

    /// Identifies the architecture, independent of training hyperparameters.
    pub fn architecture_tag(&self) -> String {
        let sizes: Vec<String> = self.layer_sizes.iter().map(|s| format!("{s}")).collect();
        format!("mlp:{}:{:?}", sizes.join("-"), self.activation)
    }
}

/// Flattened parameters. Each layer contributes its `out x in` weight block
/// (row-major) followed by its `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Vec<usize>,
    layer_sizes: Vec<usize>,
}

impl ParamVector {
    pub fn new(spec: &MlpSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        let layout = spec.layout();
        let n = *layout.last().unwrap();
        if values.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: values.len(),
            });
        }
        Ok(Self {
            values,
            layout,
            layer_sizes: spec.layer_sizes.clone(),
        })
    }

    pub fn zeros(spec: &MlpSpec) -> Result<Self> {
        Self::new(spec, vec![0.0; spec.n_params()])
    }

    /// Glorot-uniform weights `U(-a, a)`, `a = sqrt(6 / (fan_in + fan_out))`,
    /// and zero biases.
    pub fn init(spec: &MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut r = rng::derive(spec.seed, 1);
        let mut values = Vec::with_capacity(spec.n_params());
        for w in spec.layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let a = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            for _ in 0..fan_in * fan_out {
                values.push(r.random_range(-a..a));
            }
            values.extend(core::iter::repeat_n(0.0, fan_out));
        }
        Self::new(spec, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &[usize] {
        &self.layout
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Whether the flat index addresses a bias rather than a weight.
    pub fn is_bias(&self, idx: usize) -> bool {
        let layer = self.layout.partition_point(|&o| o <= idx) - 1;
        let out = self.layer_sizes[layer + 1];
        idx >= self.layout[layer + 1] - out
    }

    pub fn n_weights(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1]).sum()
    }

    pub(crate) fn check_spec(&self, spec: &MlpSpec) -> Result<()> {
        if self.layer_sizes != spec.layer_sizes {
            return Err(Error::ShapeMismatch {
                expected: spec.n_params(),
                found: self.values.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// Mean cross-entropy on the full training set before the first update.
    pub initial_loss: f64,
    /// Running mean of the minibatch losses, one entry per epoch.
    pub epoch_losses: Vec<f64>,
    /// Mean cross-entropy on the full training set after the last update.
    pub final_loss: f64,
}

struct Workspace {
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(sizes: &[usize]) -> Self {
        Self {
            pre: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            act: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            delta: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }
}

fn forward(p: &ParamVector, act_fn: Activation, x: &[f64], ws: &mut Workspace) {
    let sizes = &p.layer_sizes;
    let last = sizes.len() - 1;
    ws.act[0].copy_from_slice(x);
    for l in 0..last {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let base = p.layout[l];
        let w = &p.values[base..base + n_in * n_out];
        let b = &p.values[base + n_in * n_out..base + n_in * n_out + n_out];
        let (head, tail) = ws.act.split_at_mut(l + 1);
        let input = &head[l];
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            let z = b[o] + row.iter().zip(input).map(|(a, c)| a * c).sum::<f64>();
            ws.pre[l + 1][o] = z;
            tail[0][o] = if l + 1 == last { z } else { act_fn.apply(z) };
        }
    }
}

/// Softmax cross-entropy of the output layer; leaves `softmax - onehot` in
/// the output delta.
fn output_loss(ws: &mut Workspace, label: usize) -> f64 {
    let last = ws.act.len() - 1;
    let logits = &ws.act[last];
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| libm::exp(z - max)).sum();
    let log_norm = max + libm::log(sum);
    for (d, z) in ws.delta[last].iter_mut().zip(logits) {
        *d = libm::exp(z - log_norm);
    }
    ws.delta[last][label] -= 1.0;
    log_norm - logits[label]
}

fn backward(p: &ParamVector, act_fn: Activation, ws: &mut Workspace, grad: &mut [f64]) {
    let sizes = &p.layer_sizes;
    for l in (0..sizes.len() - 1).rev() {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let base = p.layout[l];
        for o in 0..n_out {
            let d = ws.delta[l + 1][o];
            let g = &mut grad[base + o * n_in..base + (o + 1) * n_in];
            for (gi, a) in g.iter_mut().zip(&ws.act[l]) {
                *gi += d * a;
            }
            grad[base + n_in * n_out + o] += d;
        }
        if l > 0 {
            let w = &p.values[base..base + n_in * n_out];
            for i in 0..n_in {
                let mut s = 0.0;
                for o in 0..n_out {
                    s += w[o * n_in + i] * ws.delta[l + 1][o];
                }
                ws.delta[l][i] = s * act_fn.derivative(ws.pre[l][i], ws.act[l][i]);
            }
        }
    }
}

fn check_data(spec: &MlpSpec, x: &FeatureMatrix, y: Option<&LabelVector>) -> Result<()> {
    if x.cols() != spec.inputs() {
        return Err(Error::ShapeMismatch {
            expected: spec.inputs(),
            found: x.cols(),
        });
    }
    if let Some(y) = y {
        y.ensure_len(x.rows())?;
        if y.n_classes() != spec.classes() {
            return Err(Error::ShapeMismatch {
                expected: spec.classes(),
                found: y.n_classes(),
            });
        }
    }
    Ok(())
}

/// Mean softmax cross-entropy over all rows and its gradient.
pub fn loss_and_gradient(
    spec: &MlpSpec,
    params: &ParamVector,
    x: &FeatureMatrix,
    y: &LabelVector,
) -> Result<(f64, Vec<f64>)> {
    params.check_spec(spec)?;
    check_data(spec, x, Some(y))?;
    let mut ws = Workspace::new(&spec.layer_sizes);
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    for (row, &label) in x.iter_rows().zip(y.labels()) {
        forward(params, spec.activation, row, &mut ws);
        loss += output_loss(&mut ws, label);
        backward(params, spec.activation, &mut ws, &mut grad);
    }
    let n = x.rows() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

fn mean_loss(spec: &MlpSpec, p: &ParamVector, x: &FeatureMatrix, y: &LabelVector) -> f64 {
    let mut ws = Workspace::new(&spec.layer_sizes);
    let total: f64 = x
        .iter_rows()
        .zip(y.labels())
        .map(|(row, &label)| {
            forward(p, spec.activation, row, &mut ws);
            output_loss(&mut ws, label)
        })
        .sum();
    total / x.rows() as f64
}

/// Minibatch gradient descent on softmax cross-entropy. Initialization and
/// the per-epoch shuffle both come from `spec.seed`, so identical inputs give
/// bitwise-identical parameters.
pub fn train_mlp(
    spec: &MlpSpec,
    x: &FeatureMatrix,
    y: &LabelVector,
) -> Result<(ParamVector, TrainingLog)> {
    spec.validate()?;
    check_data(spec, x, Some(y))?;
    let mut params = ParamVector::init(spec)?;
    let initial_loss = mean_loss(spec, &params, x, y);
    if !initial_loss.is_finite() {
        return Err(Error::DivergenceDetected { epoch: 0 });
    }
    let mut shuffle_rng = rng::derive(spec.seed, 2);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut ws = Workspace::new(&spec.layer_sizes);
    let mut grad = vec![0.0; params.len()];
    let mut epoch_losses = Vec::with_capacity(spec.epochs);
    for epoch in 0..spec.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(spec.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                forward(&params, spec.activation, x.row(i), &mut ws);
                epoch_loss += output_loss(&mut ws, y.labels()[i]);
                backward(&params, spec.activation, &mut ws, &mut grad);
            }
            let step = spec.learning_rate / batch.len() as f64;
            for (p, g) in params.values.iter_mut().zip(&grad) {
                *p -= step * g;
            }
        }
        let epoch_loss = epoch_loss / x.rows() as f64;
        if !epoch_loss.is_finite() || params.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DivergenceDetected { epoch });
        }
        epoch_losses.push(epoch_loss);
    }
    let final_loss = mean_loss(spec, &params, x, y);
    if !final_loss.is_finite() {
        return Err(Error::DivergenceDetected { epoch: spec.epochs });
    }
    Ok((
        params,
        TrainingLog {
            initial_loss,
            epoch_losses,
            final_loss,
        },
    ))
}

/// Argmax class per row; ties go to the lowest class id.
pub fn predict(spec: &MlpSpec, params: &ParamVector, x: &FeatureMatrix) -> Result<Vec<usize>> {
    params.check_spec(spec)?;
    check_data(spec, x, None)?;
    let mut ws = Workspace::new(&spec.layer_sizes);
    let last = spec.layer_sizes.len() - 1;
    Ok(x
        .iter_rows()
        .map(|row| {
            forward(params, spec.activation, row, &mut ws);
            argmax(&ws.act[last])
        })
        .collect())
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &z) in v.iter().enumerate() {
        if z > v[best] {
            best = i;
        }
    }
    best
}

pub fn evaluate_predictions(y: &LabelVector, pred: Vec<usize>) -> Result<MetricValue> {
    let pred = LabelVector::new(pred, y.n_classes())?;
    balanced_accuracy(y, &pred)
}

/// Balanced accuracy of the network's argmax predictions.
pub fn evaluate_model(
    params: &ParamVector,
    spec: &MlpSpec,
    x: &FeatureMatrix,
    y: &LabelVector,
) -> Result<MetricValue> {
    check_data(spec, x, Some(y))?;
    evaluate_predictions(y, predict(spec, params, x)?)
}
