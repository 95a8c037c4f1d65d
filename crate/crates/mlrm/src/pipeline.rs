//! The staged mitigation pipeline: registration, feature extraction,
//! sample downsampling and synthesis, sensor removal, feature selection,
//! capacity search and pruning, each optional and always run in that order.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use mlrm_core::feature::{pca_fit, pca_transform, select_features, Scorer, SelectionMode, Stop};
use mlrm_core::metrics::{DistanceMetric, DEFAULT_EPSILON};
use mlrm_core::model::{
    capacity_search_holdout, evaluate_masked, fit_and_score, l1_prune_search, ModelConfig,
    PruneMask, ScoredModel,
};
use mlrm_core::sample::{
    greedy_diverse_subset, group_stats, holistic_redundancy, smote_oversample, HolisticMeasure,
    HolisticParams, SubgroupPartition, DEFAULT_SMOTE_K,
};
use mlrm_core::sensor::{cross_sensor_mi, recommend_sensor_removal, Recommendation};
use mlrm_core::signal::{
    block_resize, downscale_sweep, register_streams, resize_to, stft_magnitude, AlignedPair,
    Spectrogram, DEFAULT_DRIFT_TOL,
};
use mlrm_core::split::{stratified_split, Split, SplitRatios};
use mlrm_core::{Direction, FeatureMatrix, LabelVector, RedundancyScore};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::manifest::LoadedDataset;
use crate::mlpk::encode_mlpk;
use crate::report::{FinalMetrics, RedundancyReport, StageKind, StageRecord, StageStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageEntry {
    pub stage: StageKind,
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub params: serde_json::Value,
}

fn yes() -> bool {
    true
}

/// Pipeline configuration as written by users. Stages not listed are
/// disabled; listing order does not matter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub split_ratios: SplitRatios,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Principal components kept per sensor for the classifier stages;
    /// 0 keeps the raw features.
    #[serde(default = "default_pca_k")]
    pub pca_k: usize,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub stages: Vec<StageEntry>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_pca_k() -> usize {
    32
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            split_ratios: SplitRatios::default(),
            epsilon: DEFAULT_EPSILON,
            pca_k: default_pca_k(),
            model: ModelConfig::default(),
            stages: Vec::new(),
        }
    }
}

impl PipelineConfig {
    /// Every stage enabled with default parameters.
    pub fn all_stages(seed: u64) -> Self {
        Self {
            seed,
            stages: StageKind::ALL
                .iter()
                .map(|&stage| StageEntry {
                    stage,
                    enabled: true,
                    params: serde_json::Value::Null,
                })
                .collect(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegisterParams {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureExtractParams {
    pub sizes: Vec<usize>,
    pub drift_tol: f64,
    pub window: usize,
    pub hop: usize,
}

impl Default for FeatureExtractParams {
    fn default() -> Self {
        Self {
            sizes: vec![20, 40, 80, 160, 320],
            drift_tol: DEFAULT_DRIFT_TOL,
            window: 256,
            hop: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownsampleParams {
    /// Share of each class's training rows to keep.
    pub keep_fraction: f64,
    pub metric: DistanceMetric,
}

impl Default for DownsampleParams {
    fn default() -> Self {
        Self {
            keep_fraction: 0.75,
            metric: DistanceMetric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeParams {
    pub target_ratio: f64,
    pub k: usize,
}

impl Default for SynthesizeParams {
    fn default() -> Self {
        Self {
            target_ratio: 1.0,
            k: DEFAULT_SMOTE_K,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorEnhanceParams {}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReprocessParams {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSelectParams {
    pub bins: usize,
    pub max_features: Option<usize>,
    pub min_gain: Option<f64>,
}

impl Default for FeatureSelectParams {
    fn default() -> Self {
        Self {
            bins: 8,
            max_features: None,
            min_gain: Some(0.01),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacitySearchParams {
    pub widths: Vec<usize>,
    pub tol: f64,
}

impl Default for CapacitySearchParams {
    fn default() -> Self {
        Self {
            widths: vec![4, 8, 16, 32, 64],
            tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneParams {
    pub step: f64,
    pub tol: f64,
}

impl Default for PruneParams {
    fn default() -> Self {
        Self {
            step: 0.01,
            tol: 0.01,
        }
    }
}

/// A validated configuration with typed parameters for every enabled stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub split_ratios: SplitRatios,
    pub epsilon: f64,
    pub pca_k: usize,
    pub model: ModelConfig,
    pub register: Option<RegisterParams>,
    pub feature_extract: Option<FeatureExtractParams>,
    pub downsample: Option<DownsampleParams>,
    pub synthesize: Option<SynthesizeParams>,
    pub sensor_enhance: Option<SensorEnhanceParams>,
    pub reprocess: Option<ReprocessParams>,
    pub feature_select: Option<FeatureSelectParams>,
    pub capacity_search: Option<CapacitySearchParams>,
    pub prune: Option<PruneParams>,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot prepare data: {0}")]
    Data(String),
}

fn params<T: DeserializeOwned + Default>(
    entries: &BTreeMap<StageKind, &StageEntry>,
    stage: StageKind,
) -> Result<Option<T>, PipelineError> {
    match entries.get(&stage) {
        Some(e) if e.enabled => {
            if e.params.is_null() {
                return Ok(Some(T::default()));
            }
            serde_json::from_value(e.params.clone())
                .map(Some)
                .map_err(|err| PipelineError::Config(format!("{} params: {err}", stage.name())))
        }
        _ => Ok(None),
    }
}

impl ResolvedConfig {
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        cfg.split_ratios
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", cfg.epsilon));
        }
        let mut entries = BTreeMap::new();
        for e in &cfg.stages {
            if entries.insert(e.stage, e).is_some() {
                return bad(format!("stage {} listed twice", e.stage.name()));
            }
        }
        let r = Self {
            seed: cfg.seed,
            split_ratios: cfg.split_ratios,
            epsilon: cfg.epsilon,
            pca_k: cfg.pca_k,
            model: cfg.model.clone(),
            register: params(&entries, StageKind::Register)?,
            feature_extract: params(&entries, StageKind::FeatureExtract)?,
            downsample: params(&entries, StageKind::Downsample)?,
            synthesize: params(&entries, StageKind::Synthesize)?,
            sensor_enhance: params(&entries, StageKind::SensorEnhance)?,
            reprocess: params(&entries, StageKind::Reprocess)?,
            feature_select: params(&entries, StageKind::FeatureSelect)?,
            capacity_search: params(&entries, StageKind::CapacitySearch)?,
            prune: params(&entries, StageKind::Prune)?,
        };
        if let Some(d) = &r.downsample {
            if !(d.keep_fraction > 0.0 && d.keep_fraction <= 1.0) {
                return bad(format!("keep_fraction must be in (0, 1], got {}", d.keep_fraction));
            }
        }
        if let Some(f) = &r.feature_extract {
            if f.sizes.is_empty() || f.sizes.windows(2).any(|w| w[0] >= w[1]) {
                return bad("feature_extract sizes must be nonempty and ascending".into());
            }
        }
        Ok(r)
    }

    pub fn enabled(&self, stage: StageKind) -> bool {
        match stage {
            StageKind::Register => self.register.is_some(),
            StageKind::FeatureExtract => self.feature_extract.is_some(),
            StageKind::Downsample => self.downsample.is_some(),
            StageKind::Synthesize => self.synthesize.is_some(),
            StageKind::SensorEnhance => self.sensor_enhance.is_some(),
            StageKind::Reprocess => self.reprocess.is_some(),
            StageKind::FeatureSelect => self.feature_select.is_some(),
            StageKind::CapacitySearch => self.capacity_search.is_some(),
            StageKind::Prune => self.prune.is_some(),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
enum Sensor {
    Visual,
    Audio,
}

/// Per-sample features of both sensors for every registered pair.
struct Extracted {
    visual: FeatureMatrix,
    audio: FeatureMatrix,
    /// Stored bytes per sample in the current representation.
    visual_bytes: u64,
    audio_bytes: u64,
}

/// Classifier-ready rows for the three splits.
struct Active {
    train: (FeatureMatrix, LabelVector),
    val: (FeatureMatrix, LabelVector),
    test: (FeatureMatrix, LabelVector),
    synthetic_used: usize,
    dims: BTreeMap<Sensor, usize>,
}

struct State<'a> {
    cfg: &'a ResolvedConfig,
    pairs: Vec<AlignedPair>,
    y: LabelVector,
    split: Split,
    features: Option<Extracted>,
    train: Vec<usize>,
    synthetic: Option<(FeatureMatrix, LabelVector)>,
    sensors: BTreeSet<Sensor>,
    active: Option<Active>,
    selected: Option<Vec<usize>>,
    model: ModelConfig,
    trained: Option<ScoredModel>,
    mask: Option<PruneMask>,
}

type StageResult = Result<(), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn unit_pixels(px: &[u8]) -> Vec<f64> {
    px.iter().map(|&p| p as f64 / 255.0).collect()
}

fn log_spectrogram(samples: &[f64], window: usize, hop: usize) -> mlrm_core::Result<Spectrogram> {
    let mag = stft_magnitude(samples, window, hop)?;
    let data = mag.data().iter().map(|v| v.ln_1p()).collect();
    Spectrogram::new(mag.rows(), mag.cols(), data)
}

fn set_score(rec: &mut StageRecord, before: f64, after: f64, direction: Direction, score: RedundancyScore) {
    rec.p_before = Some(before);
    rec.p_after = Some(after);
    rec.direction = Some(direction);
    rec.r = Some(score.r);
    rec.interpretation = Some(score.interpretation);
}

impl<'a> State<'a> {
    fn features(&mut self) -> Result<&Extracted, String> {
        if self.features.is_none() {
            self.features = Some(self.raw_features()?);
        }
        Ok(self.features.as_ref().expect("just set"))
    }

    /// Full-resolution pixels and the shortest common audio window.
    fn raw_features(&self) -> Result<Extracted, String> {
        let n = self.pairs.len();
        let f0 = &self.pairs[0].frame;
        let (w, h) = (f0.width(), f0.height());
        if self.pairs.iter().any(|p| p.frame.width() != w || p.frame.height() != h) {
            return Err("frames differ in size".into());
        }
        let visual: Vec<f64> = self.pairs.iter().flat_map(|p| unit_pixels(p.frame.pixels())).collect();
        let len = self.pairs.iter().map(|p| p.snippet.samples().len()).min().unwrap_or(0);
        let audio: Vec<f64> = self
            .pairs
            .iter()
            .flat_map(|p| p.snippet.samples()[..len].iter().copied())
            .collect();
        Ok(Extracted {
            visual: FeatureMatrix::from_vec(n, w * h, visual).map_err(err)?,
            audio: FeatureMatrix::from_vec(n, len, audio).map_err(err)?,
            visual_bytes: (w * h) as u64,
            audio_bytes: 2 * len as u64,
        })
    }

    fn modality(&mut self, s: Sensor) -> Result<FeatureMatrix, String> {
        let f = self.features()?;
        Ok(match s {
            Sensor::Visual => f.visual.clone(),
            Sensor::Audio => f.audio.clone(),
        })
    }

    fn bytes_per_sample(&self) -> u64 {
        let Some(f) = &self.features else {
            return 0;
        };
        self.sensors
            .iter()
            .map(|s| match s {
                Sensor::Visual => f.visual_bytes,
                Sensor::Audio => f.audio_bytes,
            })
            .sum()
    }

    fn n_synthetic(&self) -> usize {
        self.synthetic.as_ref().map_or(0, |(x, _)| x.rows())
    }

    /// Projects one sensor's features onto principal axes fitted on its
    /// training rows (synthetic rows included when `with_synthetic`).
    /// Returns the projection of every real row and of the synthetic rows.
    fn project(
        &mut self,
        s: Sensor,
        with_synthetic: bool,
    ) -> Result<(FeatureMatrix, Option<FeatureMatrix>), String> {
        let x = self.modality(s)?;
        let mut fit_rows = x.select_rows(&self.train).map_err(err)?;
        let synth = match (&self.synthetic, with_synthetic) {
            (Some((sx, _)), true) => Some(sx.clone()),
            _ => None,
        };
        if let Some(sx) = &synth {
            fit_rows = fit_rows.vstack(sx).map_err(err)?;
        }
        let k = self.cfg.pca_k.min(fit_rows.rows().saturating_sub(1)).min(fit_rows.cols());
        if self.cfg.pca_k == 0 || k == 0 {
            return Ok((x, synth));
        }
        let model = pca_fit(&fit_rows, k).map_err(err)?;
        let all = pca_transform(&model, &x).map_err(err)?;
        let synth = match synth {
            Some(sx) => Some(pca_transform(&model, &sx).map_err(err)?),
            None => None,
        };
        Ok((all, synth))
    }

    fn active(&mut self) -> Result<&Active, String> {
        if self.active.is_none() {
            let a = self.build_active()?;
            self.active = Some(a);
        }
        Ok(self.active.as_ref().expect("just set"))
    }

    fn build_active(&mut self) -> Result<Active, String> {
        let sensors: Vec<Sensor> = self.sensors.iter().copied().collect();
        // synthetic rows exist only for the visual sensor
        let with_synth = sensors == [Sensor::Visual] && self.synthetic.is_some();
        let mut all: Option<FeatureMatrix> = None;
        let mut synth: Option<FeatureMatrix> = None;
        let mut dims = BTreeMap::new();
        for &s in &sensors {
            let (x, sx) = self.project(s, with_synth)?;
            dims.insert(s, x.cols());
            all = Some(match all {
                None => x,
                Some(prev) => prev.hstack(&x).map_err(err)?,
            });
            synth = sx;
        }
        let mut all = all.ok_or("no sensors left")?;
        if let Some(cols) = &self.selected {
            all = all.select_columns(cols).map_err(err)?;
            synth = match synth {
                Some(s) => Some(s.select_columns(cols).map_err(err)?),
                None => None,
            };
        }
        let rows = |idx: &[usize]| -> Result<(FeatureMatrix, LabelVector), String> {
            Ok((all.select_rows(idx).map_err(err)?, self.y.select(idx)))
        };
        let mut train = rows(&self.train)?;
        let mut synthetic_used = 0;
        if let (true, Some(sx), Some((_, sy))) = (with_synth, synth, &self.synthetic) {
            synthetic_used = sx.rows();
            let mut labels = train.1.labels().to_vec();
            labels.extend_from_slice(sy.labels());
            train = (
                train.0.vstack(&sx).map_err(err)?,
                LabelVector::new(labels, self.y.n_classes()).map_err(err)?,
            );
        }
        Ok(Active {
            train,
            val: rows(&self.split.val)?,
            test: rows(&self.split.test)?,
            synthetic_used,
            dims,
        })
    }

    fn invalidate(&mut self) {
        self.active = None;
        self.trained = None;
        self.mask = None;
    }

    fn train_model(&mut self) -> Result<(), String> {
        if self.trained.is_some() {
            return Ok(());
        }
        let seed = self.cfg.seed;
        let model = self.model.clone();
        let a = self.active()?;
        let m = fit_and_score(&model, &a.train.0, &a.train.1, &a.val.0, &a.val.1, seed).map_err(err)?;
        self.trained = Some(m);
        Ok(())
    }

    fn register(&mut self, rec: &mut StageRecord, data: &LoadedDataset) -> StageResult {
        let n_frames = match &data.video {
            mlrm_core::signal::SensorStream::Image { frames, .. } => frames,
            _ => unreachable!("manifest video is an image stream"),
        };
        let raw_pixels: u64 = n_frames.iter().map(|f| (f.width() * f.height()) as u64).sum();
        let audio_len = match &data.audio {
            mlrm_core::signal::SensorStream::Audio { clip } => clip.samples().len(),
            _ => unreachable!("manifest audio is an audio stream"),
        };
        rec.input("frames", n_frames.len());
        rec.input("audio_samples", audio_len);
        rec.input("camera_rate_hz", data.video.nominal_rate());
        rec.input("audio_rate_hz", data.audio.nominal_rate());
        rec.input("pairs", self.pairs.len());
        rec.input("dropped_frames", n_frames.len() - self.pairs.len());
        rec.bytes_in = raw_pixels + 2 * audio_len as u64;
        rec.bytes_out = self
            .pairs
            .iter()
            .map(|p| (p.frame.pixels().len() + 2 * p.snippet.samples().len()) as u64)
            .sum();
        Ok(())
    }

    fn feature_extract(&mut self, rec: &mut StageRecord, p: &FeatureExtractParams) -> StageResult {
        let frames: Vec<_> = self.pairs.iter().map(|a| a.frame.clone()).collect();
        let specs: Vec<Spectrogram> = self
            .pairs
            .par_iter()
            .map(|a| log_spectrogram(a.snippet.samples(), p.window, p.hop))
            .collect::<mlrm_core::Result<_>>()
            .map_err(err)?;
        let sweep = downscale_sweep(&frames, &specs, &p.sizes, p.drift_tol).map_err(err)?;
        let vs = sweep.visual.recommended.ok_or("no producible image size")?;
        let as_ = sweep.audio.recommended.ok_or("no producible spectrogram size")?;
        let step = sweep
            .visual
            .recommended_vs_reference
            .ok_or("no recommended visual step")?;
        let stats = |size: usize| {
            sweep
                .visual
                .sizes
                .iter()
                .find(|r| r.size == size)
                .and_then(|r| r.stats)
                .expect("recommended sizes have statistics")
        };
        let reference = sweep.visual.reference.expect("recommended implies reference");
        set_score(rec, stats(vs).min, stats(reference).min, Direction::LowerIsBetter, step.score);

        let visual: Vec<Vec<f64>> = frames
            .par_iter()
            .map(|f| resize_to(f, vs).map(|r| unit_pixels(r.pixels())))
            .collect::<mlrm_core::Result<_>>()
            .map_err(err)?;
        let audio: Vec<Vec<f64>> = specs
            .par_iter()
            .map(|s| block_resize(s, as_, as_).map(|r| unit_pixels(r.to_image().pixels())))
            .collect::<mlrm_core::Result<_>>()
            .map_err(err)?;
        let n = frames.len();
        let bytes_full: u64 = frames.iter().map(|f| f.pixels().len() as u64).sum();
        let audio_in: u64 = self.pairs.iter().map(|a| 2 * a.snippet.samples().len() as u64).sum();
        rec.bytes_in = bytes_full;
        rec.bytes_out = (n * vs * vs) as u64;
        rec.input("sweep", &sweep);
        rec.input("visual_size", vs);
        rec.input("audio_size", as_);
        rec.input("reference_size", reference);
        rec.input("pixel_reduction", bytes_full as f64 / rec.bytes_out as f64);
        rec.input("audio_bytes_in", audio_in);
        rec.input("audio_bytes_out", (n * as_ * as_) as u64);
        rec.input("window", p.window);
        rec.input("hop", p.hop);
        self.features = Some(Extracted {
            visual: FeatureMatrix::from_rows(&visual).map_err(err)?,
            audio: FeatureMatrix::from_rows(&audio).map_err(err)?,
            visual_bytes: (vs * vs) as u64,
            audio_bytes: (as_ * as_) as u64,
        });
        self.invalidate();
        Ok(())
    }

    fn joint_train_features(&mut self) -> Result<FeatureMatrix, String> {
        let v = self.modality(Sensor::Visual)?;
        let a = self.modality(Sensor::Audio)?;
        let keep: Vec<Sensor> = self.sensors.iter().copied().collect();
        let parts: Vec<FeatureMatrix> = keep
            .iter()
            .map(|s| match s {
                Sensor::Visual => v.select_rows(&self.train),
                Sensor::Audio => a.select_rows(&self.train),
            })
            .collect::<mlrm_core::Result<_>>()
            .map_err(err)?;
        let mut it = parts.into_iter();
        let first = it.next().ok_or("no sensors left")?;
        it.try_fold(first, |acc, m| acc.hstack(&m)).map_err(err)
    }

    fn downsample(&mut self, rec: &mut StageRecord, p: &DownsampleParams) -> StageResult {
        let x = self.joint_train_features()?;
        let y = self.y.select(&self.train);
        let mut kept_local = Vec::new();
        for class in 0..y.n_classes() {
            let members: Vec<usize> = (0..y.len()).filter(|&i| y.labels()[i] == class).collect();
            if members.is_empty() {
                continue;
            }
            let target = ((members.len() as f64 * p.keep_fraction).ceil() as usize)
                .clamp(members.len().min(2), members.len());
            let sub = x.select_rows(&members).map_err(err)?;
            let pick = greedy_diverse_subset(&sub, target, p.metric, self.cfg.seed).map_err(err)?;
            kept_local.extend(pick.into_iter().map(|i| members[i]));
        }
        kept_local.sort_unstable();
        let removed_local: Vec<usize> = (0..y.len()).filter(|i| kept_local.binary_search(i).is_err()).collect();
        let bps = self.bytes_per_sample();
        rec.input("train_rows", y.len());
        rec.input("kept_rows", kept_local.len());
        rec.input("keep_fraction", p.keep_fraction);
        rec.input("measure", HolisticMeasure::Diversity);
        rec.bytes_in = y.len() as u64 * bps;
        rec.bytes_out = kept_local.len() as u64 * bps;
        if !removed_local.is_empty() {
            let params = HolisticParams {
                metric: p.metric,
                seed: self.cfg.seed,
                epsilon: self.cfg.epsilon,
                ..HolisticParams::default()
            };
            let out = holistic_redundancy(
                &x.select_rows(&kept_local).map_err(err)?,
                &x.select_rows(&removed_local).map_err(err)?,
                HolisticMeasure::Diversity,
                &params,
            )
            .map_err(err)?;
            set_score(rec, out.p_before, out.p_after, Direction::HigherIsBetter, out.score);
        }
        self.train = kept_local.iter().map(|&i| self.train[i]).collect();
        self.invalidate();
        Ok(())
    }

    fn synthesize(&mut self, rec: &mut StageRecord, p: &SynthesizeParams) -> StageResult {
        let v = self.modality(Sensor::Visual)?;
        let x = v.select_rows(&self.train).map_err(err)?;
        let y = self.y.select(&self.train);
        let (xs, ys) = smote_oversample(&x, &y, p.target_ratio, p.k, self.cfg.seed).map_err(err)?;
        let n_real = x.rows();
        let n_new = xs.rows() - n_real;
        let disparity = |counts: Vec<usize>| -> Result<f64, String> {
            let named: Vec<(String, usize)> = counts
                .into_iter()
                .enumerate()
                .filter(|(_, c)| *c > 0)
                .map(|(i, c)| (format!("class{i}"), c))
                .collect();
            Ok(group_stats(&SubgroupPartition::from_counts(&named).map_err(err)?)
                .map_err(err)?
                .max_disparity())
        };
        rec.input("class_counts_before", y.counts());
        rec.input("class_counts_after", ys.counts());
        rec.input("disparity_before", disparity(y.counts())?);
        rec.input("disparity_after", disparity(ys.counts())?);
        rec.input("synthetic_rows", n_new);
        rec.input("measure", HolisticMeasure::Coverage);
        let vb = self.features.as_ref().map_or(0, |f| f.visual_bytes);
        rec.bytes_in = n_real as u64 * vb;
        rec.bytes_out = xs.rows() as u64 * vb;
        if n_new > 0 {
            let new_rows: Vec<usize> = (n_real..xs.rows()).collect();
            let batch = xs.select_rows(&new_rows).map_err(err)?;
            let params = HolisticParams {
                seed: self.cfg.seed,
                epsilon: self.cfg.epsilon,
                ..HolisticParams::default()
            };
            let out = holistic_redundancy(&x, &batch, HolisticMeasure::Coverage, &params).map_err(err)?;
            set_score(rec, out.p_before, out.p_after, Direction::HigherIsBetter, out.score);
            let labels = ys.labels()[n_real..].to_vec();
            self.synthetic = Some((batch, LabelVector::new(labels, self.y.n_classes()).map_err(err)?));
        }
        self.invalidate();
        Ok(())
    }

    fn sensor_enhance(&mut self, rec: &mut StageRecord) -> StageResult {
        let (v, _) = self.project(Sensor::Visual, false)?;
        let (a, _) = self.project(Sensor::Audio, false)?;
        let out = recommend_sensor_removal(&v, &a, &self.y, &self.model, self.cfg.seed).map_err(err)?;
        let mi = cross_sensor_mi(&v, &a, 8, 2).map_err(err)?;
        rec.input("acc_visual", out.acc_visual.value);
        rec.input("acc_audio", out.acc_audio.value);
        rec.input("acc_fusion", out.acc_fusion.value);
        rec.input("cross_sensor_mi_bits", mi);
        for v in out.verdicts() {
            rec.verdicts.push(serde_json::to_value(v).expect("verdict serializes"));
        }
        // audio goes first when both could be dropped
        let (removed, verdict, other_acc) = if out.audio.recommendation == Recommendation::RemovableAtInference {
            (Some(Sensor::Audio), &out.audio, out.acc_visual)
        } else if out.visual.recommendation == Recommendation::RemovableAtInference {
            (Some(Sensor::Visual), &out.visual, out.acc_audio)
        } else {
            (None, &out.audio, out.acc_visual)
        };
        set_score(rec, other_acc.value, out.acc_fusion.value, Direction::HigherIsBetter, verdict.r);
        let n = self.y.len() as u64;
        rec.bytes_in = n * self.bytes_per_sample();
        if let Some(s) = removed {
            self.sensors.remove(&s);
        }
        rec.input("removed", removed);
        rec.input("remaining", &self.sensors);
        rec.bytes_out = n * self.bytes_per_sample();
        self.invalidate();
        Ok(())
    }

    fn reprocess(&mut self, rec: &mut StageRecord) -> StageResult {
        self.invalidate();
        let n = self.y.len() as u64;
        let bps = self.bytes_per_sample();
        let a = self.active()?;
        rec.input("sensors", a.dims.keys().collect::<Vec<_>>());
        rec.input("dims", &a.dims);
        rec.input("train_rows", a.train.0.rows());
        rec.input("synthetic_rows_used", a.synthetic_used);
        rec.bytes_in = n * bps;
        rec.bytes_out = n * bps;
        Ok(())
    }

    fn feature_select(&mut self, rec: &mut StageRecord, p: &FeatureSelectParams) -> StageResult {
        let seed = self.cfg.seed;
        let eps = self.cfg.epsilon;
        let model = self.model.clone();
        let a = self.active()?;
        let (xt, yt) = (&a.train.0, &a.train.1);
        let stop = Stop {
            max_features: p.max_features,
            min_gain: p.min_gain,
        };
        let sel = select_features(xt, yt, SelectionMode::Forward, stop, &Scorer::Cmi { bins: p.bins }, seed)
            .map_err(err)?;
        let mut cols = sel.subset.indices().to_vec();
        if cols.is_empty() {
            // keep the single most informative column rather than nothing
            let one = Stop {
                max_features: Some(1),
                min_gain: None,
            };
            let best = select_features(xt, yt, SelectionMode::Forward, one, &Scorer::Cmi { bins: p.bins }, seed)
                .map_err(err)?;
            cols.extend_from_slice(best.subset.indices());
        }
        let full = fit_and_score(&model, xt, yt, &a.val.0, &a.val.1, seed).map_err(err)?;
        let sub = fit_and_score(
            &model,
            &xt.select_columns(&cols).map_err(err)?,
            yt,
            &a.val.0.select_columns(&cols).map_err(err)?,
            &a.val.1,
            seed,
        )
        .map_err(err)?;
        let score = mlrm_core::redundancy_index(sub.score, full.score, eps).map_err(err)?;
        set_score(rec, sub.score.value, full.score.value, Direction::HigherIsBetter, score);
        rec.input("candidates", xt.cols());
        rec.input("selected", &cols);
        rec.input("gains", sel.trail.iter().map(|s| (s.feature, s.gain)).collect::<Vec<_>>());
        rec.input("bins", p.bins);
        rec.bytes_in = (xt.rows() * xt.cols() * 8) as u64;
        rec.bytes_out = (xt.rows() * cols.len() * 8) as u64;
        let names: Vec<usize> = match &self.selected {
            Some(prev) => cols.iter().map(|&c| prev[c]).collect(),
            None => cols,
        };
        self.selected = Some(names);
        self.invalidate();
        Ok(())
    }

    fn capacity_search(&mut self, rec: &mut StageRecord, p: &CapacitySearchParams) -> StageResult {
        let seed = self.cfg.seed;
        let model = self.model.clone();
        let a = self.active()?;
        let out = capacity_search_holdout(&a.train.0, &a.train.1, &a.val.0, &a.val.1, &p.widths, &model, p.tol, seed)
            .map_err(err)?;
        let chosen = out.scores.iter().find(|s| s.width == out.chosen).expect("chosen is scored");
        let largest = out.scores.last().expect("nonempty widths");
        let score = mlrm_core::metrics::redundancy_index_eps(
            chosen.val_accuracy,
            largest.val_accuracy,
            Direction::HigherIsBetter,
            self.cfg.epsilon,
        )
        .map_err(err)?;
        set_score(rec, chosen.val_accuracy, largest.val_accuracy, Direction::HigherIsBetter, score);
        rec.input("scores", &out.scores);
        rec.input("chosen_width", out.chosen);
        rec.input("tol", p.tol);
        rec.bytes_in = 8 * largest.n_params as u64;
        rec.bytes_out = 8 * chosen.n_params as u64;
        let layers = self.model.hidden.len().max(1);
        self.model.hidden = vec![out.chosen; layers];
        self.trained = None;
        self.mask = None;
        Ok(())
    }

    fn prune(&mut self, rec: &mut StageRecord, p: &PruneParams) -> StageResult {
        self.train_model()?;
        let m = self.trained.as_ref().expect("trained above");
        let a = self.active.as_ref().expect("trained on active data");
        let xv = m.scaler.apply(&a.val.0).map_err(err)?;
        let out = l1_prune_search(&m.params, &m.spec, &xv, &a.val.1, p.step, p.tol).map_err(err)?;
        set_score(rec, out.baseline.value, out.pruned.value, Direction::LowerIsBetter, out.score);
        rec.input("form", "removal");
        rec.input("step", p.step);
        rec.input("tol", p.tol);
        rec.input("sparsity", out.mask.sparsity());
        rec.input("weight_fraction", out.weight_fraction);
        rec.input("n_params", m.params.len());
        rec.bytes_in = 8 * m.params.len() as u64;
        rec.bytes_out = 8 * (m.params.len() - out.mask.pruned_count()) as u64;
        self.mask = Some(out.mask);
        Ok(())
    }

    fn finish(&mut self, report: &mut RedundancyReport) -> StageResult {
        self.train_model()?;
        let m = self.trained.as_ref().expect("trained above");
        let a = self.active.as_ref().expect("trained on active data");
        let xt = m.scaler.apply(&a.test.0).map_err(err)?;
        let mask = self
            .mask
            .clone()
            .unwrap_or_else(|| PruneMask::keep_all(m.params.len()));
        let acc = evaluate_masked(&m.params, &mask, &m.spec, &xt, &a.test.1).map_err(err)?;
        let fm = &mut report.final_metrics;
        fm.balanced_accuracy = Some(acc.value);
        fm.total_params = m.params.len();
        fm.param_count = m.params.len() - mask.pruned_count();
        fm.sparsity = mask.sparsity();
        fm.model_bytes = encode_mlpk(&m.spec, &mask.apply(&m.params).map_err(err)?).len() as u64;
        let real_rows = (self.train.len() + self.split.val.len() + self.split.test.len()) as u64;
        let synth_bytes = if self.sensors.contains(&Sensor::Visual) {
            self.n_synthetic() as u64 * self.features.as_ref().map_or(0, |f| f.visual_bytes)
        } else {
            0
        };
        fm.stored_bytes = real_rows * self.bytes_per_sample() + synth_bytes;
        Ok(())
    }
}

/// Runs every enabled stage in order. A failing stage is recorded and every
/// later enabled stage is marked skipped; the report is returned either way.
pub fn run_pipeline(cfg: &PipelineConfig, data: &LoadedDataset) -> Result<RedundancyReport, PipelineError> {
    let cfg = ResolvedConfig::from_config(cfg)?;
    let mut report = RedundancyReport::new(cfg.hash(), cfg.seed, cfg.epsilon);

    let t0 = Instant::now();
    let reg = register_streams(&data.video, &data.audio).map_err(|e| PipelineError::Data(e.to_string()))?;
    let register_ms = t0.elapsed().as_secs_f64() * 1e3;
    let mut pairs = reg.pairs;
    for p in &mut pairs {
        p.label = Some(data.labels[p.frame_index]);
    }
    let labels: Vec<usize> = pairs.iter().map(|p| data.labels[p.frame_index]).collect();
    let y = LabelVector::new(labels, data.n_classes).map_err(|e| PipelineError::Data(e.to_string()))?;
    let split = stratified_split(&y, cfg.split_ratios, cfg.seed).map_err(|e| PipelineError::Data(e.to_string()))?;
    let mut state = State {
        cfg: &cfg,
        pairs,
        y,
        train: split.train.clone(),
        split,
        features: None,
        synthetic: None,
        sensors: [Sensor::Visual, Sensor::Audio].into_iter().collect(),
        active: None,
        selected: None,
        model: cfg.model.clone(),
        trained: None,
        mask: None,
    };

    let mut failed = false;
    for stage in StageKind::ALL {
        if !cfg.enabled(stage) {
            continue;
        }
        let mut rec = StageRecord::new(stage);
        if failed {
            rec.status = StageStatus::Skipped;
            report.stages.push(rec);
            continue;
        }
        let start = Instant::now();
        let result = match stage {
            StageKind::Register => state.register(&mut rec, data),
            StageKind::FeatureExtract => {
                state.feature_extract(&mut rec, cfg.feature_extract.as_ref().expect("enabled"))
            }
            StageKind::Downsample => state
                .features()
                .map(|_| ())
                .and_then(|_| state.downsample(&mut rec, cfg.downsample.as_ref().expect("enabled"))),
            StageKind::Synthesize => state
                .features()
                .map(|_| ())
                .and_then(|_| state.synthesize(&mut rec, cfg.synthesize.as_ref().expect("enabled"))),
            StageKind::SensorEnhance => state.features().map(|_| ()).and_then(|_| state.sensor_enhance(&mut rec)),
            StageKind::Reprocess => state.features().map(|_| ()).and_then(|_| state.reprocess(&mut rec)),
            StageKind::FeatureSelect => {
                state.feature_select(&mut rec, cfg.feature_select.as_ref().expect("enabled"))
            }
            StageKind::CapacitySearch => {
                state.capacity_search(&mut rec, cfg.capacity_search.as_ref().expect("enabled"))
            }
            StageKind::Prune => state.prune(&mut rec, cfg.prune.as_ref().expect("enabled")),
        };
        rec.wall_clock_ms = start.elapsed().as_secs_f64() * 1e3;
        if stage == StageKind::Register {
            rec.wall_clock_ms += register_ms;
        }
        if let Err(e) = result {
            rec.status = StageStatus::Failed;
            rec.error = Some(e);
            failed = true;
        }
        report.stages.push(rec);
    }
    if !failed {
        if let Err(e) = state.features().map(|_| ()).and_then(|_| state.finish(&mut report)) {
            report.final_metrics = FinalMetrics {
                error: Some(e),
                ..FinalMetrics::default()
            };
        }
    }
    Ok(report)
}
