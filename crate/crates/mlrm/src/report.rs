//! Pipeline reports: one record per enabled stage plus final model metrics,
//! written as JSON or as a one-row-per-stage CSV summary.

use std::collections::BTreeMap;
use std::path::Path;

use mlrm_core::{Direction, Interpretation};
use serde::{Deserialize, Serialize};

use crate::io::IoError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Register,
    FeatureExtract,
    Downsample,
    Synthesize,
    SensorEnhance,
    Reprocess,
    FeatureSelect,
    CapacitySearch,
    Prune,
}

impl StageKind {
    /// Execution order.
    pub const ALL: [StageKind; 9] = [
        Self::Register,
        Self::FeatureExtract,
        Self::Downsample,
        Self::Synthesize,
        Self::SensorEnhance,
        Self::Reprocess,
        Self::FeatureSelect,
        Self::CapacitySearch,
        Self::Prune,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Register => "register",
            Self::FeatureExtract => "feature_extract",
            Self::Downsample => "downsample",
            Self::Synthesize => "synthesize",
            Self::SensorEnhance => "sensor_enhance",
            Self::Reprocess => "reprocess",
            Self::FeatureSelect => "feature_select",
            Self::CapacitySearch => "capacity_search",
            Self::Prune => "prune",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
    /// Not run because an earlier stage failed.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: StageKind,
    pub enabled: bool,
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Sizes, parameters and intermediate values worth keeping.
    pub inputs: BTreeMap<String, serde_json::Value>,
    pub p_before: Option<f64>,
    pub p_after: Option<f64>,
    /// Direction under which `r` was computed from `p_before`, `p_after`.
    pub direction: Option<Direction>,
    pub r: Option<f64>,
    pub interpretation: Option<Interpretation>,
    pub verdicts: Vec<serde_json::Value>,
    pub wall_clock_ms: f64,
    pub bytes_in: u64,
    pub bytes_out: u64,
}

impl StageRecord {
    pub fn new(stage: StageKind) -> Self {
        Self {
            stage,
            enabled: true,
            status: StageStatus::Ok,
            error: None,
            inputs: BTreeMap::new(),
            p_before: None,
            p_after: None,
            direction: None,
            r: None,
            interpretation: None,
            verdicts: Vec::new(),
            wall_clock_ms: 0.0,
            bytes_in: 0,
            bytes_out: 0,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) {
        self.inputs.insert(
            key.to_string(),
            serde_json::to_value(value).expect("report values serialize"),
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmittedStage {
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FinalMetrics {
    /// Test-split balanced accuracy of the final model.
    pub balanced_accuracy: Option<f64>,
    /// Parameters left after pruning.
    pub param_count: usize,
    pub total_params: usize,
    pub sparsity: f64,
    /// Bytes of retained sample data in the final feature representation.
    pub stored_bytes: u64,
    /// Size of the final model as a dense `.mlpk` file.
    pub model_bytes: u64,
    /// Why the final model could not be trained or scored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub epsilon: f64,
    pub omitted_stages: Vec<OmittedStage>,
    pub stages: Vec<StageRecord>,
    pub final_metrics: FinalMetrics,
}

impl RedundancyReport {
    pub fn new(config_hash: String, seed: u64, epsilon: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            seed,
            epsilon,
            omitted_stages: vec![OmittedStage {
                stage: "active_learning".into(),
                reason: "needs an external acquisition oracle to label new samples".into(),
            }],
            stages: Vec::new(),
            final_metrics: FinalMetrics::default(),
        }
    }

    pub fn failed(&self) -> bool {
        self.stages.iter().any(|s| s.status == StageStatus::Failed) || self.final_metrics.error.is_some()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        w.write_record([
            "stage", "enabled", "P_before", "P_after", "R", "ms", "bytes_in", "bytes_out",
        ])
        .expect("in-memory write");
        for s in &self.stages {
            w.write_record([
                s.stage.name().to_string(),
                s.enabled.to_string(),
                opt(s.p_before),
                opt(s.p_after),
                opt(s.r),
                format!("{:.3}", s.wall_clock_ms),
                s.bytes_in.to_string(),
                s.bytes_out.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

pub fn emit_report(report: &RedundancyReport, format: ReportFormat, path: &Path) -> Result<(), IoError> {
    let text = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    };
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}
