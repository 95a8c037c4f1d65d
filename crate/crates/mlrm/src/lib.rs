//! File formats, dataset manifests, the staged mitigation pipeline and its
//! reports, built on the `mlrm-core` measures.

pub mod io;
pub mod manifest;
pub mod mlpk;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod table;

pub use manifest::{load_manifest, DatasetManifest, LoadedDataset, ManifestError};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, ResolvedConfig};
pub use report::{emit_report, RedundancyReport, ReportFormat, StageKind, StageRecord, StageStatus};

/// Caps the global thread pool at `MLRM_THREADS` when set.
pub fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("MLRM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("MLRM_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
