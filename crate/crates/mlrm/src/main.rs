use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlrm::io::{read_pgm, read_wav, write_pgm};
use mlrm::mlpk::read_mlpk;
use mlrm::pipeline::{run_pipeline, PipelineConfig, PipelineError};
use mlrm::report::{emit_report, ReportFormat};
use mlrm::synth::{generate, SynthSpec};
use mlrm::table::read_table;
use mlrm::{load_manifest, ManifestError};
use mlrm_core::feature::{select_features, Scorer, SelectionMode, Stop, DEFAULT_MI_BINS};
use mlrm_core::model::{fit_and_score, l1_prune_search, overparam_redundancy, ModelConfig, OverparamMode};
use mlrm_core::sample::{holistic_redundancy, HolisticMeasure, HolisticParams};
use mlrm_core::sensor::{cross_sensor_entropies, cross_sensor_performance_redundancy, mapping_fit_mse, recommend_sensor_removal};
use mlrm_core::signal::{avg_pool_downscale, register_streams, stft_spectrogram, AudioClip};
use mlrm_core::split::{stratified_split, SplitRatios};
use mlrm_core::{Direction, Interpretation, MetricValue, RedundancyScore};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "mlrm", version, about = "Measure and reduce redundancy in multisensor monitoring data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Histogram bins for information measures.
    #[arg(long, global = true)]
    bins: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
    #[arg(long, global = true, default_value_t = mlrm_core::DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Single redundancy measurements.
    #[command(subcommand)]
    Audit(Audit),
    /// Preprocessing steps on individual files.
    #[command(subcommand)]
    Prep(Prep),
    /// The staged mitigation pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
    /// Fixture generators.
    #[command(subcommand)]
    Gen(Gen),
}

#[derive(Clone, Subcommand)]
enum Audit {
    /// How much a batch of samples adds to a base set.
    Sample {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        batch: PathBuf,
        #[arg(long, value_enum, default_value_t = MeasureArg::Diversity)]
        measure: MeasureArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forward CMI selection and the accuracy cost of dropping the rest.
    Feature {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "label")]
        label: String,
        #[arg(long)]
        max_features: Option<usize>,
        #[arg(long, default_value_t = 0.01)]
        min_gain: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Redundancy between two sensors' feature tables, or the index for
    /// supplied with/without accuracies.
    Sensor {
        #[arg(long, requires = "audio")]
        visual: Option<PathBuf>,
        #[arg(long, requires = "visual")]
        audio: Option<PathBuf>,
        /// Table with a label column aligned with the feature tables.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value = "label")]
        label: String,
        #[arg(long, requires = "acc_without")]
        acc_with: Option<f64>,
        #[arg(long, requires = "acc_with")]
        acc_without: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pruning search on a stored model, or overparameterization arithmetic.
    Model {
        #[arg(long, requires = "data")]
        model: Option<PathBuf>,
        /// Validation table with a label column.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "label")]
        label: String,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        #[arg(long, requires = "acc_modified")]
        acc_base: Option<f64>,
        #[arg(long, requires = "acc_base")]
        acc_modified: Option<f64>,
        #[arg(long, value_enum, default_value_t = ModeArg::Removed)]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Entropy,
    Diversity,
    Coverage,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Added,
    Removed,
}

#[derive(Subcommand)]
enum Prep {
    /// Pair frames with their audio windows and list the pairs as CSV.
    Register {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average-pool a PGM image.
    Downscale {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kernel: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Log-magnitude spectrogram of a WAV file as a square PGM image.
    Spectrogram {
        #[arg(long)]
        wav: PathBuf,
        #[arg(long, default_value_t = mlrm_core::signal::DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = mlrm_core::signal::DEFAULT_HOP)]
        hop: usize,
        #[arg(long, default_value_t = 80)]
        size: usize,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    Run(RunArgs),
}

#[derive(Clone, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Gen {
    /// Labelled 320x320 frames, a 44.1 kHz track and a manifest.
    Synthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SynthSpec::default().frames)]
        frames: usize,
    },
}

enum Failure {
    /// Bad arguments or input files.
    Invalid(String),
    /// A computation that could not complete.
    Stage(String),
}

impl From<mlrm_core::Error> for Failure {
    fn from(e: mlrm_core::Error) -> Self {
        match e {
            mlrm_core::Error::TrainingFailed(_) | mlrm_core::Error::DivergenceDetected { .. } => {
                Self::Stage(e.to_string())
            }
            other => Self::Invalid(other.to_string()),
        }
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Self::Invalid(e.to_string())
            }
        }
    )*};
}
invalid_from!(mlrm::io::IoError, mlrm::table::TableError, ManifestError, serde_json::Error, std::io::Error);

#[derive(Serialize)]
struct AuditOutput {
    measure: String,
    p_before: f64,
    p_after: f64,
    direction: Direction,
    r: f64,
    interpretation: Interpretation,
    details: serde_json::Value,
}

impl AuditOutput {
    fn new(measure: &str, before: f64, after: f64, direction: Direction, s: RedundancyScore) -> Self {
        Self {
            measure: measure.into(),
            p_before: before,
            p_after: after,
            direction,
            r: s.r,
            interpretation: s.interpretation,
            details: serde_json::Value::Null,
        }
    }

    fn with(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).expect("details serialize");
        self
    }
}

fn emit_audit(out: &AuditOutput, format: ReportFormat, path: Option<&Path>) -> Result<(), Failure> {
    let text = match format {
        ReportFormat::Json => serde_json::to_string_pretty(out)? + "\n",
        ReportFormat::Csv => {
            let interp = serde_json::to_value(out.interpretation)?;
            format!(
                "measure,P_before,P_after,R,interpretation\n{},{},{},{},{}\n",
                out.measure,
                out.p_before,
                out.p_after,
                out.r,
                interp.as_str().unwrap_or_default()
            )
        }
    };
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn audit(cmd: Audit, cli: &Cli) -> Result<(), Failure> {
    let bins = cli.bins.unwrap_or(DEFAULT_MI_BINS);
    match cmd {
        Audit::Sample {
            base,
            batch,
            measure,
            out,
        } => {
            let (x0, _) = read_table(&base, None)?;
            let (xb, _) = read_table(&batch, None)?;
            let measure = match measure {
                MeasureArg::Entropy => HolisticMeasure::Entropy,
                MeasureArg::Diversity => HolisticMeasure::Diversity,
                MeasureArg::Coverage => HolisticMeasure::Coverage,
            };
            let params = HolisticParams {
                bins: cli.bins.unwrap_or(HolisticParams::default().bins),
                seed: cli.seed,
                epsilon: cli.epsilon,
                dims: HolisticParams::default().dims.min(x0.cols()),
                ..HolisticParams::default()
            };
            let o = holistic_redundancy(&x0, &xb, measure, &params)?;
            let name = serde_json::to_value(measure)?;
            let res = AuditOutput::new(
                &format!("holistic_{}", name.as_str().unwrap_or("measure")),
                o.p_before,
                o.p_after,
                Direction::HigherIsBetter,
                o.score,
            );
            emit_audit(&res, cli.format, out.as_deref())
        }
        Audit::Feature {
            data,
            label,
            max_features,
            min_gain,
            out,
        } => {
            let (x, y) = read_table(&data, Some(&label))?;
            let y = y.expect("label column requested");
            let stop = Stop {
                max_features,
                min_gain: Some(min_gain),
            };
            let sel = select_features(&x, &y, SelectionMode::Forward, stop, &Scorer::Cmi { bins }, cli.seed)?;
            let mut cols = sel.subset.indices().to_vec();
            if cols.is_empty() {
                let one = Stop {
                    max_features: Some(1),
                    min_gain: None,
                };
                let best = select_features(&x, &y, SelectionMode::Forward, one, &Scorer::Cmi { bins }, cli.seed)?;
                cols.extend_from_slice(best.subset.indices());
            }
            let split = stratified_split(&y, SplitRatios::default(), cli.seed)?;
            let cfg = ModelConfig::default();
            let acc = |x: &mlrm_core::FeatureMatrix| -> Result<MetricValue, Failure> {
                Ok(fit_and_score(
                    &cfg,
                    &x.select_rows(&split.train)?,
                    &y.select(&split.train),
                    &x.select_rows(&split.val)?,
                    &y.select(&split.val),
                    cli.seed,
                )?
                .score)
            };
            let p_sub = acc(&x.select_columns(&cols)?)?;
            let p_all = acc(&x)?;
            let s = mlrm_core::redundancy_index(p_sub, p_all, cli.epsilon)?;
            let names: Vec<&str> = cols.iter().map(|&c| x.col_names()[c].as_str()).collect();
            let res = AuditOutput::new("feature_subset_wrapper", p_sub.value, p_all.value, Direction::HigherIsBetter, s)
                .with(serde_json::json!({ "selected": names, "trail": sel.trail }));
            emit_audit(&res, cli.format, out.as_deref())
        }
        Audit::Sensor {
            visual,
            audio,
            labels,
            label,
            acc_with,
            acc_without,
            out,
        } => {
            if let (Some(w), Some(wo)) = (acc_with, acc_without) {
                let s = cross_sensor_performance_redundancy(MetricValue::higher(w)?, MetricValue::higher(wo)?)?;
                let res = AuditOutput::new("cross_sensor_performance", wo, w, Direction::HigherIsBetter, s);
                return emit_audit(&res, cli.format, out.as_deref());
            }
            let (Some(vp), Some(ap)) = (visual, audio) else {
                return Err(Failure::Invalid(
                    "give --visual and --audio tables, or --acc-with and --acc-without".into(),
                ));
            };
            let (v, _) = read_table(&vp, None)?;
            let (a, _) = read_table(&ap, None)?;
            let h = cross_sensor_entropies(&v, &a, bins, 2)?;
            let mi = h.mutual_information();
            let (_, mse_va) = mapping_fit_mse(&v, &a, None, 0.2, cli.seed)?;
            let (_, mse_av) = mapping_fit_mse(&a, &v, None, 0.2, cli.seed)?;
            let Some(lp) = labels else {
                // information gained by adding audio to visual, in bits of joint code
                let s = mlrm_core::redundancy_index(MetricValue::higher(h.visual)?, MetricValue::higher(h.joint)?, cli.epsilon)?;
                let res = AuditOutput::new("cross_sensor_entropy", h.visual, h.joint, Direction::HigherIsBetter, s).with(serde_json::json!({
                    "mi_bits": mi,
                    "entropy_audio_bits": h.audio,
                    "mse_visual_to_audio": mse_va,
                    "mse_audio_to_visual": mse_av,
                }));
                return emit_audit(&res, cli.format, out.as_deref());
            };
            let (_, y) = read_table(&lp, Some(&label))?;
            let y = y.expect("label column requested");
            let rec = recommend_sensor_removal(&v, &a, &y, &ModelConfig::default(), cli.seed)?;
            let res = AuditOutput::new(
                "cross_sensor_performance",
                rec.acc_visual.value,
                rec.acc_fusion.value,
                Direction::HigherIsBetter,
                rec.audio.r,
            )
            .with(serde_json::json!({
                "mi_bits": mi,
                "mse_visual_to_audio": mse_va,
                "mse_audio_to_visual": mse_av,
                "assessment": rec,
            }));
            emit_audit(&res, cli.format, out.as_deref())
        }
        Audit::Model {
            model,
            data,
            label,
            step,
            tol,
            acc_base,
            acc_modified,
            mode,
            out,
        } => {
            if let (Some(b), Some(m)) = (acc_base, acc_modified) {
                let (mode, dir, name) = match mode {
                    ModeArg::Added => (OverparamMode::Added, Direction::HigherIsBetter, "overparam_added"),
                    ModeArg::Removed => (OverparamMode::Removed, Direction::LowerIsBetter, "overparam_removed"),
                };
                let s = overparam_redundancy(MetricValue::higher(b)?, MetricValue::higher(m)?, mode)?;
                let res = AuditOutput::new(name, b, m, dir, s);
                return emit_audit(&res, cli.format, out.as_deref());
            }
            let (Some(mp), Some(dp)) = (model, data) else {
                return Err(Failure::Invalid(
                    "give --model and --data, or --acc-base and --acc-modified".into(),
                ));
            };
            let (spec, params) = read_mlpk(&mp)?;
            let (x, y) = read_table(&dp, Some(&label))?;
            let y = y.expect("label column requested");
            let o = l1_prune_search(&params, &spec, &x, &y, step, tol)?;
            let res = AuditOutput::new("l1_prune", o.baseline.value, o.pruned.value, Direction::LowerIsBetter, o.score)
                .with(serde_json::json!({
                    "sparsity": o.mask.sparsity(),
                    "weight_fraction": o.weight_fraction,
                    "curve": o.curve,
                }));
            emit_audit(&res, cli.format, out.as_deref())
        }
    }
}

fn prep(cmd: Prep) -> Result<(), Failure> {
    match cmd {
        Prep::Register { manifest, out } => {
            let data = load_manifest(&manifest)?;
            let reg = register_streams(&data.video, &data.audio)?;
            let mut text = String::from("frame_index,timestamp,samples,label\n");
            for p in &reg.pairs {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    p.frame_index,
                    p.frame.timestamp(),
                    p.snippet.samples().len(),
                    data.labels[p.frame_index]
                ));
            }
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            eprintln!("{} pairs, {} frames dropped", reg.pairs.len(), reg.dropped);
            Ok(())
        }
        Prep::Downscale { input, kernel, output } => {
            let img = read_pgm(&input, 0.0)?;
            write_pgm(&output, &avg_pool_downscale(&img, kernel)?)?;
            Ok(())
        }
        Prep::Spectrogram {
            wav,
            window,
            hop,
            size,
            output,
        } => {
            let w = read_wav(&wav)?;
            let clip = AudioClip::new(w.samples, w.sample_rate as f64, 0.0)?;
            let s = stft_spectrogram(&clip, window, hop, size)?;
            write_pgm(&output, &s.to_image())?;
            Ok(())
        }
    }
}

fn pipeline(args: RunArgs, cli: &Cli) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", args.config.display())))?;
    let cfg: PipelineConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", args.config.display())))?;
    let data = load_manifest(&args.manifest)?;
    let report = run_pipeline(&cfg, &data).map_err(|e| match e {
        PipelineError::Config(m) => Failure::Invalid(m),
        PipelineError::Data(m) => Failure::Stage(m),
    })?;
    emit_report(&report, cli.format, &args.out)?;
    if let Some(s) = report.stages.iter().find(|s| s.error.is_some()) {
        return Err(Failure::Stage(format!(
            "stage {} failed: {}",
            s.stage.name(),
            s.error.as_deref().unwrap_or_default()
        )));
    }
    if let Some(e) = &report.final_metrics.error {
        return Err(Failure::Stage(format!("final model: {e}")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if !(cli.epsilon > 0.0 && cli.epsilon.is_finite()) {
        return Err(Failure::Invalid(format!("--epsilon must be positive, got {}", cli.epsilon)));
    }
    if cli.bins == Some(0) {
        return Err(Failure::Invalid("--bins must be at least 1".into()));
    }
    mlrm::init_threads().map_err(Failure::Invalid)?;
    match cli.command {
        Command::Audit(ref a) => audit(a.clone(), &cli),
        Command::Prep(p) => prep(p),
        Command::Pipeline(PipelineCmd::Run(ref args)) => pipeline(args.clone(), &cli),
        Command::Gen(Gen::Synthetic { ref out, frames }) => {
            let spec = SynthSpec {
                frames,
                ..SynthSpec::default()
            };
            let corpus = generate(out, cli.seed, &spec)?;
            eprintln!("wrote {}", corpus.manifest.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Stage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
