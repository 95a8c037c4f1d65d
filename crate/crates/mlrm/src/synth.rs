//! Synthetic audio-visual recordings for tests and demos.
//!
//! Frames show a bright melt-pool disc on a speckled background. Every frame
//! is drawn on an 80x80 grid and enlarged 4x, so sizes down to 80x80 lose
//! nothing while coarser sizes blur the speckle. Defect frames (class 1) have
//! a larger pool and a higher-pitched process tone.

use std::path::{Path, PathBuf};

use mlrm_core::signal::ImageFrame;
use mlrm_core::rng;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::io::{write_pgm, write_wav, IoError, WavAudio};
use crate::manifest::{AudioSource, CsvSource, DatasetManifest, VideoSource};
use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub frames: usize,
    pub camera_rate: f64,
    pub sample_rate: u32,
    /// Side of the drawing grid; frames are `4 * base` pixels square.
    pub base: usize,
    pub upscale: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            frames: 240,
            camera_rate: 30.0,
            sample_rate: 44_100,
            base: 80,
            upscale: 4,
        }
    }
}

/// Paths of a generated corpus.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub manifest: PathBuf,
    pub config: PathBuf,
    pub labels: Vec<usize>,
}

// Stable and defect regimes alternate; defect runs are shorter.
fn regime_labels(n: usize, r: &mut rng::Rng) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    let mut label = 0;
    while out.len() < n {
        let run = if label == 0 { r.random_range(8..=20) } else { r.random_range(6..=14) };
        out.extend(std::iter::repeat_n(label, run.min(n - out.len())));
        label = 1 - label;
    }
    out
}

/// One frame's pixels at `base * upscale` resolution.
pub fn draw_frame(spec: &SynthSpec, label: usize, r: &mut rng::Rng) -> Vec<u8> {
    let b = spec.base;
    let c = b as f64 / 2.0;
    let cx = c + r.random_range(-4.0..4.0);
    let cy = c + r.random_range(-4.0..4.0);
    let radius = if label == 1 { 15.0 } else { 10.0 } + r.random_range(-1.5..1.5);
    let peak = r.random_range(215.0..245.0);
    let mut grid = vec![0u8; b * b];
    for y in 0..b {
        for x in 0..b {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            grid[y * b + x] = if d <= radius {
                // hot core fading towards the rim
                (peak - 60.0 * (d / radius).powi(2)).round() as u8
            } else if r.random_bool(0.5) {
                60
            } else {
                20
            };
        }
    }
    let s = spec.upscale;
    let w = b * s;
    let mut px = vec![0u8; w * w];
    for y in 0..w {
        for x in 0..w {
            px[y * w + x] = grid[(y / s) * b + x / s];
        }
    }
    px
}

fn tone(label: usize, n: usize, offset: usize, rate: f64, r: &mut rng::Rng) -> Vec<f64> {
    let f = if label == 1 { 3500.0 } else { 2000.0 };
    let noise = Normal::new(0.0, 0.05).expect("valid deviation");
    (0..n)
        .map(|i| {
            let t = (offset + i) as f64 / rate;
            (0.3 * (2.0 * std::f64::consts::PI * f * t).sin() + noise.sample(r)).clamp(-1.0, 0.999)
        })
        .collect()
}

/// Writes frames, audio, labels, a manifest and an all-stages pipeline
/// config into `out`.
pub fn generate(out: &Path, seed: u64, spec: &SynthSpec) -> Result<SynthCorpus, IoError> {
    let frames_dir = out.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|e| IoError::io(&frames_dir, e))?;
    let mut r = rng::derive(seed, 0x5e17);
    let labels = regime_labels(spec.frames, &mut r);
    let side = spec.base * spec.upscale;
    let per_frame = (spec.sample_rate as f64 / spec.camera_rate).round() as usize;
    let mut samples = Vec::with_capacity(per_frame * spec.frames);
    for (i, &label) in labels.iter().enumerate() {
        let t = i as f64 / spec.camera_rate;
        let img = ImageFrame::new(side, side, draw_frame(spec, label, &mut r), t)
            .expect("generated frame has the declared size");
        write_pgm(&frames_dir.join(format!("frame_{i:05}.pgm")), &img)?;
        samples.extend(tone(label, per_frame, samples.len(), spec.sample_rate as f64, &mut r));
    }
    let wav = out.join("audio.wav");
    write_wav(
        &wav,
        &WavAudio {
            sample_rate: spec.sample_rate,
            samples,
        },
    )?;
    let labels_path = out.join("labels.csv");
    let mut csv = String::from("frame_index,label\n");
    for (i, l) in labels.iter().enumerate() {
        csv.push_str(&format!("{i},{l}\n"));
    }
    std::fs::write(&labels_path, csv).map_err(|e| IoError::io(&labels_path, e))?;

    let manifest = DatasetManifest {
        video: VideoSource {
            dir: "frames".into(),
            nominal_rate: spec.camera_rate,
            timestamps: None,
        },
        audio: AudioSource {
            wav: "audio.wav".into(),
            start_time: 0.0,
        },
        labels: CsvSource {
            csv: "labels.csv".into(),
        },
        subgroups: None,
    };
    let manifest_path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text).map_err(|e| IoError::io(&manifest_path, e))?;
    let config_path = out.join("config.json");
    let text = serde_json::to_string_pretty(&PipelineConfig::all_stages(seed)).expect("config serializes");
    std::fs::write(&config_path, text).map_err(|e| IoError::io(&config_path, e))?;
    Ok(SynthCorpus {
        manifest: manifest_path,
        config: config_path,
        labels,
    })
}
