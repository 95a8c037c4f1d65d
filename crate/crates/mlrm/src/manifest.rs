//! Dataset manifests: where the frames, audio and labels of one recording
//! live, resolved relative to the manifest file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mlrm_core::signal::{AudioClip, SensorStream};
use serde::{Deserialize, Serialize};

use crate::io::{read_pgm, read_wav, IoError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoSource {
    /// Directory of `.pgm` frames, read in file-name order.
    pub dir: PathBuf,
    pub nominal_rate: f64,
    /// Per-frame seconds. When present these override `nominal_rate`
    /// spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AudioSource {
    pub wav: PathBuf,
    #[serde(default)]
    pub start_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub csv: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub video: VideoSource,
    pub audio: AudioSource,
    /// `frame_index,label` rows.
    pub labels: CsvSource,
    /// `frame_index,group` rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroups: Option<CsvSource>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{path}: file not found")]
    Missing { path: PathBuf },
    #[error(transparent)]
    Io(#[from] IoError),
}

impl ManifestError {
    fn invalid(path: &Path, message: impl Into<String>) -> Self {
        Self::Invalid {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

/// A manifest with every referenced file loaded.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub manifest: DatasetManifest,
    pub video: SensorStream,
    pub audio: SensorStream,
    /// Label of frame `i` at position `i`.
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub subgroups: Option<Vec<String>>,
}

fn resolve(base: &Path, p: &Path) -> Result<PathBuf, ManifestError> {
    let full = base.join(p);
    if !full.exists() {
        return Err(ManifestError::Missing { path: full });
    }
    Ok(full)
}

fn read_index_csv(path: &Path, column: &str, n: usize) -> Result<Vec<String>, ManifestError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| ManifestError::invalid(path, e.to_string()))?;
    let headers = rdr
        .headers()
        .map_err(|e| ManifestError::invalid(path, e.to_string()))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ManifestError::invalid(path, format!("missing column `{name}`")))
    };
    let (fi, vi) = (find("frame_index")?, find(column)?);
    let mut out: Vec<Option<String>> = vec![None; n];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ManifestError::invalid(path, e.to_string()))?;
        let row = line + 2;
        let idx: usize = rec
            .get(fi)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| ManifestError::invalid(path, format!("row {row}: bad frame_index")))?;
        let slot = out.get_mut(idx).ok_or_else(|| {
            ManifestError::invalid(path, format!("row {row}: frame_index {idx} out of range 0..{n}"))
        })?;
        if slot.is_some() {
            return Err(ManifestError::invalid(path, format!("row {row}: duplicate frame {idx}")));
        }
        *slot = Some(rec.get(vi).unwrap_or("").trim().to_string());
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| ManifestError::invalid(path, format!("no row for frame {i}"))))
        .collect()
}

/// Reads a manifest and every file it references. Frame timestamps default
/// to `i / nominal_rate`.
pub fn load_manifest(path: &Path) -> Result<LoadedDataset, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ManifestError::Missing {
                path: path.to_path_buf(),
            }
        } else {
            IoError::Io {
                path: path.to_path_buf(),
                source: e,
            }
            .into()
        }
    })?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| ManifestError::invalid(path, e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));

    let dir = resolve(base, &manifest.video.dir)?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| IoError::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(ManifestError::invalid(&dir, "no .pgm frames"));
    }
    let rate = manifest.video.nominal_rate;
    let times: Vec<f64> = match &manifest.video.timestamps {
        Some(t) if t.len() != files.len() => {
            return Err(ManifestError::invalid(
                path,
                format!("{} timestamps for {} frames", t.len(), files.len()),
            ))
        }
        Some(t) => t.clone(),
        None => (0..files.len()).map(|i| i as f64 / rate).collect(),
    };
    let frames = files
        .iter()
        .zip(&times)
        .map(|(f, &t)| read_pgm(f, t))
        .collect::<Result<Vec<_>, _>>()?;
    let video = SensorStream::image(frames, rate).map_err(|e| ManifestError::invalid(path, e.to_string()))?;

    let wav_path = resolve(base, &manifest.audio.wav)?;
    let wav = read_wav(&wav_path)?;
    let clip = AudioClip::new(wav.samples, wav.sample_rate as f64, manifest.audio.start_time)
        .map_err(|e| ManifestError::invalid(&wav_path, e.to_string()))?;

    let n = files.len();
    let label_path = resolve(base, &manifest.labels.csv)?;
    let labels = read_index_csv(&label_path, "label", n)?
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse::<usize>()
                .map_err(|_| ManifestError::invalid(&label_path, format!("frame {i}: bad label `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n_classes = labels.iter().max().map_or(0, |m| m + 1).max(2);

    let subgroups = match &manifest.subgroups {
        Some(src) => Some(read_index_csv(&resolve(base, &src.csv)?, "group", n)?),
        None => None,
    };

    Ok(LoadedDataset {
        manifest,
        video,
        audio: SensorStream::audio(clip),
        labels,
        n_classes,
        subgroups,
    })
}

/// Distinct group names in first-seen order, and each sample's group id.
pub fn group_ids(groups: &[String]) -> (Vec<String>, Vec<usize>) {
    let mut names = Vec::new();
    let mut index = BTreeMap::new();
    let ids = groups
        .iter()
        .map(|g| {
            *index.entry(g.clone()).or_insert_with(|| {
                names.push(g.clone());
                names.len() - 1
            })
        })
        .collect();
    (names, ids)
}
