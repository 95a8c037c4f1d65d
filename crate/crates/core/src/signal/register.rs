use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::image::ImageFrame;
use crate::{Error, Result};

/// Mono audio normalized to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: f64,
    start_time: f64,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: f64, start_time: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("audio clip has no samples"));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if !start_time.is_finite() {
            return Err(Error::InvalidMetric(start_time));
        }
        if let Some(&bad) = samples.iter().find(|s| !(s.is_finite() && s.abs() <= 1.0)) {
            return Err(Error::InvalidArgument(alloc::format!(
                "audio sample {bad} outside [-1, 1]"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            start_time,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// Time-stamped data from one sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "modality", rename_all = "snake_case")]
pub enum SensorStream {
    Image {
        frames: Vec<ImageFrame>,
        nominal_rate: f64,
    },
    Audio {
        clip: AudioClip,
    },
}

impl SensorStream {
    pub fn image(frames: Vec<ImageFrame>, nominal_rate: f64) -> Result<Self> {
        if !(nominal_rate > 0.0 && nominal_rate.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "nominal rate must be positive, got {nominal_rate}"
            )));
        }
        if frames.windows(2).any(|w| w[1].timestamp() <= w[0].timestamp()) {
            return Err(Error::InvalidArgument(alloc::string::String::from(
                "frame timestamps must be strictly increasing",
            )));
        }
        Ok(Self::Image {
            frames,
            nominal_rate,
        })
    }

    pub fn audio(clip: AudioClip) -> Self {
        Self::Audio { clip }
    }

    pub fn nominal_rate(&self) -> f64 {
        match self {
            Self::Image { nominal_rate, .. } => *nominal_rate,
            Self::Audio { clip } => clip.sample_rate,
        }
    }
}

/// A camera frame with the audio recorded while it was exposed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    /// Position of the frame in its source stream.
    pub frame_index: usize,
    pub frame: ImageFrame,
    pub snippet: AudioClip,
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registration {
    pub pairs: Vec<AlignedPair>,
    /// Frames whose audio window falls outside the clip.
    pub dropped: usize,
}

/// Pairs every frame at time `t` with the audio window
/// `[t, t + 1/camera_rate)`, located by rounding `t · sample_rate`.
pub fn register_streams(video: &SensorStream, audio: &SensorStream) -> Result<Registration> {
    let (SensorStream::Image {
        frames,
        nominal_rate,
    }, SensorStream::Audio { clip }) = (video, audio)
    else {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "register_streams expects an image stream and an audio stream",
        )));
    };
    let (Some(first), Some(last)) = (frames.first(), frames.last()) else {
        return Err(Error::EmptyInput("video stream has no frames"));
    };
    let period = 1.0 / nominal_rate;
    let audio_end = clip.start_time + clip.duration();
    if audio_end <= first.timestamp() || last.timestamp() + period <= clip.start_time {
        return Err(Error::NoOverlap);
    }
    let len = clip.samples.len() as i64;
    let rate = clip.sample_rate;
    let mut pairs = Vec::with_capacity(frames.len());
    let mut dropped = 0;
    for (i, frame) in frames.iter().enumerate() {
        let rel = frame.timestamp() - clip.start_time;
        let start = libm::round(rel * rate) as i64;
        let end = libm::round((rel + period) * rate) as i64;
        if start < 0 || end > len || end <= start {
            dropped += 1;
            continue;
        }
        let snippet = AudioClip {
            samples: clip.samples[start as usize..end as usize].to_vec(),
            sample_rate: rate,
            start_time: frame.timestamp(),
        };
        pairs.push(AlignedPair {
            frame_index: i,
            frame: frame.clone(),
            snippet,
            label: None,
        });
    }
    Ok(Registration { pairs, dropped })
}
