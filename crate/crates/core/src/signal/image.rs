use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::metrics::{shannon_entropy, Histogram};
use crate::{Error, Result};

/// 8-bit grayscale frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageFrame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    /// Seconds since stream start, stored as raw bits to keep `Eq`.
    timestamp_bits: u64,
}

impl ImageFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>, timestamp: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyInput("image has no pixels"));
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: width * height,
                found: pixels.len(),
            });
        }
        if !(timestamp.is_finite() && timestamp >= 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "timestamp must be finite and nonnegative, got {timestamp}"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            timestamp_bits: timestamp.to_bits(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn timestamp(&self) -> f64 {
        f64::from_bits(self.timestamp_bits)
    }

    pub fn with_timestamp(mut self, t: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("bad timestamp {t}")));
        }
        self.timestamp_bits = t.to_bits();
        Ok(self)
    }

    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixels scaled to `[0, 1]`.
    pub fn to_unit_floats(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64 / 255.0).collect()
    }
}

/// Average pooling with a `k x k` kernel. Edge blocks that do not fill the
/// kernel are averaged over the pixels they contain; means round half up.
pub fn avg_pool_downscale(img: &ImageFrame, k: usize) -> Result<ImageFrame> {
    if k < 1 {
        return Err(Error::InvalidKernel);
    }
    if k == 1 {
        return Ok(img.clone());
    }
    let ow = img.width.div_ceil(k);
    let oh = img.height.div_ceil(k);
    let mut out = Vec::with_capacity(ow * oh);
    for by in 0..oh {
        let y1 = ((by + 1) * k).min(img.height);
        for bx in 0..ow {
            let x1 = ((bx + 1) * k).min(img.width);
            let mut sum = 0u64;
            for y in by * k..y1 {
                let row = &img.pixels[y * img.width..(y + 1) * img.width];
                sum += row[bx * k..x1].iter().map(|&p| p as u64).sum::<u64>();
            }
            let count = ((y1 - by * k) * (x1 - bx * k)) as u64;
            out.push(((2 * sum + count) / (2 * count)) as u8);
        }
    }
    ImageFrame::new(ow, oh, out, img.timestamp())
}

/// Shannon entropy in bits of the 256-bin intensity histogram.
pub fn image_entropy(img: &ImageFrame) -> f64 {
    let mut counts = alloc::vec![0u64; 256];
    for &p in &img.pixels {
        counts[p as usize] += 1;
    }
    // nonempty by construction
    shannon_entropy(&Histogram::new(counts).expect("image has pixels"))
}
