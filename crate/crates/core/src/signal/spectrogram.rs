use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::fft::fft;
use super::image::ImageFrame;
use super::register::AudioClip;
use crate::{Error, Result};

pub const DEFAULT_WINDOW: usize = 1024;
pub const DEFAULT_HOP: usize = 512;

/// Frequency-by-time grid, row-major with frequency rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Spectrogram {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyInput("spectrogram has no cells"));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, f: usize, t: usize) -> f64 {
        self.data[f * self.cols + t]
    }

    /// Scales by the largest cell to 8 bits. An all-zero grid maps to black.
    pub fn to_image(&self) -> ImageFrame {
        let max = self.data.iter().copied().fold(0.0f64, f64::max);
        let px = self
            .data
            .iter()
            .map(|&v| {
                if max > 0.0 {
                    libm::round((v / max).clamp(0.0, 1.0) * 255.0) as u8
                } else {
                    0
                }
            })
            .collect();
        ImageFrame::new(self.cols, self.rows, px, 0.0).expect("shape checked at construction")
    }
}

/// Periodic Hann window.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * libm::cos(2.0 * core::f64::consts::PI * i as f64 / n as f64))
        .collect()
}

fn check_window(window: usize, hop: usize) -> Result<()> {
    if window < 16 || !window.is_power_of_two() || hop == 0 || hop > window {
        return Err(Error::InvalidWindow);
    }
    Ok(())
}

/// Magnitudes of the Hann-windowed short-time Fourier transform with
/// `window / 2 + 1` frequency rows and one column per full frame.
pub fn stft_magnitude(samples: &[f64], window: usize, hop: usize) -> Result<Spectrogram> {
    check_window(window, hop)?;
    if samples.len() < window {
        return Err(Error::ClipTooShort {
            len: samples.len(),
            window,
        });
    }
    let w = hann_window(window);
    let frames = 1 + (samples.len() - window) / hop;
    let bins = window / 2 + 1;
    let mut data = vec![0.0; bins * frames];
    let mut re = vec![0.0; window];
    let mut im = vec![0.0; window];
    for t in 0..frames {
        let chunk = &samples[t * hop..t * hop + window];
        for i in 0..window {
            re[i] = chunk[i] * w[i];
            im[i] = 0.0;
        }
        fft(&mut re, &mut im);
        for f in 0..bins {
            data[f * frames + t] = libm::hypot(re[f], im[f]);
        }
    }
    Spectrogram::new(bins, frames, data)
}

/// Block-average resize. Shrinking averages each source block; growing
/// repeats source cells.
pub fn block_resize(s: &Spectrogram, out_rows: usize, out_cols: usize) -> Result<Spectrogram> {
    if out_rows == 0 || out_cols == 0 {
        return Err(Error::InvalidSize {
            size: 0,
            max: s.rows.max(s.cols),
        });
    }
    let span = |i: usize, src: usize, dst: usize| {
        let a = i * src / dst;
        let b = ((i + 1) * src / dst).max(a + 1);
        a..b
    };
    let mut data = Vec::with_capacity(out_rows * out_cols);
    for i in 0..out_rows {
        let rs = span(i, s.rows, out_rows);
        for j in 0..out_cols {
            let cs = span(j, s.cols, out_cols);
            let mut sum = 0.0;
            for r in rs.clone() {
                sum += s.data[r * s.cols + cs.start..r * s.cols + cs.end].iter().sum::<f64>();
            }
            data.push(sum / (rs.len() * cs.len()) as f64);
        }
    }
    Spectrogram::new(out_rows, out_cols, data)
}

/// `log(1 + |X|)` spectrogram resized to `size x size`.
pub fn stft_spectrogram(
    clip: &AudioClip,
    window: usize,
    hop: usize,
    size: usize,
) -> Result<Spectrogram> {
    let mut mag = stft_magnitude(clip.samples(), window, hop)?;
    for v in &mut mag.data {
        *v = libm::log1p(*v);
    }
    block_resize(&mag, size, size)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(n: usize, cycles_per_window: f64, window: usize, amp: f64) -> Vec<f64> {
        (0..n)
            .map(|i| {
                amp * libm::sin(2.0 * core::f64::consts::PI * cycles_per_window * i as f64
                    / window as f64)
            })
            .collect()
    }

    fn argmax_row(s: &Spectrogram, t: usize) -> usize {
        (0..s.rows())
            .max_by(|&a, &b| s.get(a, t).total_cmp(&s.get(b, t)))
            .unwrap()
    }

    #[test]
    fn sine_peaks_at_its_bin() {
        for r in [3usize, 17, 100] {
            let s = stft_magnitude(&sine(4096, r as f64, 256, 0.5), 256, 128).unwrap();
            assert_eq!(s.rows(), 129);
            assert_eq!(s.cols(), 1 + (4096 - 256) / 128);
            for t in 0..s.cols() {
                assert_eq!(argmax_row(&s, t), r);
            }
        }
    }

    #[test]
    fn silence_and_linearity() {
        let s = stft_magnitude(&vec![0.0; 2048], 1024, 512).unwrap();
        assert!(s.data().iter().all(|&v| v == 0.0));
        let x = sine(2048, 7.3, 1024, 0.3);
        let x2: Vec<f64> = x.iter().map(|v| v * 2.0).collect();
        let a = stft_magnitude(&x, 1024, 512).unwrap();
        let b = stft_magnitude(&x2, 1024, 512).unwrap();
        for (p, q) in a.data().iter().zip(b.data()) {
            assert!((2.0 * p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval_per_frame() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|i| libm::sin(i as f64 * 0.37) * 0.8).collect();
        let s = stft_magnitude(&x, n, n).unwrap();
        let w = hann_window(n);
        let time: f64 = x.iter().zip(&w).map(|(a, b)| (a * b) * (a * b)).sum();
        let mut freq = s.get(0, 0).powi(2) + s.get(n / 2, 0).powi(2);
        for f in 1..n / 2 {
            freq += 2.0 * s.get(f, 0).powi(2);
        }
        assert!((freq - n as f64 * time).abs() < 1e-6);
    }

    #[test]
    fn window_checks() {
        assert_eq!(stft_magnitude(&[0.0; 100], 1024, 512), Err(Error::ClipTooShort {
            len: 100,
            window: 1024
        }));
        assert_eq!(stft_magnitude(&[0.0; 100], 24, 4), Err(Error::InvalidWindow));
        assert_eq!(stft_magnitude(&[0.0; 100], 16, 0), Err(Error::InvalidWindow));
        assert_eq!(stft_magnitude(&[0.0; 100], 16, 17), Err(Error::InvalidWindow));
    }

    #[test]
    fn resize_averages_and_repeats() {
        let s = Spectrogram::new(2, 4, vec![1.0, 3.0, 5.0, 7.0, 2.0, 4.0, 6.0, 8.0]).unwrap();
        let d = block_resize(&s, 1, 2).unwrap();
        assert_eq!(d.data(), &[2.5, 6.5]);
        let u = block_resize(&s, 4, 4).unwrap();
        assert_eq!(u.get(0, 0), 1.0);
        assert_eq!(u.get(1, 0), 1.0);
        assert_eq!(u.get(3, 3), 8.0);
        let same = block_resize(&s, 2, 4).unwrap();
        assert_eq!(same, s);
    }

    #[test]
    fn spectrogram_size_and_image() {
        let clip = AudioClip::new(sine(4096, 5.0, 256, 0.5), 44_100.0, 0.0).unwrap();
        let s = stft_spectrogram(&clip, 256, 64, 32).unwrap();
        assert_eq!((s.rows(), s.cols()), (32, 32));
        let img = s.to_image();
        assert_eq!(*img.pixels().iter().max().unwrap(), 255);
    }
}
