use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::image::{avg_pool_downscale, image_entropy, ImageFrame};
use super::spectrogram::{block_resize, Spectrogram};
use crate::metrics::{redundancy_index_eps, Direction, RedundancyScore, DEFAULT_EPSILON};
use crate::{Error, Result};

/// Largest accepted relative change in minimum entropy against the
/// full-size reference.
pub const DEFAULT_DRIFT_TOL: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl EntropyStats {
    fn from_values(v: &[f64]) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &e in v {
            min = min.min(e);
            max = max.max(e);
            sum += e;
        }
        Some(Self {
            mean: sum / v.len() as f64,
            min,
            max,
        })
    }
}

/// Entropy statistics at one size; `None` when the size cannot be produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeEntropy {
    pub size: usize,
    pub stats: Option<EntropyStats>,
}

/// Redundancy of growing from `from` to `to` pixels per side, scored on
/// minimum entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRedundancy {
    pub from: usize,
    pub to: usize,
    pub score: RedundancyScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalitySweep {
    pub sizes: Vec<SizeEntropy>,
    /// Largest producible size.
    pub reference: Option<usize>,
    pub recommended: Option<usize>,
    pub steps: Vec<StepRedundancy>,
    /// Step from the recommended size straight to the reference.
    pub recommended_vs_reference: Option<StepRedundancy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub visual: ModalitySweep,
    pub audio: ModalitySweep,
}

/// Square `size x size` version of `img` by average pooling, if the frame
/// is square-divisible by `size`.
pub fn resize_to(img: &ImageFrame, size: usize) -> Result<ImageFrame> {
    let (w, h) = (img.width(), img.height());
    if size == 0 || w % size != 0 || h % size != 0 || w / size != h / size {
        return Err(Error::InvalidSize {
            size,
            max: w.min(h),
        });
    }
    avg_pool_downscale(img, w / size)
}

fn step(from: usize, to: usize, small: f64, large: f64) -> Result<StepRedundancy> {
    // the larger size is the added component; lost entropy at the small
    // size counts against it
    let score = redundancy_index_eps(small, large, Direction::LowerIsBetter, DEFAULT_EPSILON)?;
    Ok(StepRedundancy { from, to, score })
}

fn summarize(rows: Vec<SizeEntropy>, drift_tol: f64) -> Result<ModalitySweep> {
    let ok: Vec<(usize, f64)> = rows
        .iter()
        .filter_map(|r| r.stats.map(|s| (r.size, s.min)))
        .collect();
    let Some(&(reference, ref_min)) = ok.last() else {
        return Ok(ModalitySweep {
            sizes: rows,
            reference: None,
            recommended: None,
            steps: Vec::new(),
            recommended_vs_reference: None,
        });
    };
    let steps = ok
        .windows(2)
        .map(|w| step(w[0].0, w[1].0, w[0].1, w[1].1))
        .collect::<Result<Vec<_>>>()?;
    let mut recommended = reference;
    let mut vs_ref = None;
    for &(size, min) in &ok {
        let s = step(size, reference, min, ref_min)?;
        if (1.0 - s.score.r).abs() <= drift_tol {
            recommended = size;
            vs_ref = Some(s);
            break;
        }
    }
    Ok(ModalitySweep {
        sizes: rows,
        reference: Some(reference),
        recommended: Some(recommended),
        steps,
        recommended_vs_reference: vs_ref,
    })
}

/// Per-size image entropy statistics for a visual corpus and a set of
/// full-resolution spectrograms, plus the smallest size whose minimum
/// entropy stays within `drift_tol` of the largest producible size.
///
/// A size is unproducible for images when some frame is not square-divisible
/// by it, and for spectrograms when it exceeds either grid dimension.
pub fn downscale_sweep(
    images: &[ImageFrame],
    audio_specs: &[Spectrogram],
    sizes: &[usize],
    drift_tol: f64,
) -> Result<SweepReport> {
    if sizes.is_empty() {
        return Err(Error::EmptyInput("no sizes to sweep"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "sizes must be strictly ascending",
        )));
    }
    if !(drift_tol >= 0.0 && drift_tol.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("bad drift tolerance {drift_tol}")));
    }
    if images.is_empty() && audio_specs.is_empty() {
        return Err(Error::EmptyInput("sweep corpus is empty"));
    }
    let mut visual = Vec::with_capacity(sizes.len());
    let mut audio = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let ent: Option<Vec<f64>> = images
            .iter()
            .map(|img| resize_to(img, size).ok().map(|r| image_entropy(&r)))
            .collect();
        visual.push(SizeEntropy {
            size,
            stats: ent.and_then(|e| EntropyStats::from_values(&e)),
        });
        let ent: Option<Vec<f64>> = audio_specs
            .iter()
            .map(|s| {
                if size < 2 || size > s.rows() || size > s.cols() {
                    return None;
                }
                block_resize(s, size, size).ok().map(|r| image_entropy(&r.to_image()))
            })
            .collect();
        audio.push(SizeEntropy {
            size,
            stats: ent.and_then(|e| EntropyStats::from_values(&e)),
        });
    }
    Ok(SweepReport {
        visual: summarize(visual, drift_tol)?,
        audio: summarize(audio, drift_tol)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::Rng as _;

    fn constant(n: usize) -> ImageFrame {
        ImageFrame::new(n, n, vec![40; n * n], 0.0).unwrap()
    }

    #[test]
    fn constant_corpus_picks_smallest() {
        let imgs = vec![constant(64); 3];
        let r = downscale_sweep(&imgs, &[], &[4, 8, 16, 64], DEFAULT_DRIFT_TOL).unwrap();
        assert_eq!(r.visual.recommended, Some(4));
        assert_eq!(r.visual.reference, Some(64));
        for s in &r.visual.sizes {
            assert_eq!(s.stats.unwrap().max, 0.0);
        }
        assert!(r.visual.steps.iter().all(|s| s.score.r == 1.0));
        assert_eq!(r.audio.recommended, None);
    }

    #[test]
    fn unproducible_sizes_are_marked() {
        let imgs = vec![constant(60)];
        let r = downscale_sweep(&imgs, &[], &[7, 15, 60], 0.2).unwrap();
        assert!(r.visual.sizes[0].stats.is_none());
        assert!(r.visual.sizes[1].stats.is_some());
        assert_eq!(r.visual.steps.len(), 1);
        assert_eq!(r.visual.steps[0].from, 15);
    }

    #[test]
    fn worked_step_value() {
        let s = step(80, 480, 0.294, 0.245).unwrap();
        assert!((s.score.r - 0.833).abs() < 1e-3);
        // 40x40 drifts too far, 80x80 does not
        assert!((1.0 - step(40, 480, 0.353, 0.245).unwrap().score.r).abs() > 0.2);
        assert!((1.0 - s.score.r).abs() <= 0.2);
    }

    #[test]
    fn noise_corpus_against_direct_recompute() {
        let mut rng = crate::rng::seeded(11);
        let imgs: Vec<ImageFrame> = (0..4)
            .map(|_| {
                let px = (0..64 * 64).map(|_| rng.random::<u8>()).collect();
                ImageFrame::new(64, 64, px, 0.0).unwrap()
            })
            .collect();
        let sizes = [2, 4, 8, 16, 32, 64];
        let r = downscale_sweep(&imgs, &[], &sizes, DEFAULT_DRIFT_TOL).unwrap();
        for (row, &size) in r.visual.sizes.iter().zip(&sizes) {
            // oracle: pool by hand and count histograms
            let k = 64 / size;
            let mut mins = f64::INFINITY;
            for img in &imgs {
                let mut counts = [0u32; 256];
                for by in 0..size {
                    for bx in 0..size {
                        let mut s = 0u32;
                        for y in 0..k {
                            for x in 0..k {
                                s += img.pixel(bx * k + x, by * k + y) as u32;
                            }
                        }
                        let c = (k * k) as u32;
                        counts[((2 * s + c) / (2 * c)) as usize] += 1;
                    }
                }
                let n = (size * size) as f64;
                let h: f64 = counts
                    .iter()
                    .filter(|&&c| c > 0)
                    .map(|&c| -(c as f64 / n) * libm::log2(c as f64 / n))
                    .sum();
                mins = mins.min(h);
            }
            assert!((row.stats.unwrap().min - mins).abs() < 1e-12);
        }
        let rec = r.visual.recommended.unwrap();
        assert!(rec > 2);
    }

    #[test]
    fn audio_sizes_bounded_by_grid() {
        let data: Vec<f64> = (0..40 * 20).map(|i| (i % 13) as f64).collect();
        let spec = Spectrogram::new(40, 20, data).unwrap();
        let r = downscale_sweep(&[], &[spec], &[4, 8, 16, 32], 0.2).unwrap();
        assert!(r.audio.sizes[2].stats.is_some());
        assert!(r.audio.sizes[3].stats.is_none());
        assert_eq!(r.audio.reference, Some(16));
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(downscale_sweep(&[constant(4)], &[], &[4, 2], 0.2).is_err());
        assert!(downscale_sweep(&[], &[], &[2], 0.2).is_err());
    }
}
