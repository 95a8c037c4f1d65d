//! Plug-in (maximum-likelihood) entropy and mutual information on discrete
//! codes, in bits. No bias correction is applied; with few samples per joint
//! cell the estimates are biased upward.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::matrix::CodedMatrix;
use crate::{Error, FeatureMatrix, Result};

/// Bin counts of a discrete distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    bin_counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn new(bin_counts: Vec<u64>) -> Result<Self> {
        let total = bin_counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInput("histogram has no mass"));
        }
        Ok(Self { bin_counts, total })
    }

    /// Counts codes `0..bins`; codes at or above `bins` are rejected.
    pub fn from_codes(codes: &[u32], bins: usize) -> Result<Self> {
        let mut counts = alloc::vec![0u64; bins];
        for &c in codes {
            let slot = counts.get_mut(c as usize).ok_or(Error::InvalidSize {
                size: c as usize,
                max: bins.saturating_sub(1),
            })?;
            *slot += 1;
        }
        Self::new(counts)
    }

    pub fn bin_counts(&self) -> &[u64] {
        &self.bin_counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

pub fn shannon_entropy(h: &Histogram) -> f64 {
    entropy_of_counts(h.bin_counts.clone())
}

/// Entropy of a count multiset. Counts are summed in sorted order so the
/// result does not depend on bin order.
pub(crate) fn entropy_of_counts(mut counts: Vec<u64>) -> f64 {
    counts.retain(|&c| c > 0);
    counts.sort_unstable();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * libm::log2(p)
        })
        .sum();
    h.max(0.0)
}

/// Entropy of the joint distribution of several equal-length code columns.
pub fn joint_entropy(columns: &[&[u32]]) -> Result<f64> {
    let Some(first) = columns.first() else {
        return Ok(0.0);
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::EmptyInput("code column is empty"));
    }
    for c in columns {
        if c.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: c.len(),
            });
        }
    }
    let cmp = |a: &usize, b: &usize| -> Ordering {
        for c in columns {
            match c[*a].cmp(&c[*b]) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        Ordering::Equal
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(cmp);
    let mut counts = Vec::new();
    let mut run = 1u64;
    for w in order.windows(2) {
        if cmp(&w[0], &w[1]) == Ordering::Equal {
            run += 1;
        } else {
            counts.push(run);
            run = 1;
        }
    }
    counts.push(run);
    Ok(entropy_of_counts(counts))
}

/// `I(a; b) = H(a) + H(b) - H(a, b)`.
pub fn mutual_information(a: &[u32], b: &[u32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let ha = joint_entropy(&[a])?;
    let hb = joint_entropy(&[b])?;
    // Sorting the pair makes the joint traversal independent of argument order.
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let hab = joint_entropy(&[lo, hi])?;
    Ok((ha + hb) - hab)
}

/// `I(x; y | given) = H(x, Z) + H(y, Z) - H(x, y, Z) - H(Z)`.
pub fn conditional_mutual_information(x: &[u32], y: &[u32], given: &[&[u32]]) -> Result<f64> {
    if given.is_empty() {
        return mutual_information(x, y);
    }
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let with = |extra: &[&[u32]]| -> Result<f64> {
        let mut cols: Vec<&[u32]> = given.to_vec();
        cols.extend_from_slice(extra);
        joint_entropy(&cols)
    };
    let hz = with(&[])?;
    let hxz = with(&[x])?;
    let hyz = with(&[y])?;
    let hxyz = with(&[x, y])?;
    Ok((hxz + hyz) - (hxyz + hz))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinScheme {
    EqualWidth,
    Quantile,
}

/// Per-column bin edges fitted on one dataset and reusable on another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    bins: usize,
    scheme: BinScheme,
    /// `(min, max)` per column for equal width; `bins - 1` inner edges for quantile.
    edges: Vec<Vec<f64>>,
}

impl Quantizer {
    pub fn fit(x: &FeatureMatrix, bins: usize, scheme: BinScheme) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidBins(bins));
        }
        let edges = (0..x.cols())
            .map(|j| {
                let mut col = x.column(j);
                match scheme {
                    BinScheme::EqualWidth => {
                        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        alloc::vec![lo, hi]
                    }
                    BinScheme::Quantile => {
                        col.sort_unstable_by(f64::total_cmp);
                        let n = col.len();
                        (1..bins)
                            .map(|q| {
                                // nearest rank: ceil(q * n / bins), 1-based
                                let rank = (q * n).div_ceil(bins).max(1);
                                col[rank - 1]
                            })
                            .collect()
                    }
                }
            })
            .collect();
        Ok(Self {
            bins,
            scheme,
            edges,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn cols(&self) -> usize {
        self.edges.len()
    }

    pub fn code(&self, col: usize, v: f64) -> u32 {
        let e = &self.edges[col];
        match self.scheme {
            BinScheme::EqualWidth => {
                let (lo, hi) = (e[0], e[1]);
                if hi <= lo {
                    return 0;
                }
                let t = (v - lo) / (hi - lo) * self.bins as f64;
                if t <= 0.0 {
                    0
                } else {
                    (libm::floor(t) as usize).min(self.bins - 1) as u32
                }
            }
            // ties fall into the lower bin
            BinScheme::Quantile => e.partition_point(|&edge| edge < v) as u32,
        }
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<CodedMatrix> {
        if x.cols() != self.cols() {
            return Err(Error::ShapeMismatch {
                expected: self.cols(),
                found: x.cols(),
            });
        }
        let columns = (0..x.cols())
            .map(|j| (0..x.rows()).map(|i| self.code(j, x.get(i, j))).collect())
            .collect();
        Ok(CodedMatrix::from_columns(x.rows(), self.bins, columns))
    }
}

/// Maps every column to integer codes in `[0, bins)`.
pub fn quantize_features(x: &FeatureMatrix, bins: usize, scheme: BinScheme) -> Result<CodedMatrix> {
    Quantizer::fit(x, bins, scheme)?.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::TAU_NUM;
    use crate::rng;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn entropy_examples() {
        let h = |c: Vec<u64>| shannon_entropy(&Histogram::new(c).unwrap());
        assert!((h(vec![5, 5, 5, 5]) - 2.0).abs() < 1e-15);
        assert_eq!(h(vec![0, 7, 0]), 0.0);
        // -0.75 log2 0.75 - 0.25 log2 0.25 = 0.811278...
        assert!((h(vec![3, 1]) - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert_eq!(Histogram::new(vec![0, 0]), Err(Error::EmptyInput("histogram has no mass")));
    }

    #[test]
    fn equal_width_midpoint_split() {
        let x = FeatureMatrix::from_columns(&[vec![0.0, 1.0, 2.0, 3.0], vec![4.0; 4]]).unwrap();
        let q = quantize_features(&x, 2, BinScheme::EqualWidth).unwrap();
        assert_eq!(q.column(0), &[0, 0, 1, 1]);
        assert_eq!(q.column(1), &[0, 0, 0, 0]);
        let q = quantize_features(&x, 5, BinScheme::Quantile).unwrap();
        assert_eq!(q.column(1), &[0, 0, 0, 0]);
        assert_eq!(quantize_features(&x, 1, BinScheme::Quantile), Err(Error::InvalidBins(1)));
    }

    #[test]
    fn quantile_bins_are_balanced_on_normal_draws() {
        use rand_distr::{Distribution, StandardNormal};
        let mut r = rng::seeded(7);
        let col: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut r)).collect();
        let x = FeatureMatrix::from_columns(&[col]).unwrap();
        let q = quantize_features(&x, 4, BinScheme::Quantile).unwrap();
        let h = Histogram::from_codes(q.column(0), 4).unwrap();
        for &c in h.bin_counts() {
            let f = c as f64 / 1000.0;
            assert!((0.23..=0.27).contains(&f), "{f}");
        }
    }

    #[test]
    fn mi_examples() {
        let a = [0u32, 1, 0, 1, 1, 0, 0, 1];
        let inv: Vec<u32> = a.iter().map(|v| 1 - v).collect();
        assert!((mutual_information(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((mutual_information(&a, &inv).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            mutual_information(&a, &a[..3]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn independent_codes_have_small_mi() {
        let mut r = rng::seeded(11);
        let a: Vec<u32> = (0..10_000).map(|_| r.random_range(0..4)).collect();
        let b: Vec<u32> = (0..10_000).map(|_| r.random_range(0..4)).collect();
        assert!(mutual_information(&a, &b).unwrap().abs() <= 0.01);
    }

    #[test]
    fn xor_structure() {
        let mut f = Vec::new();
        let mut g = Vec::new();
        for i in 0..4096u32 {
            f.push(i & 1);
            g.push((i >> 1) & 1);
        }
        let y: Vec<u32> = f.iter().zip(&g).map(|(a, b)| a ^ b).collect();
        assert!(mutual_information(&f, &y).unwrap().abs() < 1e-12);
        let cmi = conditional_mutual_information(&f, &y, &[&g]).unwrap();
        assert!((cmi - 1.0).abs() < 1e-12);
        // a copy of a conditioning column adds nothing
        let copy = conditional_mutual_information(&g, &y, &[&g]).unwrap();
        assert!(copy.abs() < 1e-9);
    }

    fn codes(max: u32) -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
        (1usize..200).prop_flat_map(move |n| {
            (
                proptest::collection::vec(0..max, n),
                proptest::collection::vec(0..max, n),
            )
        })
    }

    proptest! {
        #[test]
        fn mi_is_symmetric_and_bounded((a, b) in codes(6)) {
            let ab = mutual_information(&a, &b).unwrap();
            let ba = mutual_information(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            let ha = joint_entropy(&[&a]).unwrap();
            let hb = joint_entropy(&[&b]).unwrap();
            prop_assert!(ab >= -TAU_NUM);
            prop_assert!(ab <= ha.min(hb) + TAU_NUM);
        }

        #[test]
        fn cmi_with_empty_condition_is_mi((a, b) in codes(5)) {
            let mi = mutual_information(&a, &b).unwrap();
            let cmi = conditional_mutual_information(&a, &b, &[]).unwrap();
            prop_assert!((mi - cmi).abs() <= 1e-12);
        }

        #[test]
        fn entropy_ignores_bin_order(mut counts in proptest::collection::vec(0u64..50, 1..20), seed in 0u64..1000) {
            counts.push(1);
            let h0 = shannon_entropy(&Histogram::new(counts.clone()).unwrap());
            let mut r = rng::seeded(seed);
            for i in (1..counts.len()).rev() {
                let j = r.random_range(0..=i);
                counts.swap(i, j);
            }
            let h1 = shannon_entropy(&Histogram::new(counts.clone()).unwrap());
            prop_assert_eq!(h0, h1);
            let nonempty = counts.iter().filter(|&&c| c > 0).count() as f64;
            prop_assert!(h0 >= 0.0 && h0 <= libm::log2(nonempty) + 1e-12);
        }
    }
}
