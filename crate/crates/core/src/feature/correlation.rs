use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

pub fn correlation(a: &[f64], b: &[f64], kind: CorrelationKind) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: a.len(),
        });
    }
    match kind {
        CorrelationKind::Pearson => pearson(a, b),
        CorrelationKind::Spearman => pearson(&average_ranks(a), &average_ranks(b)),
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their ranks.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = alloc::vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let x = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let affine: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((correlation(&x, &affine, CorrelationKind::Pearson).unwrap() - 1.0).abs() < 1e-12);
        let cube: Vec<f64> = x.iter().map(|v| v * v * v).collect();
        assert!((correlation(&x, &cube, CorrelationKind::Spearman).unwrap() - 1.0).abs() < 1e-12);
        assert!(correlation(&x, &cube, CorrelationKind::Pearson).unwrap() < 1.0 - 1e-3);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        for k in [CorrelationKind::Pearson, CorrelationKind::Spearman] {
            assert!((correlation(&x, &neg, k).unwrap() + 1.0).abs() < 1e-12);
        }
        assert_eq!(
            correlation(&x, &[1.0; 5], CorrelationKind::Pearson),
            Err(Error::UndefinedCorrelation)
        );
    }

    #[test]
    fn ties_get_mean_rank() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    proptest! {
        #[test]
        fn invariances(
            pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let Ok(r0) = correlation(&a, &b, CorrelationKind::Pearson) {
                let a2: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
                let r1 = correlation(&a2, &b, CorrelationKind::Pearson).unwrap();
                prop_assert!((r0 - r1).abs() < 1e-9);
            }
            if let Ok(s0) = correlation(&a, &b, CorrelationKind::Spearman) {
                // strictly increasing map
                let a3: Vec<f64> = a.iter().map(|v| libm::exp(v / 50.0) + v).collect();
                let s1 = correlation(&a3, &b, CorrelationKind::Spearman).unwrap();
                prop_assert!((s0 - s1).abs() < 1e-12);
            }
        }
    }
}
