use alloc::vec::Vec;

use rand::Rng as _;

use crate::metrics::DistanceMetric;
use crate::{rng, Error, FeatureMatrix, LabelVector, Result};

pub const DEFAULT_SMOTE_K: usize = 5;

/// SMOTE oversampling.
///
/// Every class whose count is below `target_ratio` times the majority count
/// is topped up with points `x_i + λ (x_nn - x_i)`, `λ ~ U(0, 1)`, where
/// `x_i` is a random member of the class and `x_nn` one of its `k` nearest
/// same-class neighbours (`k` clamped to the class size minus one). Synthetic
/// rows are appended after the originals.
pub fn smote_oversample(
    x: &FeatureMatrix,
    y: &LabelVector,
    target_ratio: f64,
    k: usize,
    seed: u64,
) -> Result<(FeatureMatrix, LabelVector)> {
    y.ensure_len(x.rows())?;
    if k == 0 {
        return Err(Error::InvalidArgument(alloc::string::String::from("k must be >= 1")));
    }
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "target ratio must be in (0, 1], got {target_ratio}"
        )));
    }
    let counts = y.counts();
    let majority = counts.iter().copied().max().unwrap_or(0);
    let present = counts.iter().copied().filter(|&c| c > 0);
    let minority = present.min().unwrap_or(0);
    if (minority as f64 / majority as f64) > target_ratio + 1e-12 {
        return Err(Error::InvalidArgument(alloc::format!(
            "target ratio {target_ratio} is below the current minority/majority ratio"
        )));
    }
    let target = libm::ceil(target_ratio * majority as f64 - 1e-9) as usize;
    let mut r = rng::derive(seed, 0x5307e);
    let mut new_rows: Vec<f64> = Vec::new();
    let mut new_labels = y.labels().to_vec();
    for (class, &count) in counts.iter().enumerate() {
        if count >= target {
            continue;
        }
        if count < 2 {
            return Err(Error::CannotInterpolate(class));
        }
        let members: Vec<usize> = (0..x.rows()).filter(|&i| y.labels()[i] == class).collect();
        let kk = k.min(members.len() - 1);
        let neighbours: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let mut others: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (DistanceMetric::Euclidean.eval(x.row(i), x.row(j)), j))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                others.truncate(kk);
                others.into_iter().map(|(_, j)| j).collect()
            })
            .collect();
        for _ in count..target {
            let m = r.random_range(0..members.len());
            let nn = neighbours[m][r.random_range(0..kk)];
            let lambda: f64 = r.random();
            let (base, other) = (x.row(members[m]), x.row(nn));
            new_rows.extend(base.iter().zip(other).map(|(a, b)| a + lambda * (b - a)));
            new_labels.push(class);
        }
    }
    if new_rows.is_empty() {
        return Ok((x.clone(), y.clone()));
    }
    let synth = FeatureMatrix::new(
        new_rows.len() / x.cols(),
        x.cols(),
        new_rows,
        x.col_names().to_vec(),
    )?;
    Ok((x.vstack(&synth)?, LabelVector::new(new_labels, y.n_classes())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn balanced_input_is_unchanged() {
        let x = FeatureMatrix::from_columns(&[vec![0.0, 1.0, 2.0, 3.0]]).unwrap();
        let y = LabelVector::new(vec![0, 1, 0, 1], 2).unwrap();
        let (x2, y2) = smote_oversample(&x, &y, 1.0, 5, 0).unwrap();
        assert_eq!((x2, y2), (x, y));
    }

    #[test]
    fn two_point_minority_stays_on_segment() {
        let x = FeatureMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![2.0, 0.0],
            vec![3.0, 0.0],
            vec![1.0, 1.0],
            vec![3.0, 2.0],
        ])
        .unwrap();
        let y = LabelVector::new(vec![0, 0, 0, 0, 1, 1], 2).unwrap();
        let (x2, y2) = smote_oversample(&x, &y, 1.0, 5, 9).unwrap();
        assert_eq!(y2.counts(), vec![4, 4]);
        for i in 6..x2.rows() {
            let p = x2.row(i);
            // on the segment (1,1)-(3,2): p = (1 + 2t, 1 + t)
            let t = p[1] - 1.0;
            assert!((0.0..=1.0).contains(&t));
            assert!((p[0] - (1.0 + 2.0 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let x = FeatureMatrix::from_columns(&[vec![0.0, 1.0, 2.0]]).unwrap();
        let y = LabelVector::new(vec![0, 0, 1], 2).unwrap();
        assert_eq!(smote_oversample(&x, &y, 1.0, 5, 0), Err(Error::CannotInterpolate(1)));
        let y = LabelVector::new(vec![0, 1, 1], 2).unwrap();
        assert!(smote_oversample(&x, &y, 0.2, 5, 0).is_err());
    }
}
