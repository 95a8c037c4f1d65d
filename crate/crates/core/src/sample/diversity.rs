use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::metrics::DistanceMetric;
use crate::{rng, Error, FeatureMatrix, Result};

/// Above this many pairs the average distance is estimated from a sample.
pub const DEFAULT_MAX_PAIRS: usize = 2_000_000;

/// Mean distance over all unordered pairs of rows.
///
/// When `N(N-1)/2` exceeds `max_pairs` (default [`DEFAULT_MAX_PAIRS`]) the mean
/// is taken over `max_pairs` distinct pairs drawn without replacement.
pub fn avg_pairwise_distance(
    x: &FeatureMatrix,
    metric: DistanceMetric,
    max_pairs: Option<usize>,
    seed: u64,
) -> Result<f64> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let total = n as u64 * (n as u64 - 1) / 2;
    let budget = max_pairs.unwrap_or(DEFAULT_MAX_PAIRS).max(1) as u64;
    if total <= budget {
        let mut sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                sum += metric.eval(x.row(i), x.row(j));
            }
        }
        return Ok(sum / total as f64);
    }
    // Floyd's algorithm over the linear index of the upper triangle.
    let mut r = rng::derive(seed, 0xd15);
    let mut picked = BTreeSet::new();
    for j in total - budget..total {
        let t = r.random_range(0..=j);
        if !picked.insert(t) {
            picked.insert(j);
        }
    }
    let mut sum = 0.0;
    let mut row = 0usize;
    let mut row_start = 0u64;
    let mut row_len = (n - 1) as u64;
    for t in picked {
        while t >= row_start + row_len {
            row_start += row_len;
            row += 1;
            row_len -= 1;
        }
        let col = row + 1 + (t - row_start) as usize;
        sum += metric.eval(x.row(row), x.row(col));
    }
    Ok(sum / budget as f64)
}

/// Picks among exact ties with the seeded generator.
fn pick_tied(tied: &[usize], r: &mut rng::Rng) -> usize {
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[r.random_range(0..tied.len())]
    }
}

/// Farthest-point selection of `target_size` rows.
///
/// Starts at the row nearest the centroid and repeatedly adds the row whose
/// distance to its nearest chosen row is largest. The seed only breaks exact
/// ties. Returned indices are sorted.
pub fn greedy_diverse_subset(
    x: &FeatureMatrix,
    target_size: usize,
    metric: DistanceMetric,
    seed: u64,
) -> Result<Vec<usize>> {
    let n = x.rows();
    if target_size == 0 || target_size > n {
        return Err(Error::InvalidSize {
            size: target_size,
            max: n,
        });
    }
    let mut r = rng::derive(seed, 0xfa7);
    let centroid = x.column_means();
    let to_centroid: Vec<f64> = x.iter_rows().map(|row| metric.eval(row, &centroid)).collect();
    let best = to_centroid.iter().copied().fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = (0..n).filter(|&i| to_centroid[i] == best).collect();
    let first = pick_tied(&tied, &mut r);

    let mut chosen = alloc::vec![false; n];
    chosen[first] = true;
    let mut selected = alloc::vec![first];
    let mut nearest: Vec<f64> = x.iter_rows().map(|row| metric.eval(row, x.row(first))).collect();
    while selected.len() < target_size {
        let far = (0..n)
            .filter(|&i| !chosen[i])
            .map(|i| nearest[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = (0..n).filter(|&i| !chosen[i] && nearest[i] == far).collect();
        let next = pick_tied(&tied, &mut r);
        chosen[next] = true;
        selected.push(next);
        for i in 0..n {
            if !chosen[i] {
                nearest[i] = nearest[i].min(metric.eval(x.row(i), x.row(next)));
            }
        }
    }
    selected.sort_unstable();
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn line(v: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_columns(&[v.to_vec()]).unwrap()
    }

    #[test]
    fn three_points_on_a_line() {
        let d = avg_pairwise_distance(&line(&[0.0, 1.0, 2.0]), DistanceMetric::Euclidean, None, 0)
            .unwrap();
        assert!((d - 4.0 / 3.0).abs() < 1e-15);
        let same = avg_pairwise_distance(&line(&[5.0; 4]), DistanceMetric::Manhattan, None, 0);
        assert_eq!(same.unwrap(), 0.0);
        assert!(avg_pairwise_distance(&line(&[1.0]), DistanceMetric::Euclidean, None, 0).is_err());
    }

    #[test]
    fn sampled_pairs_cover_every_row_index_mapping() {
        // with a budget of total - 1 only one pair is missing
        let x = line(&[0.0, 1.0, 3.0, 7.0]);
        let exact = avg_pairwise_distance(&x, DistanceMetric::Euclidean, None, 0).unwrap();
        let sampled = avg_pairwise_distance(&x, DistanceMetric::Euclidean, Some(5), 3).unwrap();
        let pairs = [1.0, 3.0, 7.0, 2.0, 6.0, 4.0];
        let total: f64 = pairs.iter().sum();
        assert!(pairs.iter().any(|p| ((total - p) / 5.0 - sampled).abs() < 1e-12));
        assert!((exact - total / 6.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_collinear() {
        let x = line(&[0.0, 1.0, 2.0, 10.0]);
        assert_eq!(greedy_diverse_subset(&x, 2, DistanceMetric::Euclidean, 0).unwrap(), vec![2, 3]);
        assert_eq!(
            greedy_diverse_subset(&x, 4, DistanceMetric::Euclidean, 0).unwrap(),
            vec![0, 1, 2, 3]
        );
        assert!(greedy_diverse_subset(&x, 0, DistanceMetric::Euclidean, 0).is_err());
        assert!(greedy_diverse_subset(&x, 5, DistanceMetric::Euclidean, 0).is_err());
    }
}
