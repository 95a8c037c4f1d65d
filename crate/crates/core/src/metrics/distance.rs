use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    Manhattan,
}

impl DistanceMetric {
    /// Distance without the length check, for hot loops over matrix rows.
    #[inline]
    pub(crate) fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Self::Euclidean => libm::sqrt(
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>(),
            ),
            Self::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

pub fn pairwise_distance(a: &[f64], b: &[f64], metric: DistanceMetric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(metric.eval(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let e = DistanceMetric::Euclidean;
        assert_eq!(pairwise_distance(&[1.0, 2.0], &[1.0, 2.0], e).unwrap(), 0.0);
        assert_eq!(pairwise_distance(&[0.0, 0.0], &[3.0, 4.0], e).unwrap(), 5.0);
        let m = DistanceMetric::Manhattan;
        assert_eq!(pairwise_distance(&[0.0, 0.0], &[3.0, 4.0], m).unwrap(), 7.0);
        assert!(pairwise_distance(&[0.0], &[3.0, 4.0], m).is_err());
    }
}
