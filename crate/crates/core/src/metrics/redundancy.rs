use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default `ε` in the index denominator. Inert at accuracy scales.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Tolerance for classifying a score as exactly one.
pub const TAU_EQ: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Self::HigherIsBetter => Self::LowerIsBetter,
            Self::LowerIsBetter => Self::HigherIsBetter,
        }
    }
}

/// A performance metric value together with its explicit direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub direction: Direction,
}

impl MetricValue {
    pub fn new(value: f64, direction: Direction) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidMetric(value));
        }
        Ok(Self { value, direction })
    }

    pub fn higher(value: f64) -> Result<Self> {
        Self::new(value, Direction::HigherIsBetter)
    }

    pub fn lower(value: f64) -> Result<Self> {
        Self::new(value, Direction::LowerIsBetter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpretation {
    /// `r < 1`: the component adds something.
    NotFullyRedundant,
    /// `r = 1`: the component changes nothing.
    FullyRedundantNeutral,
    /// `r > 1`: the component makes things worse.
    FullyRedundantHarmful,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedundancyScore {
    pub r: f64,
    pub interpretation: Interpretation,
}

impl RedundancyScore {
    pub fn from_r(r: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::InvalidMetric(r));
        }
        let interpretation = if (r - 1.0).abs() <= TAU_EQ {
            Interpretation::FullyRedundantNeutral
        } else if r < 1.0 {
            Interpretation::NotFullyRedundant
        } else {
            Interpretation::FullyRedundantHarmful
        };
        Ok(Self { r, interpretation })
    }

    pub fn is_fully_redundant(&self) -> bool {
        self.interpretation != Interpretation::NotFullyRedundant
    }

    /// Fully redundant up to a slack absorbing training noise.
    pub fn is_redundant_within(&self, slack: f64) -> bool {
        self.r >= 1.0 - slack
    }
}

/// Redundancy of a component given the metric before and after adding it.
///
/// `1 - (after - before) / (|before| + ε)` for higher-is-better metrics and
/// `1 - (before - after) / (|before| + ε)` for lower-is-better ones.
pub fn redundancy_index(
    p_before: MetricValue,
    p_after: MetricValue,
    epsilon: f64,
) -> Result<RedundancyScore> {
    if p_before.direction != p_after.direction {
        return Err(Error::DirectionMismatch);
    }
    redundancy_index_eps(p_before.value, p_after.value, p_before.direction, epsilon)
}

/// Scalar form of [`redundancy_index`].
pub fn redundancy_index_eps(
    before: f64,
    after: f64,
    direction: Direction,
    epsilon: f64,
) -> Result<RedundancyScore> {
    for v in [before, after] {
        if !v.is_finite() {
            return Err(Error::InvalidMetric(v));
        }
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let gain = match direction {
        Direction::HigherIsBetter => after - before,
        Direction::LowerIsBetter => before - after,
    };
    RedundancyScore::from_r(1.0 - gain / (before.abs() + epsilon))
}

/// Ratio of presence measures between two subgroups.
pub fn relative_redundancy(p_g1: f64, p_g2: f64) -> Result<f64> {
    for v in [p_g1, p_g2] {
        if !v.is_finite() {
            return Err(Error::InvalidMetric(v));
        }
        if v < 0.0 {
            return Err(Error::InvalidArgument(alloc::format!(
                "presence measure must be nonnegative, got {v}"
            )));
        }
    }
    if p_g2 == 0.0 {
        return Err(Error::DivisionByZero);
    }
    Ok(p_g1 / p_g2)
}
