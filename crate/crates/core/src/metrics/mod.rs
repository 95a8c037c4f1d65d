//! The redundancy index and the primitives every other module measures with.

mod accuracy;
mod distance;
mod info;
mod redundancy;

pub use accuracy::balanced_accuracy;
pub use distance::{pairwise_distance, DistanceMetric};
pub use info::{
    conditional_mutual_information, joint_entropy, mutual_information, quantize_features,
    shannon_entropy, BinScheme, Histogram, Quantizer,
};
pub use redundancy::{
    redundancy_index, redundancy_index_eps, relative_redundancy, Direction, Interpretation,
    MetricValue, RedundancyScore, DEFAULT_EPSILON, TAU_EQ,
};

/// Numerical slack for quantities that are nonnegative in exact arithmetic.
pub const TAU_NUM: f64 = 1e-9;
