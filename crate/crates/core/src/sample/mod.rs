//! Sample-level redundancy: how much a batch of samples adds to a dataset
//! (entropy, diversity, coverage), subgroup representation, and the two
//! sample-level mitigations, diversity-greedy downsampling and SMOTE.

mod coverage;
mod diversity;
mod groups;
mod holistic;
mod smote;

pub use coverage::{grid_coverage, Coverage, CoverageGrid, GridFrame};
pub use diversity::{avg_pairwise_distance, greedy_diverse_subset, DEFAULT_MAX_PAIRS};
pub use groups::{group_stats, GroupStats, SubgroupPartition};
pub use holistic::{
    dataset_entropy, holistic_redundancy, HolisticMeasure, HolisticOutcome, HolisticParams,
};
pub use smote::{smote_oversample, DEFAULT_SMOTE_K};
