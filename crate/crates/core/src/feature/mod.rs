//! Cross-variable redundancy: correlation, MI-based pair redundancy,
//! conditional-MI gain, wrapper deltas, greedy selection and PCA.

mod correlation;
mod pca;
mod selection;

pub use correlation::{correlation, CorrelationKind};
pub use pca::{pca_fit, pca_transform, PcaModel};
pub use selection::{
    cmi_gain, pair_redundancy, select_features, wrapper_redundancy, FeatureSubset, Scorer,
    SelectionMode, SelectionResult, SelectionStep, Stop, WrapperOutcome, DEFAULT_MI_BINS,
};
