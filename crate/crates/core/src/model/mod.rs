//! Desk-scale classifiers and the model-level redundancy measures built on
//! them: magnitude pruning, capacity search and ensemble (submodule) checks.

mod capacity;
mod classifier;
mod ensemble;
mod mlp;
mod prune;

pub use capacity::{capacity_search, capacity_search_holdout, CapacityResult, WidthScore};
pub use classifier::{
    fit_and_score, ModelConfig, ScoredModel, Standardizer,
};
pub use ensemble::{
    majority_vote, submodular_perf_redundancy, submodule_param_distance, Submodule,
    SubmodularRedundancy,
};
pub use mlp::{
    evaluate_model, evaluate_predictions, loss_and_gradient, predict, train_mlp, Activation,
    MlpSpec, ParamVector, TrainingLog,
};
pub use prune::{
    evaluate_masked, l1_prune_search, overparam_redundancy, OverparamMode, PruneMask,
    PruneOutcome,
};
