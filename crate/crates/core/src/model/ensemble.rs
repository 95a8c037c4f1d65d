use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::mlp::{evaluate_predictions, predict, MlpSpec, ParamVector};
use super::prune::{overparam_redundancy, OverparamMode};
use crate::{Error, FeatureMatrix, LabelVector, MetricValue, RedundancyScore, Result};

/// One member of a model ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submodule {
    pub id: usize,
    pub spec: MlpSpec,
    pub params: ParamVector,
}

impl Submodule {
    pub fn architecture_tag(&self) -> alloc::string::String {
        self.spec.architecture_tag()
    }
}

/// Plurality vote per row; ties go to the lowest class id.
pub fn majority_vote(
    members: &[&Submodule],
    x: &FeatureMatrix,
    n_classes: usize,
) -> Result<Vec<usize>> {
    if members.is_empty() {
        return Err(Error::EmptyInput("ensemble has no members"));
    }
    let preds = members
        .iter()
        .map(|m| predict(&m.spec, &m.params, x))
        .collect::<Result<Vec<_>>>()?;
    let mut votes = alloc::vec![0usize; n_classes];
    Ok((0..x.rows())
        .map(|i| {
            votes.iter_mut().for_each(|v| *v = 0);
            for p in &preds {
                if let Some(v) = votes.get_mut(p[i]) {
                    *v += 1;
                }
            }
            let mut best = 0;
            for c in 1..n_classes {
                if votes[c] > votes[best] {
                    best = c;
                }
            }
            best
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmodularRedundancy {
    pub full: MetricValue,
    pub without: MetricValue,
    /// `1 - (P(M) - P(M \ Mᵢ)) / |P(M)|`, consistent with every other index.
    pub score: RedundancyScore,
    /// `(P(M) - P(M \ Mᵢ)) / |P(M)|`, the bare normalized drop.
    pub raw_drop: f64,
}

/// Redundancy of one ensemble member, measured by the balanced-accuracy
/// change of the majority vote when it is removed.
pub fn submodular_perf_redundancy(
    ensemble: &[Submodule],
    drop: usize,
    x: &FeatureMatrix,
    y: &LabelVector,
) -> Result<SubmodularRedundancy> {
    if ensemble.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: ensemble.len(),
        });
    }
    if !ensemble.iter().any(|m| m.id == drop) {
        return Err(Error::NotFound(drop));
    }
    let all: Vec<&Submodule> = ensemble.iter().collect();
    let rest: Vec<&Submodule> = ensemble.iter().filter(|m| m.id != drop).collect();
    let k = y.n_classes();
    let full = evaluate_predictions(y, majority_vote(&all, x, k)?)?;
    let without = evaluate_predictions(y, majority_vote(&rest, x, k)?)?;
    let score = overparam_redundancy(full, without, OverparamMode::Removed)?;
    Ok(SubmodularRedundancy {
        full,
        without,
        score,
        raw_drop: 1.0 - score.r,
    })
}

/// `‖θᵢ − θⱼ‖₂` between two submodules of the same architecture.
pub fn submodule_param_distance(a: &Submodule, b: &Submodule) -> Result<f64> {
    if a.architecture_tag() != b.architecture_tag() || a.params.len() != b.params.len() {
        return Err(Error::IncomparableSubmodules);
    }
    let sq: f64 = a
        .params
        .values()
        .iter()
        .zip(b.params.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(libm::sqrt(sq))
}
