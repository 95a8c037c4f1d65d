use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Assignment of every sample to exactly one named subgroup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupPartition {
    group_ids: Vec<usize>,
    group_names: Vec<String>,
}

impl SubgroupPartition {
    pub fn new(group_ids: Vec<usize>, group_names: Vec<String>) -> Result<Self> {
        if group_ids.is_empty() || group_names.is_empty() {
            return Err(Error::EmptyInput("partition has no samples or no groups"));
        }
        let mut counts = alloc::vec![0usize; group_names.len()];
        for &g in &group_ids {
            *counts.get_mut(g).ok_or(Error::InvalidSize {
                size: g,
                max: group_names.len() - 1,
            })? += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "group {:?} has no samples",
                group_names[empty]
            )));
        }
        Ok(Self {
            group_ids,
            group_names,
        })
    }

    /// Builds a partition directly from per-group counts, samples in group order.
    pub fn from_counts(counts: &[(String, usize)]) -> Result<Self> {
        let ids = counts
            .iter()
            .enumerate()
            .flat_map(|(g, (_, c))| core::iter::repeat_n(g, *c))
            .collect();
        Self::new(ids, counts.iter().map(|(n, _)| n.clone()).collect())
    }

    pub fn group_ids(&self) -> &[usize] {
        &self.group_ids
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; self.group_names.len()];
        for &g in &self.group_ids {
            counts[g] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub names: Vec<String>,
    pub counts: Vec<usize>,
    /// `|Gᵢ| / N`.
    pub rates: Vec<f64>,
    /// `disparity[i][j] = rate_i / rate_j`.
    pub disparity: Vec<Vec<f64>>,
}

impl GroupStats {
    /// Largest over smallest representation rate.
    pub fn max_disparity(&self) -> f64 {
        let hi = self.rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.rates.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

/// Representation rate of every group and the pairwise disparity ratios.
pub fn group_stats(p: &SubgroupPartition) -> Result<GroupStats> {
    let counts = p.counts();
    let n = p.group_ids.len() as f64;
    let rates: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let disparity = rates
        .iter()
        .map(|ri| rates.iter().map(|rj| ri / rj).collect())
        .collect();
    Ok(GroupStats {
        names: p.group_names.clone(),
        counts,
        rates,
        disparity,
    })
}
