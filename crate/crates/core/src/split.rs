//! Deterministic train/validation/test partitioning.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, LabelVector, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !(p.is_finite() && *p > 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(alloc::format!(
                "split ratios must be positive and sum to 1, got {parts:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` with `seed` and cuts it by `ratios`. Each part gets at
/// least one index when `n >= 3`.
pub fn split_indices(n: usize, ratios: SplitRatios, seed: u64) -> Result<Split> {
    ratios.validate()?;
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::derive(seed, 0x5917));
    let mut n_val = (libm::round(ratios.val * n as f64) as usize).max(1);
    let mut n_test = (libm::round(ratios.test * n as f64) as usize).max(1);
    while n_val + n_test >= n {
        if n_val >= n_test {
            n_val -= 1;
        } else {
            n_test -= 1;
        }
    }
    let n_train = n - n_val - n_test;
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok(Split {
        train: idx,
        val,
        test,
    })
}

/// [`split_indices`] applied within each class, so every part keeps the class
/// proportions. Classes with at least three members appear in all parts.
/// Indices inside each part are ascending.
pub fn stratified_split(y: &LabelVector, ratios: SplitRatios, seed: u64) -> Result<Split> {
    ratios.validate()?;
    if y.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: y.len() });
    }
    let mut out = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for c in 0..y.n_classes() {
        let members: Vec<usize> = (0..y.len()).filter(|&i| y.labels()[i] == c).collect();
        if members.len() < 3 {
            out.train.extend(members);
            continue;
        }
        let part = split_indices(members.len(), ratios, seed ^ (c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))?;
        out.train.extend(part.train.iter().map(|&i| members[i]));
        out.val.extend(part.val.iter().map(|&i| members[i]));
        out.test.extend(part.test.iter().map(|&i| members[i]));
    }
    if out.val.is_empty() || out.test.is_empty() {
        return Err(Error::TooFewSamples { needed: 3, got: y.len() });
    }
    out.train.sort_unstable();
    out.val.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}
