use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::feature::{pca_fit, pca_transform, PcaModel};
use crate::{Error, FeatureMatrix, Result};

/// Occupied cells of a `B^d` grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub dims_used: usize,
    pub bins_per_dim: usize,
    pub occupied_cells: BTreeSet<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// `|occupied| / B^d`.
    pub fraction: f64,
    pub grid: CoverageGrid,
    /// Dimensions whose reference range is empty; they map to a single cell.
    pub degenerate_dims: Vec<usize>,
}

/// Reference frame for gridding: a projection to at most three dimensions
/// plus per-dimension bounds, fitted once and reused on other data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFrame {
    projection: Option<PcaModel>,
    dims: usize,
    bins: usize,
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl GridFrame {
    /// Uses raw columns when `dims == m <= 3`, otherwise the first `dims`
    /// principal components of `x`. Bounds come from `x`.
    pub fn fit(x: &FeatureMatrix, dims: usize, bins: usize) -> Result<Self> {
        if dims == 0 || dims > 3 || dims > x.cols() {
            return Err(Error::InvalidArgument(alloc::format!(
                "grid dimensions must be in 1..={}, got {dims}",
                x.cols().min(3)
            )));
        }
        if bins < 1 {
            return Err(Error::InvalidBins(bins));
        }
        let projection = if dims == x.cols() {
            None
        } else {
            let k = dims.min(x.rows().saturating_sub(1));
            if k == 0 {
                Some(PcaModel {
                    mean: x.column_means(),
                    components: Vec::new(),
                    explained_variance: Vec::new(),
                })
            } else {
                Some(pca_fit(x, k)?)
            }
        };
        let mut frame = Self {
            projection,
            dims,
            bins,
            mins: Vec::new(),
            maxs: Vec::new(),
        };
        let projected = frame.project(x)?;
        frame.mins = alloc::vec![f64::INFINITY; dims];
        frame.maxs = alloc::vec![f64::NEG_INFINITY; dims];
        for row in &projected {
            for d in 0..dims {
                frame.mins[d] = frame.mins[d].min(row[d]);
                frame.maxs[d] = frame.maxs[d].max(row[d]);
            }
        }
        Ok(frame)
    }

    /// Replaces the fitted bounds with caller-supplied ones.
    pub fn with_bounds(mut self, mins: Vec<f64>, maxs: Vec<f64>) -> Result<Self> {
        if mins.len() != self.dims || maxs.len() != self.dims {
            return Err(Error::ShapeMismatch {
                expected: self.dims,
                found: mins.len().min(maxs.len()),
            });
        }
        self.mins = mins;
        self.maxs = maxs;
        Ok(self)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    fn project(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        match &self.projection {
            None => {
                if x.cols() != self.dims {
                    return Err(Error::ShapeMismatch {
                        expected: self.dims,
                        found: x.cols(),
                    });
                }
                Ok(x.iter_rows().map(<[f64]>::to_vec).collect())
            }
            Some(p) if p.components.is_empty() => {
                if x.cols() != p.mean.len() {
                    return Err(Error::ShapeMismatch {
                        expected: p.mean.len(),
                        found: x.cols(),
                    });
                }
                Ok(alloc::vec![alloc::vec![0.0; self.dims]; x.rows()])
            }
            Some(p) => {
                let z = pca_transform(p, x)?;
                Ok(z.iter_rows()
                    .map(|r| {
                        let mut v = r.to_vec();
                        v.resize(self.dims, 0.0);
                        v
                    })
                    .collect())
            }
        }
    }

    pub fn degenerate_dims(&self) -> Vec<usize> {
        (0..self.dims).filter(|&d| !(self.maxs[d] > self.mins[d])).collect()
    }

    /// Mixed-radix cell id of every row; values outside the bounds clamp to
    /// the edge cells.
    pub fn cells(&self, x: &FeatureMatrix) -> Result<Vec<u64>> {
        let projected = self.project(x)?;
        Ok(projected
            .iter()
            .map(|row| {
                let mut id = 0u64;
                for d in 0..self.dims {
                    let (lo, hi) = (self.mins[d], self.maxs[d]);
                    let code = if hi > lo {
                        let t = (row[d] - lo) / (hi - lo) * self.bins as f64;
                        if t <= 0.0 {
                            0
                        } else {
                            (libm::floor(t) as u64).min(self.bins as u64 - 1)
                        }
                    } else {
                        0
                    };
                    id = id * self.bins as u64 + code;
                }
                id
            })
            .collect())
    }

    pub fn coverage(&self, x: &FeatureMatrix) -> Result<Coverage> {
        let occupied_cells: BTreeSet<u64> = self.cells(x)?.into_iter().collect();
        let total = libm::pow(self.bins as f64, self.dims as f64);
        Ok(Coverage {
            fraction: occupied_cells.len() as f64 / total,
            grid: CoverageGrid {
                dims_used: self.dims,
                bins_per_dim: self.bins,
                occupied_cells,
            },
            degenerate_dims: self.degenerate_dims(),
        })
    }
}

/// Fraction of a `bins^dims` grid over the (projected, min-max normalized)
/// feature space that `x` occupies. The frame is fitted on `x` itself.
pub fn grid_coverage(x: &FeatureMatrix, dims: usize, bins: usize) -> Result<Coverage> {
    GridFrame::fit(x, dims, bins)?.coverage(x)
}
