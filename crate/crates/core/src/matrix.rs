use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major `N x m` matrix of finite reals with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    col_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, col_names: Vec<String>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::EmptyInput("feature matrix has no rows"));
        }
        if cols == 0 {
            return Err(Error::EmptyInput("feature matrix has no columns"));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if col_names.len() != cols {
            return Err(Error::ShapeMismatch {
                expected: cols,
                found: col_names.len(),
            });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMetric(*v));
        }
        let mut seen = BTreeSet::new();
        for name in &col_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate column name {name:?}")));
            }
        }
        Ok(Self {
            rows,
            cols,
            data,
            col_names,
        })
    }

    /// Builds a matrix with generated column names `f0, f1, ...`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(rows, cols, data, default_names(cols))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::ShapeMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        let cols = columns.len();
        let mut data = alloc::vec![0.0; rows * cols];
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::ShapeMismatch {
                    expected: rows,
                    found: col.len(),
                });
            }
            for (i, v) in col.iter().enumerate() {
                data[i * cols + j] = *v;
            }
        }
        Self::from_vec(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            if i >= self.rows {
                return Err(Error::InvalidSize {
                    size: i,
                    max: self.rows - 1,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(idx.len(), self.cols, data, self.col_names.clone())
    }

    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.cols) {
            return Err(Error::InvalidSize {
                size: bad,
                max: self.cols - 1,
            });
        }
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for row in self.iter_rows() {
            data.extend(idx.iter().map(|&j| row[j]));
        }
        let names = idx.iter().map(|&j| self.col_names[j].clone()).collect();
        Self::new(self.rows, idx.len(), data, names)
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if other.cols != self.cols {
            return Err(Error::ShapeMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::new(self.rows + other.rows, self.cols, data, self.col_names.clone())
    }

    /// Places `other` to the right of `self`; clashing names get a suffix.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if other.rows != self.rows {
            return Err(Error::ShapeMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        let mut names = self.col_names.clone();
        let taken: BTreeSet<String> = names.iter().cloned().collect();
        for name in &other.col_names {
            let mut candidate = name.clone();
            let mut n = 1;
            while taken.contains(&candidate) || names.contains(&candidate) {
                candidate = format!("{name}_{n}");
                n += 1;
            }
            names.push(candidate);
        }
        Self::new(self.rows, cols, data, names)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = alloc::vec![0.0; self.cols];
        for row in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= self.rows as f64;
        }
        mean
    }
}

pub(crate) fn default_names(cols: usize) -> Vec<String> {
    (0..cols).map(|j| format!("f{j}")).collect()
}

/// Integer class labels in `[0, n_classes)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("label vector is empty"));
        }
        if n_classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least two classes, got {n_classes}"
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} outside [0, {n_classes})"
            )));
        }
        Ok(Self { labels, n_classes })
    }

    /// Infers `n_classes` as `max(label) + 1`, with a floor of two.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let n = labels.iter().copied().max().map_or(2, |m| (m + 1).max(2));
        Self::new(labels, n)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Labels as coded column for the information measures.
    pub fn codes(&self) -> Vec<u32> {
        self.labels.iter().map(|&l| l as u32).collect()
    }

    pub(crate) fn ensure_len(&self, n: usize) -> Result<()> {
        if self.labels.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: self.labels.len(),
            });
        }
        Ok(())
    }
}

/// Column-major matrix of discrete codes produced by quantization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedMatrix {
    rows: usize,
    cols: usize,
    bins: usize,
    codes: Vec<u32>,
}

impl CodedMatrix {
    pub(crate) fn from_columns(rows: usize, bins: usize, columns: Vec<Vec<u32>>) -> Self {
        let cols = columns.len();
        let codes = columns.into_iter().flatten().collect();
        Self {
            rows,
            cols,
            bins,
            codes,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.codes[j * self.rows..(j + 1) * self.rows]
    }
}
