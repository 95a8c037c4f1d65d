use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::linalg::{canonical_sign, dot, orthonormalize_rows, symmetric_eigen};
use crate::matrix::default_names;
use crate::{rng, Error, FeatureMatrix, Result};

/// Covariance route is used up to this many features.
const DIRECT_MAX_COLS: usize = 320;
/// Gram (dual) route is used up to this many samples.
const GRAM_MAX_ROWS: usize = 640;
const SUBSPACE_ITERS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k x m`, orthonormal rows.
    pub components: Vec<Vec<f64>>,
    /// Sample variance along each component, descending.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }
}

fn centered(x: &FeatureMatrix) -> (Vec<f64>, Vec<f64>) {
    let mean = x.column_means();
    let data = x
        .iter_rows()
        .flat_map(|row| row.iter().zip(&mean).map(|(v, m)| v - m))
        .collect();
    (mean, data)
}

/// Top-`k` principal axes of the sample covariance.
///
/// Small feature counts use a Jacobi eigendecomposition of the covariance,
/// wide-but-short data the eigenvectors of the Gram matrix, and anything
/// larger a seeded subspace iteration finished with a Rayleigh-Ritz step, so
/// the returned components always diagonalize the training covariance within
/// their span.
pub fn pca_fit(x: &FeatureMatrix, k: usize) -> Result<PcaModel> {
    let (n, m) = (x.rows(), x.cols());
    let max = (n.saturating_sub(1)).min(m);
    if k < 1 || k > max {
        return Err(Error::InvalidK { k, max });
    }
    let (mean, xc) = centered(x);
    let denom = (n - 1) as f64;
    let (values, components) = if m <= DIRECT_MAX_COLS {
        let mut cov = vec![0.0; m * m];
        for row in xc.chunks_exact(m) {
            for i in 0..m {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                for j in i..m {
                    cov[i * m + j] += ri * row[j];
                }
            }
        }
        for i in 0..m {
            for j in i..m {
                let v = cov[i * m + j] / denom;
                cov[i * m + j] = v;
                cov[j * m + i] = v;
            }
        }
        let (vals, vecs) = symmetric_eigen(&cov, m);
        (vals[..k].to_vec(), vecs[..k].to_vec())
    } else if n <= GRAM_MAX_ROWS {
        gram_route(&xc, n, m, k, denom)
    } else {
        subspace_route(&xc, n, m, k, denom)
    };
    let explained_variance = values.into_iter().map(|v| v.max(0.0)).collect();
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

fn gram_route(xc: &[f64], n: usize, m: usize, k: usize, denom: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = dot(&xc[i * m..(i + 1) * m], &xc[j * m..(j + 1) * m]);
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    let (vals, vecs) = symmetric_eigen(&g, n);
    let mut comps: Vec<Vec<f64>> = vecs[..k]
        .iter()
        .map(|u| {
            let mut v = vec![0.0; m];
            for (i, &ui) in u.iter().enumerate() {
                for (vj, xj) in v.iter_mut().zip(&xc[i * m..(i + 1) * m]) {
                    *vj += ui * xj;
                }
            }
            v
        })
        .collect();
    // rank-deficient directions are filled in by the orthonormalization
    orthonormalize_rows(&mut comps);
    comps.iter_mut().for_each(|c| canonical_sign(c));
    let values = vals[..k].iter().map(|v| v / denom).collect();
    (values, comps)
}

fn cov_times(xc: &[f64], n: usize, m: usize, v: &[f64], denom: f64) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for i in 0..n {
        let row = &xc[i * m..(i + 1) * m];
        let s = dot(row, v);
        for (o, r) in out.iter_mut().zip(row) {
            *o += s * r;
        }
    }
    out.iter_mut().for_each(|o| *o /= denom);
    out
}

fn subspace_route(
    xc: &[f64],
    n: usize,
    m: usize,
    k: usize,
    denom: f64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = (k + 8).min(m).min(n - 1).max(k);
    let mut r = rng::derive(0x9ca, 0);
    let mut basis: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..m).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize_rows(&mut basis);
    for _ in 0..SUBSPACE_ITERS {
        basis = basis.iter().map(|q| cov_times(xc, n, m, q, denom)).collect();
        orthonormalize_rows(&mut basis);
    }
    let cq: Vec<Vec<f64>> = basis.iter().map(|q| cov_times(xc, n, m, q, denom)).collect();
    let mut small = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            small[i * p + j] = dot(&basis[i], &cq[j]);
        }
    }
    for i in 0..p {
        for j in i + 1..p {
            let v = 0.5 * (small[i * p + j] + small[j * p + i]);
            small[i * p + j] = v;
            small[j * p + i] = v;
        }
    }
    let (vals, vecs) = symmetric_eigen(&small, p);
    let comps = vecs[..k]
        .iter()
        .map(|u| {
            let mut v = vec![0.0; m];
            for (ui, q) in u.iter().zip(&basis) {
                v.iter_mut().zip(q).for_each(|(a, b)| *a += ui * b);
            }
            canonical_sign(&mut v);
            v
        })
        .collect();
    (vals[..k].to_vec(), comps)
}

/// `(x - mean) · componentsᵀ`, columns named `pc0, pc1, ...`.
pub fn pca_transform(model: &PcaModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if x.cols() != model.mean.len() {
        return Err(Error::ShapeMismatch {
            expected: model.mean.len(),
            found: x.cols(),
        });
    }
    let k = model.k();
    let mut data = Vec::with_capacity(x.rows() * k);
    let mut centered = vec![0.0; x.cols()];
    for row in x.iter_rows() {
        for ((c, v), mu) in centered.iter_mut().zip(row).zip(&model.mean) {
            *c = v - mu;
        }
        data.extend(model.components.iter().map(|comp| dot(comp, &centered)));
    }
    let names = default_names(k)
        .into_iter()
        .map(|s| alloc::format!("pc{}", &s[1..]))
        .collect();
    FeatureMatrix::new(x.rows(), k, data, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, m: usize, scales: &[f64], seed: u64) -> FeatureMatrix {
        let mut r = rng::seeded(seed);
        let data = (0..n * m)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut r);
                z * scales[i % m]
            })
            .collect();
        FeatureMatrix::from_vec(n, m, data).unwrap()
    }

    fn check_invariants(model: &PcaModel, x: &FeatureMatrix) {
        for (i, a) in model.components.iter().enumerate() {
            for (j, b) in model.components.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - want).abs() < 1e-6, "orthonormality {i},{j}");
            }
        }
        assert!(model.explained_variance.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        let z = pca_transform(model, x).unwrap();
        let k = model.k();
        let n = x.rows() as f64;
        let trace: f64 = model.explained_variance.iter().sum();
        for a in 0..k {
            for b in 0..k {
                let c: f64 = z.iter_rows().map(|r| r[a] * r[b]).sum::<f64>() / (n - 1.0);
                let want = if a == b { model.explained_variance[a] } else { 0.0 };
                assert!((c - want).abs() <= 1e-6 * trace.max(1e-300), "cov {a},{b}: {c} vs {want}");
            }
        }
    }

    #[test]
    fn rank_one_line() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64 + 1.0]).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let m = pca_fit(&x, 1).unwrap();
        let z = pca_transform(&m, &x).unwrap();
        let total: f64 = (0..2)
            .map(|j| {
                let c = x.column(j);
                let mu = c.iter().sum::<f64>() / 20.0;
                c.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / 19.0
            })
            .sum();
        assert!((m.explained_variance[0] - total).abs() < 1e-9 * total);
        for (row, zr) in x.iter_rows().zip(z.iter_rows()) {
            for j in 0..2 {
                let back = m.mean[j] + zr[0] * m.components[0][j];
                assert!((back - row[j]).abs() <= 1e-9);
            }
        }
        check_invariants(&m, &x);
    }

    #[test]
    fn isotropic_variances_are_close() {
        let x = gaussian(10_000, 3, &[1.0, 1.0, 1.0], 5);
        let m = pca_fit(&x, 3).unwrap();
        let ev = &m.explained_variance;
        assert!(ev[0] / ev[2] < 1.1, "{ev:?}");
        check_invariants(&m, &x);
    }

    #[test]
    fn mean_maps_to_zero() {
        let x = gaussian(50, 4, &[3.0, 1.0, 0.5, 0.1], 2);
        let m = pca_fit(&x, 2).unwrap();
        let mean = FeatureMatrix::from_rows(&[m.mean.clone()]).unwrap();
        let z = pca_transform(&m, &mean).unwrap();
        assert!(z.row(0).iter().all(|v| v.abs() < 1e-12));
        check_invariants(&m, &x);
    }

    #[test]
    fn wide_routes_agree_with_invariants() {
        // gram route
        let x = gaussian(60, 400, &vec![1.0; 400], 9);
        let m = pca_fit(&x, 5).unwrap();
        check_invariants(&m, &x);
        // subspace route with a dominant direction
        let mut scales = vec![0.2; 340];
        scales[3] = 5.0;
        scales[10] = 3.0;
        let x = gaussian(700, 340, &scales, 4);
        let m = pca_fit(&x, 2).unwrap();
        check_invariants(&m, &x);
        assert!(m.components[0][3].abs() > 0.99);
        assert!(m.components[1][10].abs() > 0.99);
    }

    #[test]
    fn k_out_of_range() {
        let x = gaussian(5, 3, &[1.0; 3], 1);
        assert_eq!(pca_fit(&x, 0), Err(Error::InvalidK { k: 0, max: 3 }));
        assert_eq!(pca_fit(&x, 4), Err(Error::InvalidK { k: 4, max: 3 }));
    }
}
