//! Small dense linear algebra on row-major `Vec<f64>` buffers: cyclic Jacobi
//! eigendecomposition for symmetric matrices and Cholesky solves.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Eigenpairs of a symmetric `n x n` matrix, sorted by descending eigenvalue.
/// Eigenvectors are returned as rows.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i * n + j]).collect();
            canonical_sign(&mut col);
            col
        })
        .collect();
    (values, vectors)
}

/// Flips `v` so its largest-magnitude entry is positive.
pub(crate) fn canonical_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = libm::copysign(1.0, x);
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Solves `A X = B` for symmetric positive definite `A` (`n x n`) and `B`
/// (`n x r`), both row-major.
pub fn cholesky_solve(a: &[f64], n: usize, b: &[f64], r: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::InvalidArgument(alloc::string::String::from(
                        "matrix is not positive definite",
                    )));
                }
                l[i * n + i] = libm::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut x = b.to_vec();
    for c in 0..r {
        for i in 0..n {
            let mut s = x[i * r + c];
            for k in 0..i {
                s -= l[i * n + k] * x[k * r + c];
            }
            x[i * r + c] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i * r + c];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k * r + c];
            }
            x[i * r + c] = s / l[i * n + i];
        }
    }
    Ok(x)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Modified Gram-Schmidt over row vectors. Rows that collapse are replaced by
/// the first unit basis vector not yet spanned.
pub(crate) fn orthonormalize_rows(rows: &mut [Vec<f64>]) {
    let dim = rows.first().map_or(0, Vec::len);
    for i in 0..rows.len() {
        let (done, rest) = rows.split_at_mut(i);
        let v = &mut rest[0];
        for _ in 0..2 {
            for u in done.iter() {
                let d = dot(u, v);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
            }
        }
        let mut n = norm(v);
        let mut e = 0;
        while n < 1e-10 && e < dim {
            v.iter_mut().for_each(|x| *x = 0.0);
            v[e] = 1.0;
            for u in done.iter() {
                let d = dot(u, v);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
            }
            n = norm(v);
            e += 1;
        }
        v.iter_mut().for_each(|x| *x /= n);
    }
}
