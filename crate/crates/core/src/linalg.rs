//! Dense Cholesky helpers for the Gaussian densities.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Lower-triangular factor `L` with `A = L Lᵀ`, or `None` if `A` is not
/// (numerically) positive definite.
pub fn cholesky(a: ArrayView2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Some(l)
}

/// Inverse of a lower-triangular matrix with a non-zero diagonal.
pub fn lower_triangular_inverse(l: ArrayView2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut inv = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        inv[[j, j]] = 1.0 / l[[j, j]];
        for i in (j + 1)..n {
            let mut s = 0.0;
            for k in j..i {
                s += l[[i, k]] * inv[[k, j]];
            }
            inv[[i, j]] = -s / l[[i, i]];
        }
    }
    inv
}

/// Solves `L z = b` by forward substitution.
pub fn forward_solve(l: ArrayView2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut z = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    z
}

pub fn mean_diagonal(a: ArrayView2<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    a.diag().sum() / n as f64
}

/// Factorizes `a`, adding `ridge·I`, `10·ridge·I`, ... up to `max_ridge·I` when the
/// plain matrix is not positive definite. Returns the factor and the ridge that
/// was added (0 when none was needed).
pub fn regularized_cholesky(
    a: ArrayView2<f64>,
    ridge: f64,
    max_ridge: f64,
) -> Result<(Array2<f64>, f64)> {
    if let Some(l) = cholesky(a) {
        return Ok((l, 0.0));
    }
    let mut extra = ridge.max(f64::MIN_POSITIVE);
    loop {
        let mut jittered = a.to_owned();
        jittered.diag_mut().mapv_inplace(|v| v + extra);
        if let Some(l) = cholesky(jittered.view()) {
            return Ok((l, extra));
        }
        if extra >= max_ridge {
            return Err(Error::NotPositiveDefinite { ridge: extra });
        }
        extra = (extra * 10.0).min(max_ridge);
    }
}
