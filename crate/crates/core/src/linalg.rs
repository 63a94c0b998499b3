//! Thin wrappers over the dense complex SVD used throughout the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const SVD_MAX_ITER: usize = 10_000;

/// Full singular value decomposition `m = u * diag(s) * v^H`, singular values
/// in descending order. `u` is `rows x k`, `v` is `cols x k` with `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub values: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: CMatrix::zeros(rows, 0),
            values: Vec::new(),
            v: CMatrix::zeros(cols, 0),
        });
    }
    let dec = m
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::SvdFailure { rows, cols })?;
    let (Some(u), Some(v_t)) = (dec.u, dec.v_t) else {
        return Err(Error::SvdFailure { rows, cols });
    };
    Ok(Svd {
        u,
        values: dec.singular_values.iter().copied().collect(),
        v: v_t.adjoint(),
    })
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    if rows.min(cols) == 0 {
        return Ok(Vec::new());
    }
    let dec = m
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::SvdFailure { rows, cols })?;
    let mut values: Vec<f64> = dec.singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Frobenius (Hilbert-Schmidt) norm.
pub fn hs_norm(m: &CMatrix) -> f64 {
    hs_norm_sq(m).sqrt()
}

pub fn hs_norm_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Largest absolute entrywise difference.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
