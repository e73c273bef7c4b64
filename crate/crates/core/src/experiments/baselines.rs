//! Reference estimators: least squares on the true support and the linear
//! MMSE (Wiener) estimator.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{check_len, least_squares, IndexSet, Matrix};

/// Least squares on the true support `T`, zero elsewhere.
pub fn oracle_ls(phi: &Matrix, y: &[f64], support: &IndexSet) -> Result<Vec<f64>> {
    Ok(least_squares(phi, support, y)?.to_dense(phi.cols()))
}

/// `x = p Phi' (p Phi Phi' + s2 I)^{-1} y` for an i.i.d. prior of per-entry
/// variance `p` and white noise of variance `s2`.
pub fn linear_mmse(phi: &Matrix, y: &[f64], prior_var: f64, noise_var: f64) -> Result<Vec<f64>> {
    check_len("measurements", phi.rows(), y.len())?;
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "linear MMSE needs a positive noise variance, got {noise_var}"
        )));
    }
    if !(prior_var > 0.0 && prior_var.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "linear MMSE needs a positive prior variance, got {prior_var}"
        )));
    }
    let a = phi.to_dmatrix();
    let m = phi.rows();
    let gram = &a * a.transpose() * prior_var + DMatrix::identity(m, m) * noise_var;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Domain("linear MMSE system is not positive definite".into()))?;
    let w = chol.solve(&DVector::from_column_slice(y));
    let x = a.transpose() * w * prior_var;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear MMSE estimate"));
    }
    Ok(x.as_slice().to_vec())
}
