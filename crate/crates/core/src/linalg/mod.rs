//! Dense column-major linear algebra used by the pursuit solvers.

mod index_set;
pub mod io;
mod qr;

pub use index_set::IndexSet;
pub use qr::{least_squares, LsSolution, QrFactorization, SINGULAR_RTOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real `rows x cols` matrix stored column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from column-major entries.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                context: "matrix entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                context: "matrix row length",
                expected: n,
                found: bad.len(),
            });
        }
        let mut data = vec![0.0; m * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[j * m + i] = v;
            }
        }
        Self::from_column_major(m, n, data)
    }

    /// Builds a matrix from a slice of columns, each of length `rows`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let m = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(m * columns.len());
        for c in columns {
            if c.len() != m {
                return Err(Error::Dimension {
                    context: "matrix column length",
                    expected: m,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Self::from_column_major(m, columns.len(), data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_column_major(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.rows)
    }

    /// Row-major copy, one `Vec` per row.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Computes `Phi x` for a dense `x` of length `cols`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("matrix-vector product", self.cols, x.len())?;
        let mut out = vec![0.0; self.rows];
        for (col, &xj) in self.columns().zip(x) {
            if xj != 0.0 {
                axpy(xj, col, &mut out);
            }
        }
        Ok(out)
    }

    /// Computes `Phi_A c` where `c` is indexed like `support`.
    pub fn mul_support(&self, support: &IndexSet, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_len("support coefficients", support.len(), coeffs.len())?;
        self.check_support(support)?;
        let mut out = vec![0.0; self.rows];
        for (&j, &c) in support.iter().zip(coeffs) {
            axpy(c, self.column(j), &mut out);
        }
        Ok(out)
    }

    /// Copies the columns indexed by `support` into a new matrix.
    pub fn select_columns(&self, support: &IndexSet) -> Result<Matrix> {
        self.check_support(support)?;
        let data = support
            .iter()
            .flat_map(|&j| self.column(j).iter().copied())
            .collect();
        Matrix::from_column_major(self.rows, support.len(), data)
    }

    pub(crate) fn check_support(&self, support: &IndexSet) -> Result<()> {
        match support.max() {
            Some(j) if j >= self.cols => Err(Error::InvalidArgument(format!(
                "column index {j} out of range for {} columns",
                self.cols
            ))),
            _ => Ok(()),
        }
    }

    /// Converts into an `nalgebra` matrix (same column-major layout).
    pub(crate) fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_column_slice(self.rows, self.cols, &self.data)
    }
}

/// Returns `Phi' r`, one inner product per column.
pub fn correlations(phi: &Matrix, r: &[f64]) -> Result<Vec<f64>> {
    check_len("residual", phi.rows(), r.len())?;
    Ok(phi.columns().map(|c| dot(c, r)).collect())
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_correlations_echo_the_residual() {
        let phi = Matrix::identity(3);
        assert_eq!(correlations(&phi, &[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn zero_column_has_zero_correlation() {
        let phi = Matrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![3.0, 0.0, -1.0]]).unwrap();
        let c = correlations(&phi, &[0.7, -4.1]).unwrap();
        assert_eq!(c[1], 0.0);
    }

    #[test]
    fn correlations_reject_wrong_length() {
        let phi = Matrix::identity(3);
        assert!(matches!(
            correlations(&phi, &[1.0, 2.0]),
            Err(Error::Dimension { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn correlations_match_naive_double_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let r: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let phi = Matrix::from_rows(&rows).unwrap();
        let c = correlations(&phi, &r).unwrap();
        for j in 0..8 {
            let mut naive = 0.0;
            for i in 0..5 {
                naive += rows[i][j] * r[i];
            }
            assert!((c[j] - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(Matrix::from_column_major(1, 1, vec![f64::NAN]).is_err());
        assert!(Matrix::from_column_major(0, 3, vec![]).is_err());
        assert!(Matrix::from_column_major(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn row_and_column_constructors_agree() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Matrix::from_columns(&[vec![1.0, 3.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.get(1, 0), 3.0);
        assert_eq!(a.to_rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }
}
