use serde::{Deserialize, Serialize};

use super::{axpy, check_len, dot, norm2, IndexSet, Matrix};
use crate::error::{Error, Result};

/// A new column is rejected as dependent when its orthogonal remainder falls
/// below this fraction of the largest diagonal of `R` (or of its own norm).
pub const SINGULAR_RTOL: f64 = 1e-10;

/// Least-squares fit of `y` on the columns of `Phi` indexed by `support`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsSolution {
    pub support: IndexSet,
    /// Coefficients aligned with `support`.
    pub coefficients: Vec<f64>,
    pub residual: Vec<f64>,
    pub residual_norm: f64,
}

impl LsSolution {
    /// Scatters the coefficients into a dense length-`n` vector.
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (&j, &c) in self.support.iter().zip(&self.coefficients) {
            x[j] = c;
        }
        x
    }
}

/// Thin QR factorization `Phi_A = Q R` that grows by appending columns.
///
/// `Q` has orthonormal columns built by classical Gram-Schmidt with one
/// reorthogonalization pass; `R` is upper triangular with positive diagonal.
/// Columns are kept in insertion order.
#[derive(Debug, Clone)]
pub struct QrFactorization {
    rows: usize,
    q: Vec<f64>,
    r_cols: Vec<Vec<f64>>,
    order: Vec<usize>,
    support: IndexSet,
    max_diag: f64,
}

impl QrFactorization {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            q: Vec::new(),
            r_cols: Vec::new(),
            order: Vec::new(),
            support: IndexSet::empty(),
            max_diag: 0.0,
        }
    }

    /// Fresh factorization of the columns in `support` (ascending order).
    pub fn from_columns(phi: &Matrix, support: &IndexSet) -> Result<Self> {
        let mut f = Self::new(phi.rows());
        f.append_columns(phi, support)?;
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn support(&self) -> &IndexSet {
        &self.support
    }

    /// Column indices in the order they were appended.
    pub fn insertion_order(&self) -> &[usize] {
        &self.order
    }

    fn q_col(&self, i: usize) -> &[f64] {
        &self.q[i * self.rows..(i + 1) * self.rows]
    }

    /// Appends the columns of `new` in ascending order.
    ///
    /// Either every column is appended or the factorization is left untouched.
    pub fn append_columns(&mut self, phi: &Matrix, new: &IndexSet) -> Result<()> {
        self.append_in_order(phi, new.as_slice())
    }

    /// Appends columns in the given order (must be distinct and new).
    pub fn append_in_order(&mut self, phi: &Matrix, cols: &[usize]) -> Result<()> {
        check_len("factorization rows", self.rows, phi.rows())?;
        let mut seen = self.support.clone();
        for &j in cols {
            if j >= phi.cols() {
                return Err(Error::InvalidArgument(format!(
                    "column index {j} out of range for {} columns",
                    phi.cols()
                )));
            }
            if seen.contains(j) {
                return Err(Error::InvalidArgument(format!(
                    "column {j} is already in the factorization"
                )));
            }
            seen = seen.union(&IndexSet::from_sorted_unchecked(vec![j]));
        }
        if self.len() + cols.len() > self.rows {
            return Err(Error::InvalidArgument(format!(
                "cannot factor {} columns with only {} rows",
                self.len() + cols.len(),
                self.rows
            )));
        }

        let base = self.len();
        let saved_max = self.max_diag;
        for &j in cols {
            if let Err(e) = self.push_column(phi.column(j), j) {
                self.truncate(base);
                self.max_diag = saved_max;
                return Err(e);
            }
        }
        self.support = seen;
        Ok(())
    }

    fn push_column(&mut self, col: &[f64], index: usize) -> Result<()> {
        let k = self.len();
        let mut w = col.to_vec();
        let mut rcol = vec![0.0; k + 1];
        // two Gram-Schmidt sweeps keep Q orthonormal to working precision
        for _ in 0..2 {
            for i in 0..k {
                let qi = self.q_col(i);
                let c = dot(qi, &w);
                rcol[i] += c;
                axpy(-c, qi, &mut w);
            }
        }
        let diag = norm2(&w);
        let scale = self.max_diag.max(norm2(col));
        if diag == 0.0 || diag <= SINGULAR_RTOL * scale {
            return Err(Error::Singular {
                column: index,
                iteration: None,
            });
        }
        rcol[k] = diag;
        w.iter_mut().for_each(|v| *v /= diag);
        self.q.extend_from_slice(&w);
        self.r_cols.push(rcol);
        self.order.push(index);
        self.max_diag = self.max_diag.max(diag);
        Ok(())
    }

    fn truncate(&mut self, len: usize) {
        self.q.truncate(len * self.rows);
        self.r_cols.truncate(len);
        self.order.truncate(len);
    }

    /// Least-squares solution of `min ||y - Phi_A c||` over the current columns.
    pub fn solve(&self, y: &[f64]) -> Result<LsSolution> {
        check_len("measurements", self.rows, y.len())?;
        let k = self.len();
        let mut r = y.to_vec();
        let mut z = vec![0.0; k];
        for _ in 0..2 {
            for (i, zi) in z.iter_mut().enumerate() {
                let qi = self.q_col(i);
                let c = dot(qi, &r);
                *zi += c;
                axpy(-c, qi, &mut r);
            }
        }
        // back substitution R c = z
        let mut c = z;
        for i in (0..k).rev() {
            let mut acc = c[i];
            for j in i + 1..k {
                acc -= self.r_cols[j][i] * c[j];
            }
            c[i] = acc / self.r_cols[i][i];
        }
        let mut coefficients = vec![0.0; k];
        for (pos, &j) in self.order.iter().enumerate() {
            let slot = self
                .support
                .position(j)
                .expect("insertion order and support agree");
            coefficients[slot] = c[pos];
        }
        let residual_norm = norm2(&r);
        Ok(LsSolution {
            support: self.support.clone(),
            coefficients,
            residual: r,
            residual_norm,
        })
    }

    /// Dense `k x k` upper-triangular factor (column-major), insertion order.
    pub fn r_factor(&self) -> Vec<f64> {
        let k = self.len();
        let mut out = vec![0.0; k * k];
        for (j, col) in self.r_cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                out[j * k + i] = v;
            }
        }
        out
    }

    /// Orthonormal basis `Q` (column-major `rows x k`), insertion order.
    pub fn q_factor(&self) -> &[f64] {
        &self.q
    }
}

/// Solves `min ||y - Phi_support c||_2` by a fresh QR factorization.
pub fn least_squares(phi: &Matrix, support: &IndexSet, y: &[f64]) -> Result<LsSolution> {
    check_len("measurements", phi.rows(), y.len())?;
    phi.check_support(support)?;
    if support.len() > phi.rows() {
        return Err(Error::InvalidArgument(format!(
            "support of size {} exceeds the {} available measurements",
            support.len(),
            phi.rows()
        )));
    }
    QrFactorization::from_columns(phi, support)?.solve(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2_sq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
        let data = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::from_column_major(m, n, data).unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Normal-equations oracle via Gaussian elimination with partial pivoting.
    fn normal_equations(phi: &Matrix, support: &IndexSet, y: &[f64]) -> Vec<f64> {
        let k = support.len();
        let cols: Vec<&[f64]> = support.iter().map(|&j| phi.column(j)).collect();
        let mut a = vec![vec![0.0; k + 1]; k];
        for i in 0..k {
            for j in 0..k {
                a[i][j] = dot(cols[i], cols[j]);
            }
            a[i][k] = dot(cols[i], y);
        }
        for p in 0..k {
            let piv = (p..k)
                .max_by(|&x, &y| a[x][p].abs().total_cmp(&a[y][p].abs()))
                .unwrap();
            a.swap(p, piv);
            for i in p + 1..k {
                let f = a[i][p] / a[p][p];
                for j in p..=k {
                    a[i][j] -= f * a[p][j];
                }
            }
        }
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = a[i][k];
            for j in i + 1..k {
                acc -= a[i][j] * x[j];
            }
            x[i] = acc / a[i][i];
        }
        x
    }

    #[test]
    fn empty_support_returns_y_as_residual() {
        let phi = Matrix::identity(3);
        let y = vec![1.0, 2.0, -3.0];
        let ls = least_squares(&phi, &IndexSet::empty(), &y).unwrap();
        assert!(ls.coefficients.is_empty());
        assert_eq!(ls.residual, y);
    }

    #[test]
    fn orthonormal_columns_recover_coefficients() {
        let phi = Matrix::identity(4);
        let y = vec![1.0, 2.0, 0.0, 0.0];
        let ls = least_squares(&phi, &IndexSet::new(vec![0, 1]).unwrap(), &y).unwrap();
        assert!((ls.coefficients[0] - 1.0).abs() < 1e-15);
        assert!((ls.coefficients[1] - 2.0).abs() < 1e-15);
        assert!(ls.residual_norm < 1e-15);
    }

    #[test]
    fn matches_normal_equations_on_well_conditioned_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = random_matrix(&mut rng, 10, 4);
        let y = random_vec(&mut rng, 10);
        let support = IndexSet::range(4);
        let ls = least_squares(&phi, &support, &y).unwrap();
        let oracle = normal_equations(&phi, &support, &y);
        for (a, b) in ls.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn residual_is_orthogonal_and_pythagorean() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let phi = random_matrix(&mut rng, 12, 20);
            let y = random_vec(&mut rng, 12);
            let support = IndexSet::new(vec![1, 4, 5, 11, 19]).unwrap();
            let ls = least_squares(&phi, &support, &y).unwrap();
            let rn = norm2(&ls.residual);
            assert!((rn - ls.residual_norm).abs() <= 1e-12 * rn.max(1e-300));
            for &j in support.iter() {
                let col = phi.column(j);
                assert!(dot(col, &ls.residual).abs() <= 1e-10 * norm2(col) * rn.max(1e-300));
            }
            let fit = phi.mul_support(&support, &ls.coefficients).unwrap();
            let lhs = norm2_sq(&y);
            let rhs = norm2_sq(&fit) + norm2_sq(&ls.residual);
            assert!((lhs - rhs).abs() <= 1e-9 * lhs);
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let phi = random_matrix(&mut rng, 9, 6);
        let y = random_vec(&mut rng, 9);
        let support = IndexSet::new(vec![0, 2, 3]).unwrap();
        let first = least_squares(&phi, &support, &y).unwrap();
        let second = least_squares(&phi, &support, &first.residual).unwrap();
        assert!(second.coefficients.iter().all(|c| c.abs() < 1e-10));
        for (a, b) in first.residual.iter().zip(&second.residual) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn append_to_empty_equals_fresh() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = random_matrix(&mut rng, 8, 10);
        let set = IndexSet::new(vec![2, 7]).unwrap();
        let mut inc = QrFactorization::new(8);
        inc.append_columns(&phi, &set).unwrap();
        let fresh = QrFactorization::from_columns(&phi, &set).unwrap();
        assert_eq!(inc.r_factor(), fresh.r_factor());
    }

    #[test]
    fn incremental_append_matches_direct_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let phi = random_matrix(&mut rng, 8, 10);
        let y = random_vec(&mut rng, 8);
        let mut inc = QrFactorization::new(8);
        inc.append_columns(&phi, &IndexSet::new(vec![2]).unwrap()).unwrap();
        inc.append_columns(&phi, &IndexSet::new(vec![5]).unwrap()).unwrap();
        let a = inc.solve(&y).unwrap();
        let b = least_squares(&phi, &IndexSet::new(vec![2, 5]).unwrap(), &y).unwrap();
        for (x, z) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - z).abs() < 1e-10);
        }
        for (x, z) in a.residual.iter().zip(&b.residual) {
            assert!((x - z).abs() < 1e-10);
        }
    }

    #[test]
    fn duplicated_column_is_singular_and_state_is_kept() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut cols: Vec<Vec<f64>> = (0..6).map(|_| random_vec(&mut rng, 8)).collect();
        cols.push(cols[5].clone());
        let phi = Matrix::from_columns(&cols).unwrap();
        let mut f = QrFactorization::new(8);
        f.append_columns(&phi, &IndexSet::new(vec![0]).unwrap()).unwrap();
        let err = f
            .append_columns(&phi, &IndexSet::new(vec![5, 6]).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::Singular { column: 6, .. }));
        assert_eq!(f.support().as_slice(), &[0]);
        assert_eq!(f.len(), 1);
        assert!(matches!(
            least_squares(&phi, &IndexSet::new(vec![5, 6]).unwrap(), &vec![1.0; 8]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn overlapping_append_is_rejected() {
        let phi = Matrix::identity(4);
        let mut f = QrFactorization::from_columns(&phi, &IndexSet::new(vec![1]).unwrap()).unwrap();
        assert!(matches!(
            f.append_columns(&phi, &IndexSet::new(vec![1, 2]).unwrap()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_column_is_singular() {
        let phi = Matrix::from_columns(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            least_squares(&phi, &IndexSet::new(vec![0]).unwrap(), &[1.0, 1.0]),
            Err(Error::Singular { column: 0, .. })
        ));
    }
}
