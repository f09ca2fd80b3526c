//! Dense matrices and LU solves for the small Galerkin systems (at most a
//! few dozen unknowns).

use nalgebra::{DMatrix, DVector, Dyn, LU};
use thiserror::Error;

/// Pivots smaller than this fraction of the largest entry are treated as zero.
pub const PIVOT_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("singular system: pivot {pivot} has magnitude {magnitude:e}")]
    Singular { pivot: usize, magnitude: f64 },
    #[error("dimension mismatch: matrix is {rows}x{cols}, right-hand side has {rhs}")]
    Dimension { rows: usize, cols: usize, rhs: usize },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Square matrix backed by `nalgebra`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
        }
        Self(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (&self.0 * DVector::from_column_slice(v)).data.into()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, ij: (usize, usize)) -> &f64 {
        &self.0[ij]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, ij: (usize, usize)) -> &mut f64 {
        &mut self.0[ij]
    }
}

/// Reusable `PA = LU` factorization.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: LU<f64, Dyn, Dyn>,
    n: usize,
}

impl LuFactors {
    pub fn new(a: &DenseMatrix) -> Result<Self, LinalgError> {
        let n = a.dim();
        for j in 0..n {
            for i in 0..n {
                if !a[(i, j)].is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
            }
        }
        let lu = LU::new(a.0.clone());
        // with partial pivoting the k-th pivot is U[k][k]
        let threshold = PIVOT_TOL * a.max_abs();
        let u = lu.u();
        if let Some(k) = (0..n).find(|&k| u[(k, k)].abs() < threshold || u[(k, k)] == 0.0) {
            return Err(LinalgError::Singular {
                pivot: k,
                magnitude: u[(k, k)].abs(),
            });
        }
        Ok(Self { lu, n })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        if rhs.len() != n {
            return Err(LinalgError::Dimension {
                rows: n,
                cols: n,
                rhs: rhs.len(),
            });
        }
        let x = self
            .lu
            .solve(&DVector::from_column_slice(rhs))
            .ok_or(LinalgError::Singular {
                pivot: 0,
                magnitude: 0.0,
            })?;
        Ok(x.data.into())
    }
}

/// Solve `K x = rhs` by LU with partial pivoting.
pub fn solve_dense(k: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if rhs.len() != k.dim() {
        return Err(LinalgError::Dimension {
            rows: k.dim(),
            cols: k.dim(),
            rhs: rhs.len(),
        });
    }
    LuFactors::new(k)?.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let x = solve_dense(&DenseMatrix::identity(4), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0, 4.0]);
        let k = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        assert_eq!(solve_dense(&k, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn rank_deficient_is_singular() {
        let k = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(
            solve_dense(&k, &[1.0, 2.0]),
            Err(LinalgError::Singular { pivot: 1, .. })
        ));
        assert!(matches!(
            solve_dense(&DenseMatrix::zeros(3), &[0.0; 3]),
            Err(LinalgError::Singular { pivot: 0, .. })
        ));
    }

    #[test]
    fn needs_pivoting() {
        let k = DenseMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ]);
        let x = solve_dense(&k, &[3.0, 2.0, 4.0]).unwrap();
        for (a, b) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn reports_bad_input() {
        let mut k = DenseMatrix::identity(2);
        assert!(matches!(
            solve_dense(&k, &[1.0]),
            Err(LinalgError::Dimension { rhs: 1, .. })
        ));
        k[(1, 0)] = f64::NAN;
        assert_eq!(
            solve_dense(&k, &[1.0, 1.0]),
            Err(LinalgError::NonFinite { row: 1, col: 0 })
        );
    }
}
