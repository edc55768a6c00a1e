//! Small dense helpers shared by the iteration, certificate and baseline code.

use nalgebra::{DMatrix, DVector};

/// Relative eigenvalue floor below which a Hessian is treated as singular.
pub const SINGULAR_RATIO: f64 = 1e-12;

/// Failure of [`SpdFactor::new`].
#[derive(Debug, Clone, PartialEq)]
pub enum FactorError {
    NotSquare,
    NonFinite,
    /// `min_eig` is below `SINGULAR_RATIO * max_eig` (or non-positive).
    Singular { min_eig: f64, max_eig: f64 },
}

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    lower: DMatrix<f64>,
}

impl SpdFactor {
    /// Factor `a`, rejecting matrices whose smallest eigenvalue falls below
    /// `SINGULAR_RATIO` times the largest.
    pub fn new(a: &DMatrix<f64>) -> Result<Self, FactorError> {
        if !a.is_square() {
            return Err(FactorError::NotSquare);
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(FactorError::NonFinite);
        }
        let (min_eig, max_eig) = extreme_eigenvalues(a);
        if !(max_eig > 0.0) || min_eig <= SINGULAR_RATIO * max_eig {
            return Err(FactorError::Singular { min_eig, max_eig });
        }
        let n = a.nrows();
        let mut lower = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= lower[(j, k)] * lower[(j, k)];
            }
            if d <= 0.0 {
                // eigenvalue check passed but rounding broke the pivot
                return Err(FactorError::Singular { min_eig, max_eig });
            }
            let d = d.sqrt();
            lower[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= lower[(i, k)] * lower[(j, k)];
                }
                lower[(i, j)] = s / d;
            }
        }
        Ok(Self { lower })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.lower.nrows();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lower[(i, k)] * y[k];
            }
            y[i] = s / self.lower[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.lower[(k, i)] * y[k];
            }
            y[i] = s / self.lower[(i, i)];
        }
        y
    }
}

/// Sorted eigenvalues of a symmetric matrix (ascending).
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `(λ_min, λ_max)` of a symmetric matrix.
pub fn extreme_eigenvalues(a: &DMatrix<f64>) -> (f64, f64) {
    if a.nrows() == 1 {
        return (a[(0, 0)], a[(0, 0)]);
    }
    let ev = symmetric_eigenvalues(a);
    (ev[0], ev[ev.len() - 1])
}

/// Spectral norm of a symmetric matrix.
pub fn symmetric_norm(a: &DMatrix<f64>) -> f64 {
    let (lo, hi) = extreme_eigenvalues(a);
    lo.abs().max(hi.abs())
}

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = a.amax().max(1.0);
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            if (a[(i, j)] - a[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Euclidean norm of a stacked block vector.
pub fn stacked_norm(blocks: &[DVector<f64>]) -> f64 {
    blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
}

pub fn mean(blocks: &[DVector<f64>]) -> DVector<f64> {
    let n = blocks[0].len();
    let mut m = DVector::zeros(n);
    for b in blocks {
        m += b;
    }
    m / blocks.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = SpdFactor::new(&a).unwrap().solve(&b);
        assert!((&a * &x - &b).norm() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(SpdFactor::new(&a), Err(FactorError::Singular { .. })));
        let tiny = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]);
        assert!(SpdFactor::new(&tiny).is_err());
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(SpdFactor::new(&a).is_err());
    }
}
