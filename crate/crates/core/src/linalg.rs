//! Dense small-matrix helpers shared by the solvers.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Tolerance on the minimum eigenvalue used by every definiteness check.
pub const DEFINITENESS_TOL: f64 = 1e-9;

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry; the norm used for Riccati convergence and gain settling.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(libm::fabs(*v)))
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    max_abs(&(a - b))
}

/// Minimum eigenvalue of the symmetric part of a square matrix.
pub fn min_sym_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(*v))
}

pub fn is_psd(m: &Matrix) -> bool {
    min_sym_eigenvalue(m) >= -DEFINITENESS_TOL
}

pub fn is_pd(m: &Matrix) -> bool {
    min_sym_eigenvalue(m) > DEFINITENESS_TOL
}

/// Solves `S X = rhs` for symmetric positive definite `S` through its Cholesky factor.
pub fn spd_solve(s: &Matrix, rhs: &Matrix, what: &'static str) -> Result<Matrix> {
    let chol = Cholesky::new(symmetrize(s)).ok_or(Error::Singular { what })?;
    let x = chol.solve(rhs);
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Singular { what })
    }
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(libm::hypot(z.re, z.im)))
}

/// Factor `S` with `S Sᵀ = cov` for a symmetric PSD covariance.
///
/// Plain Cholesky is tried first. Semidefinite inputs fall back to a
/// diagonally pivoted outer-product Cholesky, which stops once the remaining
/// diagonal drops below the definiteness tolerance. The factor is always
/// `n x n` (unused columns are zero) so every draw consumes `n` normals.
pub fn psd_factor(cov: &Matrix, what: &'static str) -> Result<Matrix> {
    let n = cov.nrows();
    let sym = symmetrize(cov);
    if let Some(chol) = Cholesky::new(sym.clone()) {
        return Ok(chol.l());
    }

    let scale = sym
        .diagonal()
        .iter()
        .fold(1.0_f64, |a, v| a.max(libm::fabs(*v)));
    let cutoff = DEFINITENESS_TOL * scale;
    let mut residual = sym;
    let mut factor = Matrix::zeros(n, n);
    let mut used: Vec<bool> = alloc::vec![false; n];
    for col in 0..n {
        let mut pivot = None;
        let mut best = cutoff;
        for i in 0..n {
            if !used[i] && residual[(i, i)] > best {
                best = residual[(i, i)];
                pivot = Some(i);
            }
        }
        let Some(j) = pivot else { break };
        used[j] = true;
        let d = libm::sqrt(residual[(j, j)]);
        let c: Vector = residual.column(j) / d;
        residual -= &c * c.transpose();
        factor.set_column(col, &c);
    }

    let leftover = min_sym_eigenvalue(&residual);
    if leftover < -DEFINITENESS_TOL * scale || !leftover.is_finite() {
        let min_eigenvalue = min_sym_eigenvalue(cov);
        return Err(Error::Indefinite {
            what,
            min_eigenvalue,
        });
    }
    Ok(factor)
}

pub(crate) fn check_shape(what: &'static str, m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() == rows && m.ncols() == cols {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected_rows: rows,
            expected_cols: cols,
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

pub(crate) fn check_len(what: &'static str, v: &Vector, len: usize) -> Result<()> {
    if v.len() == len {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected_rows: len,
            expected_cols: 1,
            rows: v.len(),
            cols: 1,
        })
    }
}
