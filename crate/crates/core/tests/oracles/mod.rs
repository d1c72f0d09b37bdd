//! Independent reference computations for integration and acceptance tests.
//!
//! Everything here uses explicit inverses and textbook forms so that it shares
//! no code path with the library solvers it checks.
#![allow(dead_code)]

use lqg_core::stochastic::NormalStream;
use lqg_core::{Matrix, Vector};

pub fn inv(m: &Matrix) -> Matrix {
    m.clone()
        .try_inverse()
        .expect("oracle matrix is invertible")
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let s = (m + m.transpose()) * 0.5;
    let mut e: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// Real parts of the eigenvalues, sorted ascending; panics on complex ones.
pub fn real_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut e: Vec<f64> = m
        .complex_eigenvalues()
        .iter()
        .map(|z| {
            assert!(z.im.abs() < 1e-9, "complex eigenvalue {z}");
            z.re
        })
        .collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

// Predictor, Kalman gain and covariance update in the textbook forms.

pub fn predictor_gain(a: &Matrix, c: &Matrix, p: &Matrix, rv: &Matrix) -> Matrix {
    a * p * c.transpose() * inv(&(c * p * c.transpose() + rv))
}

/// Covariance after one predictor step with an arbitrary gain.
pub fn predictor_cov_with_gain(
    a: &Matrix,
    c: &Matrix,
    qd: &Matrix,
    rv: &Matrix,
    p: &Matrix,
    l: &Matrix,
) -> Matrix {
    let closed = a - l * c;
    &closed * p * closed.transpose() + qd + l * rv * l.transpose()
}

/// Compact predictor Riccati form `A P Aᵀ + Qd - A P Cᵀ (C P Cᵀ + Rv)⁻¹ C P Aᵀ`.
pub fn predictor_cov_compact(
    a: &Matrix,
    c: &Matrix,
    qd: &Matrix,
    rv: &Matrix,
    p: &Matrix,
) -> Matrix {
    a * p * a.transpose() + qd
        - a * p * c.transpose() * inv(&(c * p * c.transpose() + rv)) * c * p * a.transpose()
}

pub fn filter_gain(c: &Matrix, prior: &Matrix, rv: &Matrix) -> Matrix {
    prior * c.transpose() * inv(&(c * prior * c.transpose() + rv))
}

/// Joseph-form posterior covariance with an arbitrary gain.
pub fn filter_cov_with_gain(c: &Matrix, rv: &Matrix, prior: &Matrix, l: &Matrix) -> Matrix {
    let n = prior.nrows();
    let i_lc = Matrix::identity(n, n) - l * c;
    &i_lc * prior * i_lc.transpose() + l * rv * l.transpose()
}

/// Compact posterior covariance `P - P Cᵀ (C P Cᵀ + Rv)⁻¹ C P`.
pub fn filter_cov_compact(c: &Matrix, rv: &Matrix, prior: &Matrix) -> Matrix {
    prior - prior * c.transpose() * inv(&(c * prior * c.transpose() + rv)) * c * prior
}

/// Single-equation filter step from `P_{k-1|k-1}`: gain and covariance written
/// directly in terms of `A P Aᵀ + Qd`, without a separate prediction stage.
pub fn one_step_filter(
    a: &Matrix,
    c: &Matrix,
    qd: &Matrix,
    rv: &Matrix,
    p_prev: &Matrix,
) -> (Matrix, Matrix) {
    let n = a.nrows();
    let m = a * p_prev * a.transpose() + qd;
    let l = &m * c.transpose() * inv(&(c * &m * c.transpose() + rv));
    let i_lc = Matrix::identity(n, n) - &l * c;
    let p = &i_lc * (a * p_prev * a.transpose() + qd) * i_lc.transpose() + &l * rv * l.transpose();
    (l, p)
}

/// Conditional mean and covariance of `x | y` from joint moments.
pub fn condition_oracle(
    mean_x: &Vector,
    mean_y: &Vector,
    cov_xx: &Matrix,
    cov_xy: &Matrix,
    cov_yy: &Matrix,
    y: &Vector,
) -> (Vector, Matrix) {
    let g = cov_xy * inv(cov_yy);
    (mean_x + &g * (y - mean_y), cov_xx - &g * cov_xy.transpose())
}

// LQR.

/// Quadratic cost of running `u_k = -K_k x_k` from `x0` on a time-invariant system.
pub fn closed_loop_cost(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    q_terminal: &Matrix,
    gains: &[Matrix],
    x0: &Vector,
) -> f64 {
    let mut x = x0.clone();
    let mut cost = 0.0;
    for k in gains {
        let u = -(k * &x);
        cost += x.dot(&(q * &x)) + u.dot(&(r * &u));
        x = a * &x + b * &u;
    }
    cost + x.dot(&(q_terminal * &x))
}

/// `Q + AᵀPA - AᵀPB (R + BᵀPB)⁻¹ BᵀPA - P`.
pub fn dare_residual(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Matrix {
    q + a.transpose() * p * a
        - a.transpose() * p * b * inv(&(r + b.transpose() * p * b)) * b.transpose() * p * a
        - p
}

/// Sample covariance (divisor `n - 1`) of zero-centred-or-not samples.
pub fn sample_covariance(samples: &[Vector]) -> Matrix {
    let n = samples[0].len();
    let count = samples.len() as f64;
    let mean = samples.iter().fold(Vector::zeros(n), |acc, s| acc + s) / count;
    let mut cov = Matrix::zeros(n, n);
    for s in samples {
        let d = s - &mean;
        cov += &d * d.transpose();
    }
    cov / (count - 1.0)
}

// Deterministic random fixtures.

pub struct Gen(NormalStream);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(NormalStream::new(seed))
    }

    pub fn normal(&mut self) -> f64 {
        self.0.standard_normal()
    }

    /// Uniform on `[0, 1)`: the polar angle of a standard bivariate normal.
    pub fn uniform(&mut self) -> f64 {
        let (x, y) = (self.normal(), self.normal());
        (y.atan2(x) / core::f64::consts::TAU + 0.5).min(1.0 - f64::EPSILON)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        (lo + (self.uniform() * (hi - lo + 1) as f64) as usize).min(hi)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| self.0.standard_normal())
    }

    pub fn vector(&mut self, n: usize) -> Vector {
        self.0.standard_normal_vector(n)
    }

    /// `G Gᵀ` with `G` of random rank in `1..=n`.
    pub fn psd(&mut self, n: usize) -> Matrix {
        let rank = self.int(1, n);
        let g = self.matrix(n, rank);
        &g * g.transpose()
    }

    /// `G Gᵀ + δ I` with `δ` in `[0.1, 1]`.
    pub fn pd(&mut self, n: usize) -> Matrix {
        let g = self.matrix(n, n);
        let delta = self.range(0.1, 1.0);
        &g * g.transpose() + Matrix::identity(n, n) * delta
    }

    /// Square matrix rescaled to the given spectral radius.
    pub fn with_radius(&mut self, n: usize, radius: f64) -> Matrix {
        let a = self.matrix(n, n);
        let rho = a
            .complex_eigenvalues()
            .iter()
            .fold(0.0_f64, |acc, z| acc.max(z.re.hypot(z.im)));
        a * (radius / rho.max(1e-6))
    }
}

/// Smallest singular value of the controllability matrix `[B, AB, ..., A^{n-1}B]`,
/// relative to its largest.
pub fn controllability_margin(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.nrows();
    let m = b.ncols();
    let mut ctrb = Matrix::zeros(n, n * m);
    let mut block = b.clone();
    for i in 0..n {
        ctrb.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = a * block;
    }
    let sv = ctrb.singular_values();
    let max = sv.max();
    sv.min() / max
}
