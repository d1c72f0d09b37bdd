//! Gaussian densities, conditioning and seeded sampling.
//!
//! # Normal stream
//!
//! [`NormalStream`] is the only source of randomness in the crate. Its output
//! is pinned so that CSV fixtures are bit-stable across platforms and builds:
//!
//! 1. Uniform source: ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//!    `seed_from_u64(seed)`.
//! 2. Each uniform is `(w >> 11) as f64 + 0.5` scaled by `2^-53`, where `w`
//!    is the next `u64`; the value lies strictly inside `(0, 1)`.
//! 3. Normals come in Box–Muller pairs from uniforms `(u1, u2)`:
//!    `r = sqrt(-2 ln u1)`, `z0 = r cos(2π u2)`, `z1 = r sin(2π u2)`, emitted
//!    in that order. `ln`, `sqrt`, `sin` and `cos` are the `libm` routines.
//! 4. A Gaussian vector of dimension `n` always consumes exactly `n` normals,
//!    `x = mean + S z` with `S Sᵀ = cov` from [`psd_factor`].

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::linalg::{check_len, check_shape, psd_factor, spd_solve, symmetrize, Matrix, Vector};

/// Seeded, platform-independent stream of standard normal deviates.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        NormalStream {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    pub fn standard_normal_vector(&mut self, n: usize) -> Vector {
        Vector::from_iterator(n, (0..n).map(|_| self.standard_normal()))
    }

    /// Draws `N(0, cov)`.
    pub fn draw_zero_mean(&mut self, cov: &Matrix, what: &'static str) -> Result<Vector> {
        let factor = psd_factor(cov, what)?;
        let z = self.standard_normal_vector(cov.nrows());
        Ok(factor * z)
    }
}

/// Gaussian random vector `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianVector {
    pub mean: Vector,
    pub cov: Matrix,
}

impl GaussianVector {
    pub fn new(mean: Vector, cov: Matrix) -> Result<Self> {
        check_shape("covariance", &cov, mean.len(), mean.len())?;
        Ok(GaussianVector { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Jointly Gaussian pair `(x, y)` given by its block moments.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGaussian {
    pub mean_x: Vector,
    pub mean_y: Vector,
    pub cov_xx: Matrix,
    pub cov_xy: Matrix,
    pub cov_yy: Matrix,
}

impl JointGaussian {
    /// Joint of a prior `x ~ N(mean, cov)` and a linear measurement `y = C x + v`,
    /// `v ~ N(0, rv)` independent of `x`.
    pub fn from_linear_measurement(
        prior: &GaussianVector,
        c: &Matrix,
        rv: &Matrix,
    ) -> Result<Self> {
        check_shape("C", c, c.nrows(), prior.dim())?;
        check_shape("Rv", rv, c.nrows(), c.nrows())?;
        Ok(JointGaussian {
            mean_x: prior.mean.clone(),
            mean_y: c * &prior.mean,
            cov_xx: prior.cov.clone(),
            cov_xy: &prior.cov * c.transpose(),
            cov_yy: c * &prior.cov * c.transpose() + rv,
        })
    }

    /// Regression gain `V(x,y) V(y)⁻¹`; `z = x - G y` is uncorrelated with `y`.
    pub fn regression_gain(&self) -> Result<Matrix> {
        let gt = spd_solve(&self.cov_yy, &self.cov_xy.transpose(), "V(y)")?;
        Ok(gt.transpose())
    }
}

/// Scalar normal density.
pub fn gaussian_pdf(x: f64, mean: f64, var: f64) -> Result<f64> {
    if var.is_nan() || var <= 0.0 {
        return Err(Error::NonPositiveVariance(var));
    }
    let d = x - mean;
    Ok(libm::exp(-d * d / (2.0 * var)) / libm::sqrt(2.0 * PI * var))
}

/// Multivariate normal density; determinant and quadratic form share one Cholesky factor.
pub fn multivariate_gaussian_pdf(x: &Vector, g: &GaussianVector) -> Result<f64> {
    let n = g.dim();
    check_len("x", x, n)?;
    let chol = nalgebra::Cholesky::new(symmetrize(&g.cov))
        .ok_or(Error::Singular { what: "covariance" })?;
    let l = chol.l();
    let w = l
        .solve_lower_triangular(&(x - &g.mean))
        .ok_or(Error::Singular { what: "covariance" })?;
    let quad = w.norm_squared();
    let log_det: f64 = (0..n).map(|i| 2.0 * libm::log(l[(i, i)])).sum();
    Ok(libm::exp(
        -0.5 * quad - 0.5 * log_det - 0.5 * n as f64 * libm::log(2.0 * PI),
    ))
}

/// Distribution of `x` given `y = y_obs`.
pub fn condition(joint: &JointGaussian, y_obs: &Vector) -> Result<GaussianVector> {
    let nx = joint.mean_x.len();
    let ny = joint.mean_y.len();
    check_len("y_obs", y_obs, ny)?;
    check_shape("V(x)", &joint.cov_xx, nx, nx)?;
    check_shape("V(x,y)", &joint.cov_xy, nx, ny)?;
    check_shape("V(y)", &joint.cov_yy, ny, ny)?;
    let gain = joint.regression_gain()?;
    let mean = &joint.mean_x + &gain * (y_obs - &joint.mean_y);
    let cov = symmetrize(&(&joint.cov_xx - &gain * joint.cov_xy.transpose()));
    Ok(GaussianVector { mean, cov })
}

/// `count` draws of `g` from the stream.
pub fn sample_gaussian(
    g: &GaussianVector,
    stream: &mut NormalStream,
    count: usize,
) -> Result<Vec<Vector>> {
    let factor = psd_factor(&g.cov, "covariance")?;
    Ok((0..count)
        .map(|_| &g.mean + &factor * stream.standard_normal_vector(g.dim()))
        .collect())
}
