//! Finite-horizon and steady-state LQR, closed-loop simulation, cost and settling analysis.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{
    check_len, check_shape, max_abs, max_abs_diff, spd_solve, spectral_radius, symmetrize, Matrix,
    Vector,
};
use crate::model::{validate, LqrWeights, LtvSystem, Trajectory};
use crate::schedule::Schedule;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Riccati matrices `P_0..=P_N` and gains `K_0..K_N` of a finite-horizon problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub riccati: Vec<Matrix>,
    pub gains: Vec<Matrix>,
}

impl RiccatiSolution {
    pub fn horizon(&self) -> usize {
        self.gains.len()
    }

    /// Optimal cost-to-go from `x0` at step 0, `x0ᵀ P_0 x0`.
    pub fn optimal_cost(&self, x0: &Vector) -> f64 {
        (x0.transpose() * &self.riccati[0] * x0)[(0, 0)]
    }

    pub fn gain_schedule(&self) -> Schedule<Matrix> {
        Schedule::Varying(self.gains.clone())
    }
}

/// Converged solution of the algebraic Riccati equation.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateLqr {
    pub p: Matrix,
    pub k: Matrix,
    pub iterations: usize,
    /// `max|DRE(P) - P|` at the returned `P`.
    pub residual: f64,
    pub closed_loop_spectral_radius: f64,
}

/// Settling indices of a state trajectory and a gain schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettlingReport {
    /// First index from which `‖x_k‖ ≤ ε` holds through `N` (equals `N` when it never settles earlier).
    pub k_x: usize,
    /// Last index through which every gain stays within `ε` (max-abs) of `K_0`.
    pub k_gain: usize,
    pub epsilon: f64,
}

impl SettlingReport {
    /// `k_x < k_K`: the gain schedule is constant over the state transient.
    pub fn condition_holds(&self) -> bool {
        self.k_x < self.k_gain
    }
}

/// One backward step of the difference Riccati equation.
///
/// Returns `(K_k, P_k)` with `K_k = (R + BᵀPB)⁻¹ BᵀPA` and
/// `P_k = Q + KᵀRK + (A-BK)ᵀ P (A-BK)`, symmetrized.
pub fn dre_step(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    p_next: &Matrix,
) -> Result<(Matrix, Matrix)> {
    let n = a.nrows();
    let m = b.ncols();
    check_shape("A", a, n, n)?;
    check_shape("B", b, n, m)?;
    check_shape("Q", q, n, n)?;
    check_shape("R", r, m, m)?;
    check_shape("P", p_next, n, n)?;

    let bt_p = b.transpose() * p_next;
    let inner = r + &bt_p * b;
    let k = spd_solve(&inner, &(&bt_p * a), "R + BᵀPB")?;
    let closed = a - b * &k;
    let p = q + k.transpose() * r * &k + closed.transpose() * p_next * &closed;
    Ok((k, symmetrize(&p)))
}

/// Backward recursion from `P_N = Q_N` down to `P_0`.
pub fn solve_lqr(system: &LtvSystem, weights: &LqrWeights) -> Result<RiccatiSolution> {
    validate(system, Some(weights), None).into_result()?;
    let horizon = system.horizon;
    let mut riccati = alloc::vec![Matrix::zeros(0, 0); horizon + 1];
    let mut gains = alloc::vec![Matrix::zeros(0, 0); horizon];
    riccati[horizon] = symmetrize(weights.q_at(horizon, horizon));
    for k in (0..horizon).rev() {
        let (gain, p) = dre_step(
            system.a.at(k),
            system.b.at(k),
            weights.q_at(k, horizon),
            weights.r_at(k),
            &riccati[k + 1],
        )?;
        gains[k] = gain;
        riccati[k] = p;
    }
    Ok(RiccatiSolution { riccati, gains })
}

/// `x_NᵀQ_N x_N + Σ (x_kᵀQ_k x_k + u_kᵀR_k u_k)`.
pub fn evaluate_cost(trajectory: &Trajectory, weights: &LqrWeights) -> Result<f64> {
    let horizon = trajectory.inputs.len();
    if trajectory.states.len() != horizon + 1 {
        return Err(Error::Length {
            what: "states",
            expected: horizon + 1,
            found: trajectory.states.len(),
        });
    }
    let quad = |m: &Matrix, v: &Vector| -> Result<f64> {
        check_shape("weight", m, v.len(), v.len())?;
        Ok((v.transpose() * m * v)[(0, 0)])
    };
    let mut cost = quad(weights.q_at(horizon, horizon), &trajectory.states[horizon])?;
    for k in 0..horizon {
        cost += quad(weights.q_at(k, horizon), &trajectory.states[k])?;
        cost += quad(weights.r_at(k), &trajectory.inputs[k])?;
    }
    Ok(cost)
}

/// Steady-state gain by fixed-point iteration of the DRE starting at `P = Q`.
pub fn solve_dare_lqr(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    tol: f64,
    max_iter: usize,
) -> Result<SteadyStateLqr> {
    let mut p = symmetrize(q);
    let mut diff = f64::INFINITY;
    for iteration in 1..=max_iter {
        let (_, next) = dre_step(a, b, q, r, &p)?;
        diff = max_abs_diff(&next, &p);
        p = next;
        if !diff.is_finite() {
            break;
        }
        if diff <= tol {
            let (k, check) = dre_step(a, b, q, r, &p)?;
            let residual = max_abs_diff(&check, &p);
            let closed_loop_spectral_radius = spectral_radius(&(a - b * &k));
            return Ok(SteadyStateLqr {
                p,
                k,
                iterations: iteration,
                residual,
                closed_loop_spectral_radius,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: diff,
    })
}

/// Pole-placement gain for a diagonal single-input system.
///
/// `K_i = (1/B_i) Π_j(λ_i - μ_j) / Π_{j≠i}(λ_i - λ_j)`; returned as a `1 x n` row.
pub fn mayne_murdoch_gain(open: &[f64], desired: &[f64], b_diag: &[f64]) -> Result<Matrix> {
    let n = open.len();
    if desired.len() != n {
        return Err(Error::Length {
            what: "desired eigenvalues",
            expected: n,
            found: desired.len(),
        });
    }
    if b_diag.len() != n {
        return Err(Error::Length {
            what: "input entries",
            expected: n,
            found: b_diag.len(),
        });
    }
    for i in 0..n {
        for j in i + 1..n {
            if open[i] == open[j] {
                return Err(Error::RepeatedEigenvalue { i, j });
            }
        }
    }
    if let Some(i) = b_diag.iter().position(|b| *b == 0.0) {
        return Err(Error::ZeroInput(i));
    }
    let row = (0..n).map(|i| {
        let num: f64 = desired.iter().map(|mu| open[i] - mu).product();
        let den: f64 = (0..n)
            .filter(|j| *j != i)
            .map(|j| open[i] - open[j])
            .product();
        num / den / b_diag[i]
    });
    Ok(Matrix::from_iterator(1, n, row))
}

/// Forward simulation with `u_k = -K_k x_k`.
pub fn simulate_closed_loop(
    system: &LtvSystem,
    gains: &Schedule<Matrix>,
    x0: &Vector,
) -> Result<Trajectory> {
    let horizon = system.horizon;
    if let Some(len) = gains.stored_len() {
        if len != horizon {
            return Err(Error::Length {
                what: "gain schedule",
                expected: horizon,
                found: len,
            });
        }
    }
    check_len("x0", x0, system.n)?;
    let mut states = Vec::with_capacity(horizon + 1);
    let mut inputs = Vec::with_capacity(horizon);
    let mut x = x0.clone();
    for k in 0..horizon {
        let gain = gains.at(k);
        check_shape("K", gain, system.m, system.n)?;
        let u = -(gain * &x);
        let next = system.a.at(k) * &x + system.b.at(k) * &u;
        states.push(core::mem::replace(&mut x, next));
        inputs.push(u);
    }
    states.push(x);
    let outputs = if system.p > 0 {
        states
            .iter()
            .enumerate()
            .map(|(k, x)| system.c.at(k) * x)
            .collect()
    } else {
        Vec::new()
    };
    Ok(Trajectory {
        states,
        inputs,
        outputs,
        ..Trajectory::default()
    })
}

/// Settling indices for the gains of `solution` and the states of `trajectory`.
pub fn settling_report(
    solution: &RiccatiSolution,
    trajectory: &Trajectory,
    epsilon: f64,
) -> SettlingReport {
    settling_indices(&solution.gains, &trajectory.states, epsilon)
}

pub fn settling_indices(gains: &[Matrix], states: &[Vector], epsilon: f64) -> SettlingReport {
    let last = states.len().saturating_sub(1);
    let k_x = states
        .iter()
        .rposition(|x| x.norm() > epsilon)
        .map_or(0, |k| (k + 1).min(last));
    let k_gain = match gains.first() {
        None => 0,
        Some(first) => gains
            .iter()
            .position(|g| max_abs(&(g - first)) > epsilon)
            .map_or(gains.len() - 1, |k| k - 1),
    };
    SettlingReport {
        k_x,
        k_gain,
        epsilon,
    }
}
