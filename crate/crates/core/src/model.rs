//! System, weight and noise descriptions plus one-step propagation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{check_len, max_abs, min_sym_eigenvalue, Matrix, Vector, DEFINITENESS_TOL};
use crate::schedule::Schedule;
use crate::stochastic::NormalStream;

/// Linear (possibly time-varying) system `x_{k+1} = A_k x_k + B_k u_k`, `y_k = C_k x_k`.
///
/// `A` and `B` cover steps `0..N`. `C` covers `0..=N` so the predictor
/// (measurements `y_0..y_{N-1}`) and the filter (`y_1..y_N`) index it natively.
#[derive(Debug, Clone, PartialEq)]
pub struct LtvSystem {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub horizon: usize,
    pub a: Schedule<Matrix>,
    pub b: Schedule<Matrix>,
    pub c: Schedule<Matrix>,
}

impl LtvSystem {
    /// Time-invariant system; dimensions are taken from `a`, `b` and `c`.
    pub fn lti(a: Matrix, b: Matrix, c: Matrix, horizon: usize) -> Self {
        LtvSystem {
            n: a.nrows(),
            m: b.ncols(),
            p: c.nrows(),
            horizon,
            a: Schedule::Constant(a),
            b: Schedule::Constant(b),
            c: Schedule::Constant(c),
        }
    }

    /// Time-invariant system without measurements (`p = 0`).
    pub fn lti_unmeasured(a: Matrix, b: Matrix, horizon: usize) -> Self {
        let n = a.nrows();
        Self::lti(a, b, Matrix::zeros(0, n), horizon)
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        LtvSystem {
            horizon,
            ..self.clone()
        }
    }

    pub fn is_time_invariant(&self) -> bool {
        self.a.is_constant() && self.b.is_constant() && self.c.is_constant()
    }

    fn check_step(&self, k: usize) -> Result<()> {
        if k < self.horizon {
            Ok(())
        } else {
            Err(Error::OutOfHorizon {
                k,
                horizon: self.horizon,
            })
        }
    }
}

/// Quadratic cost weights. `q` covers `0..=N` (index `N` is the terminal weight)
/// unless `q_terminal` overrides it; `r` covers `0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrWeights {
    pub q: Schedule<Matrix>,
    pub r: Schedule<Matrix>,
    pub q_terminal: Option<Matrix>,
}

impl LqrWeights {
    pub fn constant(q: Matrix, r: Matrix) -> Self {
        LqrWeights {
            q: Schedule::Constant(q),
            r: Schedule::Constant(r),
            q_terminal: None,
        }
    }

    pub fn with_terminal(mut self, q_terminal: Matrix) -> Self {
        self.q_terminal = Some(q_terminal);
        self
    }

    /// State weight at step `k` of a horizon-`horizon` problem.
    pub fn q_at(&self, k: usize, horizon: usize) -> &Matrix {
        match &self.q_terminal {
            Some(qn) if k == horizon => qn,
            _ => self.q.at(k),
        }
    }

    pub fn r_at(&self, k: usize) -> &Matrix {
        self.r.at(k)
    }

    pub fn scaled(&self, q_scale: f64, r_scale: f64) -> Self {
        LqrWeights {
            q: self.q.map(|q| q * q_scale),
            r: self.r.map(|r| r * r_scale),
            q_terminal: self.q_terminal.as_ref().map(|q| q * q_scale),
        }
    }
}

/// Disturbance and measurement-noise covariances plus the initial belief.
///
/// `qd` covers `0..N`; `rv` covers `0..=N` like `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub qd: Schedule<Matrix>,
    pub rv: Schedule<Matrix>,
    pub x0_mean: Vector,
    pub p0: Matrix,
}

impl NoiseModel {
    pub fn constant(qd: Matrix, rv: Matrix, x0_mean: Vector, p0: Matrix) -> Self {
        NoiseModel {
            qd: Schedule::Constant(qd),
            rv: Schedule::Constant(rv),
            x0_mean,
            p0,
        }
    }
}

/// Time-indexed record of one simulation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    /// `x_0..=x_N`.
    pub states: Vec<Vector>,
    /// `u_0..u_N`.
    pub inputs: Vec<Vector>,
    /// `y_0..=y_N` when the system has outputs, otherwise empty.
    pub outputs: Vec<Vector>,
    pub estimates: Option<Vec<Vector>>,
    pub covariances: Option<Vec<Matrix>>,
    pub cost: Option<f64>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }
}

/// What went wrong with one field.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },
    Length {
        expected: usize,
        found: usize,
    },
    NotSymmetric {
        asymmetry: f64,
    },
    NotPositiveSemidefinite {
        min_eigenvalue: f64,
    },
    NotPositiveDefinite {
        min_eigenvalue: f64,
    },
    EmptyHorizon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub problem: Problem,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.field)?;
        match &self.problem {
            Problem::Shape { expected, found } => write!(
                f,
                "expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Problem::Length { expected, found } => {
                write!(f, "expected {expected} entries, found {found}")
            }
            Problem::NotSymmetric { asymmetry } => {
                write!(f, "not symmetric (max |M - M^T| = {asymmetry:e})")
            }
            Problem::NotPositiveSemidefinite { min_eigenvalue } => write!(
                f,
                "not positive semidefinite (min eigenvalue {min_eigenvalue:e})"
            ),
            Problem::NotPositiveDefinite { min_eigenvalue } => write!(
                f,
                "not positive definite (min eigenvalue {min_eigenvalue:e})"
            ),
            Problem::EmptyHorizon => write!(f, "horizon must be positive"),
        }
    }
}

/// Every violated dimension or definiteness constraint. Empty iff valid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(self))
        }
    }

    pub(crate) fn push(&mut self, field: String, problem: Problem) {
        self.violations.push(Violation { field, problem });
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Definiteness {
    None,
    SemiDefinite,
    Definite,
}

fn label(name: &str, idx: Option<usize>) -> String {
    match idx {
        Some(k) => format!("{name}[{k}]"),
        None => String::from(name),
    }
}

pub(crate) fn check_matrix(
    report: &mut ValidationReport,
    field: &str,
    m: &Matrix,
    rows: usize,
    cols: usize,
    definiteness: Definiteness,
) {
    if m.nrows() != rows || m.ncols() != cols {
        report.push(
            String::from(field),
            Problem::Shape {
                expected: (rows, cols),
                found: (m.nrows(), m.ncols()),
            },
        );
        return;
    }
    if definiteness == Definiteness::None || rows == 0 {
        return;
    }
    let asymmetry = max_abs(&(m - m.transpose()));
    if asymmetry > DEFINITENESS_TOL * max_abs(m).max(1.0) {
        report.push(String::from(field), Problem::NotSymmetric { asymmetry });
        return;
    }
    let min_eigenvalue = min_sym_eigenvalue(m);
    match definiteness {
        Definiteness::SemiDefinite if min_eigenvalue < -DEFINITENESS_TOL => report.push(
            String::from(field),
            Problem::NotPositiveSemidefinite { min_eigenvalue },
        ),
        Definiteness::Definite if min_eigenvalue <= DEFINITENESS_TOL => report.push(
            String::from(field),
            Problem::NotPositiveDefinite { min_eigenvalue },
        ),
        _ => {}
    }
}

pub(crate) fn check_schedule(
    report: &mut ValidationReport,
    name: &str,
    s: &Schedule<Matrix>,
    len: usize,
    rows: usize,
    cols: usize,
    definiteness: Definiteness,
) {
    if let Some(found) = s.stored_len() {
        if found != len {
            report.push(
                String::from(name),
                Problem::Length {
                    expected: len,
                    found,
                },
            );
        }
    }
    for (idx, m) in s.entries() {
        check_matrix(report, &label(name, idx), m, rows, cols, definiteness);
    }
}

/// Noise checks shared by the estimator model (`rv_definite = true`) and
/// simulation truth (`rv_definite = false`, zero noise allowed).
pub(crate) fn check_noise(
    report: &mut ValidationReport,
    prefix: &str,
    system: &LtvSystem,
    noise: &NoiseModel,
    rv_definite: bool,
) {
    let (n, p, horizon) = (system.n, system.p, system.horizon);
    check_schedule(
        report,
        &format!("{prefix}.Qd"),
        &noise.qd,
        horizon,
        n,
        n,
        Definiteness::SemiDefinite,
    );
    check_schedule(
        report,
        &format!("{prefix}.Rv"),
        &noise.rv,
        horizon + 1,
        p,
        p,
        if rv_definite {
            Definiteness::Definite
        } else {
            Definiteness::SemiDefinite
        },
    );
    if noise.x0_mean.len() != n {
        report.push(
            format!("{prefix}.x0_mean"),
            Problem::Shape {
                expected: (n, 1),
                found: (noise.x0_mean.len(), 1),
            },
        );
    }
    check_matrix(
        report,
        &format!("{prefix}.P0"),
        &noise.p0,
        n,
        n,
        Definiteness::SemiDefinite,
    );
}

/// Checks dimensions, schedule lengths and the definiteness assumptions
/// `Q ⪰ 0`, `R ≻ 0`, `Qd ⪰ 0`, `Rv ≻ 0`, `P0 ⪰ 0`.
pub fn validate(
    system: &LtvSystem,
    weights: Option<&LqrWeights>,
    noise: Option<&NoiseModel>,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (n, m, p, horizon) = (system.n, system.m, system.p, system.horizon);
    if horizon == 0 {
        report.push(String::from("N"), Problem::EmptyHorizon);
    }
    check_schedule(
        &mut report,
        "A",
        &system.a,
        horizon,
        n,
        n,
        Definiteness::None,
    );
    check_schedule(
        &mut report,
        "B",
        &system.b,
        horizon,
        n,
        m,
        Definiteness::None,
    );
    check_schedule(
        &mut report,
        "C",
        &system.c,
        horizon + 1,
        p,
        n,
        Definiteness::None,
    );

    if let Some(w) = weights {
        check_schedule(
            &mut report,
            "Q",
            &w.q,
            if w.q_terminal.is_some() {
                horizon
            } else {
                horizon + 1
            },
            n,
            n,
            Definiteness::SemiDefinite,
        );
        if let Some(qn) = &w.q_terminal {
            check_matrix(&mut report, "QN", qn, n, n, Definiteness::SemiDefinite);
        }
        check_schedule(
            &mut report,
            "R",
            &w.r,
            horizon,
            m,
            m,
            Definiteness::Definite,
        );
    }
    if let Some(noise) = noise {
        check_noise(&mut report, "noise", system, noise, true);
    }
    report
}

/// `A_k x + B_k u`.
pub fn step_deterministic(system: &LtvSystem, k: usize, x: &Vector, u: &Vector) -> Result<Vector> {
    system.check_step(k)?;
    check_len("state", x, system.n)?;
    check_len("input", u, system.m)?;
    Ok(system.a.at(k) * x + system.b.at(k) * u)
}

/// Noisy measurement `y_k = C_k x + v_k`, `v_k ~ N(0, Rv_k)`. Consumes `p` normals.
pub fn observe(
    system: &LtvSystem,
    noise: &NoiseModel,
    k: usize,
    x: &Vector,
    stream: &mut NormalStream,
) -> Result<Vector> {
    if k > system.horizon {
        return Err(Error::OutOfHorizon {
            k,
            horizon: system.horizon,
        });
    }
    check_len("state", x, system.n)?;
    let v = stream.draw_zero_mean(noise.rv.at(k), "Rv")?;
    Ok(system.c.at(k) * x + v)
}

/// Noisy transition `A_k x + B_k u + d_k`, `d_k ~ N(0, Qd_k)`. Consumes `n` normals.
pub fn propagate(
    system: &LtvSystem,
    noise: &NoiseModel,
    k: usize,
    x: &Vector,
    u: &Vector,
    stream: &mut NormalStream,
) -> Result<Vector> {
    let next = step_deterministic(system, k, x, u)?;
    let d = stream.draw_zero_mean(noise.qd.at(k), "Qd")?;
    Ok(next + d)
}

/// One step of the stochastic system: returns `(x_{k+1}, y_k)`.
///
/// The measurement noise `v_k` is drawn before the disturbance `d_k`, which
/// is the same draw order as calling [`observe`] then [`propagate`].
pub fn step_stochastic(
    system: &LtvSystem,
    noise: &NoiseModel,
    k: usize,
    x: &Vector,
    u: &Vector,
    stream: &mut NormalStream,
) -> Result<(Vector, Vector)> {
    system.check_step(k)?;
    let y = observe(system, noise, k, x, stream)?;
    let next = propagate(system, noise, k, x, u, stream)?;
    Ok((next, y))
}
