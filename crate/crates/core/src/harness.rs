//! Scenario assembly and seeded execution: open-loop simulation, LQR feedback,
//! Kalman/Luenberger estimation and the combined LQG loop.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimation::{
    filter_predict, filter_update, luenberger_step, predictor_step, smoother_run, Belief,
    EstimatorKind, EstimatorRun,
};
use crate::linalg::{Matrix, Vector};
use crate::lqr::{
    evaluate_cost, settling_indices, solve_dare_lqr, solve_lqr, RiccatiSolution, SettlingReport,
    SteadyStateLqr, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::model::{
    check_matrix, check_noise, observe, propagate, step_deterministic, validate, Definiteness,
    LqrWeights, LtvSystem, NoiseModel, Trajectory, ValidationReport,
};
use crate::stochastic::NormalStream;

#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    /// `u_k = 0`.
    None,
    Fixed(Matrix),
    /// Finite-horizon optimal schedule `K_0..K_{N-1}`.
    LqrSchedule,
    /// Steady-state gain of the algebraic Riccati equation.
    SteadyState,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorMode {
    None,
    Luenberger(Matrix),
    Predictor,
    Filter,
    /// Filter forward, RTS backward. Feedback (if any) uses the filtered estimate.
    Smoother,
}

/// Which state the controller acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    TrueState,
    /// `x̂_{k|k}` for the filter/smoother, `x̂_{k|k-1}` for the predictor, `x̂_k` for Luenberger.
    Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Explicit(Vector),
    /// `x_0 ~ N(x0_mean, P0)` of the simulation noise.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Everything needed for one deterministic-per-seed run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: LtvSystem,
    pub weights: Option<LqrWeights>,
    /// Model handed to the Kalman estimators.
    pub noise: Option<NoiseModel>,
    /// Noise actually injected into the simulation; defaults to `noise`.
    pub truth: Option<NoiseModel>,
    pub controller: Controller,
    pub estimator: EstimatorMode,
    pub feedback: Feedback,
    pub seed: u64,
    pub x0: InitialState,
    /// Settling radius; defaults to `1e-2 · ‖x_0‖`.
    pub settling_epsilon: Option<f64>,
    pub solver: SolverOptions,
}

impl Scenario {
    pub fn new(system: LtvSystem, x0: InitialState) -> Self {
        Scenario {
            system,
            weights: None,
            noise: None,
            truth: None,
            controller: Controller::None,
            estimator: EstimatorMode::None,
            feedback: Feedback::TrueState,
            seed: 0,
            x0,
            settling_epsilon: None,
            solver: SolverOptions::default(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.system.horizon
    }

    pub fn simulation_noise(&self) -> Option<&NoiseModel> {
        self.truth.as_ref().or(self.noise.as_ref())
    }

    /// Dimension/definiteness checks for every present component.
    pub fn validate(&self) -> ValidationReport {
        let mut report = validate(&self.system, self.weights.as_ref(), self.noise.as_ref());
        if let Some(truth) = &self.truth {
            check_noise(&mut report, "truth", &self.system, truth, false);
        }
        if let Controller::Fixed(k) = &self.controller {
            check_matrix(
                &mut report,
                "controller.K",
                k,
                self.system.m,
                self.system.n,
                Definiteness::None,
            );
        }
        if let EstimatorMode::Luenberger(l) = &self.estimator {
            check_matrix(
                &mut report,
                "estimator.L",
                l,
                self.system.n,
                self.system.p,
                Definiteness::None,
            );
        }
        if let InitialState::Explicit(x0) = &self.x0 {
            check_matrix(
                &mut report,
                "x0",
                &Matrix::from_column_slice(x0.len(), 1, x0.as_slice()),
                self.system.n,
                1,
                Definiteness::None,
            );
        }
        report
    }

    fn check_modes(&self) -> Result<()> {
        let mode = |msg: &str| Err(Error::Mode(String::from(msg)));
        match self.controller {
            Controller::LqrSchedule | Controller::SteadyState if self.weights.is_none() => {
                return mode("controller needs [weights]");
            }
            Controller::SteadyState => {
                let w = self.weights.as_ref().expect("checked above");
                if !self.system.is_time_invariant() || !w.q.is_constant() || !w.r.is_constant() {
                    return mode("steady-state controller needs a time-invariant system and constant weights");
                }
            }
            _ => {}
        }
        match self.estimator {
            EstimatorMode::None => {
                if self.feedback == Feedback::Estimate {
                    return mode("estimate feedback needs an estimator");
                }
            }
            EstimatorMode::Luenberger(_) => {
                if self.system.p == 0 {
                    return mode("estimator needs a measured output (C with at least one row)");
                }
            }
            EstimatorMode::Predictor | EstimatorMode::Filter | EstimatorMode::Smoother => {
                if self.system.p == 0 {
                    return mode("estimator needs a measured output (C with at least one row)");
                }
                if self.noise.is_none() {
                    return mode("Kalman estimators need [noise]");
                }
            }
        }
        if self.x0 == InitialState::Sampled && self.simulation_noise().is_none() {
            return mode("sampled x0 needs [noise] or [truth]");
        }
        Ok(())
    }
}

/// Everything produced by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub trajectory: Trajectory,
    pub estimator: Option<EstimatorRun>,
    /// Gain applied at each step (`m x n`, zero without a controller).
    pub gains: Vec<Matrix>,
    pub riccati: Option<RiccatiSolution>,
    pub steady: Option<SteadyStateLqr>,
    pub cost: Option<f64>,
    pub settling: Option<SettlingReport>,
    /// Diagonal of the reported estimator covariance, one per `k = 0..=N`.
    pub covariance_diagonals: Vec<Vector>,
}

enum Tracker {
    None,
    Luenberger {
        gain: Matrix,
        estimates: Vec<Vector>,
    },
    Kalman(EstimatorRun),
}

fn empty_run(kind: EstimatorKind) -> EstimatorRun {
    EstimatorRun {
        kind,
        predicted: Vec::new(),
        updated: Vec::new(),
        smoothed: Vec::new(),
        gains: Vec::new(),
        smoother_gains: Vec::new(),
        innovations: Vec::new(),
    }
}

/// Runs a scenario. The result is a pure function of the scenario (seed included).
pub fn run(scenario: &Scenario) -> Result<RunResult> {
    scenario.validate().into_result()?;
    scenario.check_modes()?;
    let system = &scenario.system;
    let horizon = system.horizon;
    let (n, m, p) = (system.n, system.m, system.p);

    let mut riccati = None;
    let mut steady = None;
    let gains: Vec<Matrix> = match &scenario.controller {
        Controller::None => alloc::vec![Matrix::zeros(m, n); horizon],
        Controller::Fixed(k) => alloc::vec![k.clone(); horizon],
        Controller::LqrSchedule => {
            let sol = solve_lqr(system, scenario.weights.as_ref().expect("mode checked"))?;
            let gains = sol.gains.clone();
            riccati = Some(sol);
            gains
        }
        Controller::SteadyState => {
            let w = scenario.weights.as_ref().expect("mode checked");
            let sol = solve_dare_lqr(
                system.a.at(0),
                system.b.at(0),
                w.q.at(0),
                w.r.at(0),
                scenario.solver.tol,
                scenario.solver.max_iter,
            )?;
            let gains = alloc::vec![sol.k.clone(); horizon];
            steady = Some(sol);
            gains
        }
    };

    let sim_noise = scenario.simulation_noise();
    let mut stream = NormalStream::new(scenario.seed);
    let x0 = match &scenario.x0 {
        InitialState::Explicit(x0) => x0.clone(),
        InitialState::Sampled => {
            let truth = sim_noise.expect("mode checked");
            &truth.x0_mean + stream.draw_zero_mean(&truth.p0, "P0")?
        }
    };

    let model = scenario.noise.as_ref();
    let mut tracker = match &scenario.estimator {
        EstimatorMode::None => Tracker::None,
        EstimatorMode::Luenberger(l) => Tracker::Luenberger {
            gain: l.clone(),
            estimates: alloc::vec![model.map_or_else(|| Vector::zeros(n), |nm| nm.x0_mean.clone())],
        },
        EstimatorMode::Predictor => {
            let mut run = empty_run(EstimatorKind::Predictor);
            run.predicted
                .push(Belief::predictor_prior(model.expect("mode checked")));
            Tracker::Kalman(run)
        }
        EstimatorMode::Filter | EstimatorMode::Smoother => {
            let mut run = empty_run(EstimatorKind::Filter);
            run.updated
                .push(Belief::filter_prior(model.expect("mode checked")));
            Tracker::Kalman(run)
        }
    };

    let measure = |k: usize, x: &Vector, stream: &mut NormalStream| -> Result<Vector> {
        match sim_noise {
            Some(noise) if p > 0 => observe(system, noise, k, x, stream),
            _ => Ok(system.c.at(k) * x),
        }
    };

    let mut states = Vec::with_capacity(horizon + 1);
    let mut inputs: Vec<Vector> = Vec::with_capacity(horizon);
    let mut outputs = Vec::with_capacity(horizon + 1);
    states.push(x0);
    for k in 0..=horizon {
        let x = states[k].clone();
        let y = measure(k, &x, &mut stream)?;

        if let Tracker::Kalman(run) = &mut tracker {
            if run.kind == EstimatorKind::Filter && k > 0 {
                let nm = model.expect("mode checked");
                let prior = filter_predict(
                    system.a.at(k - 1),
                    system.b.at(k - 1),
                    nm.qd.at(k - 1),
                    &run.updated[k - 1],
                    &inputs[k - 1],
                )?;
                let c = system.c.at(k);
                run.innovations.push(&y - c * &prior.mean);
                let (posterior, gain) = filter_update(c, nm.rv.at(k), &prior, &y)?;
                run.predicted.push(prior);
                run.updated.push(posterior);
                run.gains.push(gain);
            }
        }
        if p > 0 {
            outputs.push(y.clone());
        }
        if k == horizon {
            break;
        }

        let acted_on = match (scenario.feedback, &tracker) {
            (Feedback::TrueState, _) | (_, Tracker::None) => &x,
            (Feedback::Estimate, Tracker::Luenberger { estimates, .. }) => &estimates[k],
            (Feedback::Estimate, Tracker::Kalman(run)) => match run.kind {
                EstimatorKind::Predictor => &run.predicted[k].mean,
                _ => &run.updated[k].mean,
            },
        };
        let u = -(&gains[k] * acted_on);

        match &mut tracker {
            Tracker::None => {}
            Tracker::Luenberger { gain, estimates } => {
                let next = luenberger_step(
                    system.a.at(k),
                    system.b.at(k),
                    system.c.at(k),
                    gain,
                    &estimates[k],
                    &u,
                    &y,
                )?;
                estimates.push(next);
            }
            Tracker::Kalman(run) => {
                if run.kind == EstimatorKind::Predictor {
                    let nm = model.expect("mode checked");
                    let c = system.c.at(k);
                    run.innovations.push(&y - c * &run.predicted[k].mean);
                    let (next, gain) = predictor_step(
                        system.a.at(k),
                        system.b.at(k),
                        c,
                        nm.qd.at(k),
                        nm.rv.at(k),
                        &run.predicted[k],
                        &u,
                        &y,
                    )?;
                    run.predicted.push(next);
                    run.gains.push(gain);
                }
            }
        }

        let next = match sim_noise {
            Some(noise) => propagate(system, noise, k, &x, &u, &mut stream)?,
            None => step_deterministic(system, k, &x, &u)?,
        };
        inputs.push(u);
        states.push(next);
    }

    let estimator = match tracker {
        Tracker::None => None,
        Tracker::Luenberger { estimates, .. } => {
            return finish(
                scenario,
                states,
                inputs,
                outputs,
                Some(estimates),
                None,
                gains,
                riccati,
                steady,
            );
        }
        Tracker::Kalman(run) => Some(if scenario.estimator == EstimatorMode::Smoother {
            smoother_run(system, &run)?
        } else {
            run
        }),
    };
    let estimates = estimator
        .as_ref()
        .map(|run| run.estimates().iter().map(|b| b.mean.clone()).collect());
    finish(
        scenario, states, inputs, outputs, estimates, estimator, gains, riccati, steady,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    scenario: &Scenario,
    states: Vec<Vector>,
    inputs: Vec<Vector>,
    outputs: Vec<Vector>,
    estimates: Option<Vec<Vector>>,
    estimator: Option<EstimatorRun>,
    gains: Vec<Matrix>,
    riccati: Option<RiccatiSolution>,
    steady: Option<SteadyStateLqr>,
) -> Result<RunResult> {
    let covariances: Option<Vec<Matrix>> = estimator
        .as_ref()
        .map(|run| run.estimates().iter().map(|b| b.cov.clone()).collect());
    let covariance_diagonals = covariances
        .as_ref()
        .map(|cs| cs.iter().map(|c| c.diagonal()).collect())
        .unwrap_or_default();
    let mut trajectory = Trajectory {
        states,
        inputs,
        outputs,
        estimates,
        covariances,
        cost: None,
    };
    let cost = match &scenario.weights {
        Some(w) => Some(evaluate_cost(&trajectory, w)?),
        None => None,
    };
    trajectory.cost = cost;
    let settling = match scenario.controller {
        Controller::None => None,
        _ => {
            let epsilon = scenario
                .settling_epsilon
                .unwrap_or_else(|| 1e-2 * trajectory.states[0].norm());
            Some(settling_indices(&gains, &trajectory.states, epsilon))
        }
    };
    Ok(RunResult {
        trajectory,
        estimator,
        gains,
        riccati,
        steady,
        cost,
        settling,
        covariance_diagonals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Horizon,
    Seed,
    RScale,
    QScale,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Horizon => "N",
            SweepAxis::Seed => "seed",
            SweepAxis::RScale => "R-scale",
            SweepAxis::QScale => "Q-scale",
        }
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub value: f64,
    pub cost: Option<f64>,
    pub settling: Option<SettlingReport>,
    /// Trace of the reported estimator covariance at `k = N`.
    pub terminal_cov_trace: Option<f64>,
    /// `x_N - x̂_N` of the reported estimate.
    pub terminal_error: Option<Vector>,
}

fn as_count(axis: SweepAxis, value: f64) -> Result<u64> {
    if value >= 0.0 && libm::trunc(value) == value && value <= u64::MAX as f64 {
        Ok(value as u64)
    } else {
        Err(Error::Mode(format!(
            "{} sweep needs non-negative integers, got {value}",
            axis.name()
        )))
    }
}

/// Scenario with one parameter replaced.
pub fn vary(scenario: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario> {
    let mut s = scenario.clone();
    match axis {
        SweepAxis::Horizon => s.system.horizon = as_count(axis, value)? as usize,
        SweepAxis::Seed => s.seed = as_count(axis, value)?,
        SweepAxis::RScale | SweepAxis::QScale => {
            let w = s
                .weights
                .as_ref()
                .ok_or_else(|| Error::Mode(format!("{} sweep needs [weights]", axis.name())))?;
            s.weights = Some(if axis == SweepAxis::RScale {
                w.scaled(1.0, value)
            } else {
                w.scaled(value, 1.0)
            });
        }
    }
    Ok(s)
}

/// Independent runs, one per value, returned in input order.
pub fn sweep(scenario: &Scenario, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepSummary>> {
    values
        .iter()
        .map(|&value| {
            let result = run(&vary(scenario, axis, value)?)?;
            Ok(summarize(value, &result))
        })
        .collect()
}

pub fn summarize(value: f64, result: &RunResult) -> SweepSummary {
    let horizon = result.trajectory.horizon();
    let terminal_cov_trace = result
        .trajectory
        .covariances
        .as_ref()
        .and_then(|cs| cs.last())
        .map(|c| c.trace());
    let terminal_error = result
        .trajectory
        .estimates
        .as_ref()
        .and_then(|es| es.last())
        .map(|e| &result.trajectory.states[horizon] - e);
    SweepSummary {
        value,
        cost: result.cost,
        settling: result.settling,
        terminal_cov_trace,
        terminal_error,
    }
}
