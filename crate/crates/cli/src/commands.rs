//! Subcommand bodies. Each returns CSV tables plus human-readable summary lines;
//! the binary decides where they go.

use lqg_core::estimation::EstimatorKind;
use lqg_core::harness::{
    run, sweep as run_sweep, Controller, EstimatorMode, InitialState, RunResult, Scenario,
    SweepAxis,
};
use lqg_core::lqr::{solve_dare_lqr, solve_lqr};
use lqg_core::{Error, Matrix};

use crate::bundled;
use crate::scenario::{self, ScenarioError};
use crate::table::{fmt_num, Row, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(report) => CliError::Invalid(report.to_string()),
            Error::Mode(msg) => CliError::Invalid(msg),
            other => CliError::Runtime(other),
        }
    }
}

impl CliError {
    /// 2 for anything wrong with the input, 1 for failures while computing or writing.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Scenario(_) | CliError::Invalid(_) => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Command-line values that take precedence over the scenario file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(tol) = self.tol {
            s.solver.tol = tol;
        }
        if let Some(max_iter) = self.max_iter {
            s.solver.max_iter = max_iter;
        }
    }
}

/// Named CSV tables and summary lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Output {
    pub files: Vec<(String, Table)>,
    pub summary: Vec<String>,
}

pub fn load(text: &str, overrides: &Overrides) -> CliResult<Scenario> {
    let mut s = scenario::parse(text)?;
    overrides.apply(&mut s);
    Ok(s)
}

fn matrix_headers(prefix: &str, rows: usize, cols: usize) -> Vec<String> {
    (1..=rows)
        .flat_map(|i| (1..=cols).map(move |j| format!("{prefix}_{i}_{j}")))
        .collect()
}

fn vector_headers(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

/// Row-major entries.
fn entries(m: &Matrix) -> Vec<f64> {
    m.transpose().iter().copied().collect()
}

fn two_decimals(m: &Matrix) -> String {
    let cells: Vec<String> = entries(m).iter().map(|x| format!("{x:.2}")).collect();
    format!("[{}]", cells.join(", "))
}

pub fn lqr(s: &Scenario, steady: bool) -> CliResult<Output> {
    let weights = s
        .weights
        .as_ref()
        .ok_or_else(|| CliError::Invalid("lqr needs a [weights] section".into()))?;
    let (n, m) = (s.system.n, s.system.m);
    let mut out = Output::default();
    if steady {
        s.validate().into_result()?;
        if !s.system.is_time_invariant() || !weights.q.is_constant() || !weights.r.is_constant() {
            return Err(CliError::Invalid(
                "--steady needs a time-invariant system and constant weights".into(),
            ));
        }
        let sol = solve_dare_lqr(
            s.system.a.at(0),
            s.system.b.at(0),
            weights.q.at(0),
            weights.r.at(0),
            s.solver.tol,
            s.solver.max_iter,
        )?;
        let mut header = matrix_headers("K", m, n);
        header.extend(matrix_headers("P", n, n));
        header.extend(["iterations", "residual", "spectral_radius"].map(String::from));
        let mut table = Table::new(header);
        table.push(
            Row::new()
                .nums(&entries(&sol.k))
                .nums(&entries(&sol.p))
                .text(sol.iterations.to_string())
                .num(sol.residual)
                .num(sol.closed_loop_spectral_radius)
                .finish(),
        );
        out.files.push(("lqr_steady.csv".into(), table));
        out.summary
            .push(format!("steady-state K = {}", two_decimals(&sol.k)));
        out.summary.push(format!(
            "DARE converged in {} iterations, residual {}, closed-loop spectral radius {}",
            sol.iterations,
            fmt_num(sol.residual),
            fmt_num(sol.closed_loop_spectral_radius)
        ));
        return Ok(out);
    }

    let sol = solve_lqr(&s.system, weights)?;
    let mut header = vec!["k".to_string()];
    header.extend(matrix_headers("K", m, n));
    header.extend(vector_headers("P", n));
    let mut table = Table::new(header);
    for (k, p) in sol.riccati.iter().enumerate() {
        let gain = sol.gains.get(k).map(entries);
        table.push(
            Row::new()
                .text(k.to_string())
                .opt_nums(m * n, gain.as_ref())
                .nums(p.diagonal().iter())
                .finish(),
        );
    }
    out.files.push(("lqr.csv".into(), table));
    out.summary.push(format!(
        "N = {}, K_0 = {}",
        s.system.horizon,
        two_decimals(&sol.gains[0])
    ));
    match &s.x0 {
        InitialState::Explicit(x0) => {
            let j = sol.optimal_cost(x0);
            out.summary
                .push(format!("optimal cost J* = {j:.2} ({})", fmt_num(j)));
        }
        InitialState::Sampled => out
            .summary
            .push("optimal cost not reported: x0 is sampled".into()),
    }
    Ok(out)
}

pub fn estimate(s: &Scenario, mode: EstimatorMode) -> CliResult<Output> {
    let mut s = s.clone();
    s.estimator = mode;
    let result = run(&s)?;
    let table = estimate_table(&result);
    let mut out = Output::default();
    let name = match s.estimator {
        EstimatorMode::Predictor => "predict",
        EstimatorMode::Filter => "filter",
        EstimatorMode::Smoother => "smooth",
        _ => "estimate",
    };
    out.files.push((format!("estimate_{name}.csv"), table));
    out.summary.push(format!(
        "estimator {name}, N = {}, seed = {}",
        s.system.horizon, s.seed
    ));
    if let Some(last) = result
        .trajectory
        .covariances
        .as_ref()
        .and_then(|c| c.last())
    {
        out.summary.push(format!(
            "terminal covariance trace {}",
            fmt_num(last.trace())
        ));
    }
    Ok(out)
}

/// Per-`k` truth, estimate, covariance diagonals, gains and innovations.
///
/// Columns: `k, x_*, y_*, xhat_*, P_*` (reported covariance diagonal), then
/// `P_filt_*` (smoother only), `P_pred_*` (filter and smoother: the prior
/// `P(k|k-1)`), `L_*` and `innov_*` (predictor: used at step `k`; filter: update
/// at `k`), and `Ls_*` (smoother gains).
pub fn estimate_table(result: &RunResult) -> Table {
    let traj = &result.trajectory;
    let n = traj.states[0].len();
    let p = traj.outputs.first().map_or(0, |y| y.len());
    let horizon = traj.horizon();
    let kind = result.estimator.as_ref().map(|e| e.kind);
    let mut header = vec!["k".to_string()];
    header.extend(vector_headers("x", n));
    header.extend(vector_headers("y", p));
    header.extend(vector_headers("xhat", n));
    if kind.is_some() {
        header.extend(vector_headers("P", n));
    }
    if kind == Some(EstimatorKind::Smoother) {
        header.extend(vector_headers("P_filt", n));
    }
    if matches!(kind, Some(EstimatorKind::Filter | EstimatorKind::Smoother)) {
        header.extend(vector_headers("P_pred", n));
    }
    if kind.is_some() {
        header.extend(matrix_headers("L", n, p));
        header.extend(vector_headers("innov", p));
    }
    if kind == Some(EstimatorKind::Smoother) {
        header.extend(matrix_headers("Ls", n, n));
    }
    let mut table = Table::new(header);
    for k in 0..=horizon {
        let mut row = Row::new()
            .text(k.to_string())
            .nums(traj.states[k].iter())
            .nums(traj.outputs.get(k).into_iter().flat_map(|y| y.iter()))
            .opt_nums(n, traj.estimates.as_ref().map(|e| e[k].iter()));
        if let Some(est) = &result.estimator {
            row = row.nums(result.covariance_diagonals[k].iter());
            // Index of the filter gain/prior belonging to step k (filter gains start at k = 1).
            let (gain_index, prior) = match est.kind {
                EstimatorKind::Predictor => (Some(k).filter(|&k| k < horizon), None),
                _ => {
                    let i = k.checked_sub(1);
                    (i, i.map(|i| est.predicted[i].cov.diagonal()))
                }
            };
            if est.kind == EstimatorKind::Smoother {
                row = row.nums(est.updated[k].cov.diagonal().iter());
            }
            if est.kind != EstimatorKind::Predictor {
                row = row.opt_nums(n, prior.as_ref().map(|d| d.iter()));
            }
            let gain = gain_index.map(|i| entries(&est.gains[i]));
            row = row
                .opt_nums(n * p, gain.as_ref())
                .opt_nums(p, gain_index.map(|i| est.innovations[i].iter()));
            if est.kind == EstimatorKind::Smoother {
                let ls = est.smoother_gains.get(k).map(entries);
                row = row.opt_nums(n * n, ls.as_ref());
            }
        }
        table.push(row.finish());
    }
    table
}

/// Columns: `k, x_*, u_*, y_*`, then `xhat_*`/`P_*` with an estimator, then the applied gain `K_*`.
pub fn trajectory_table(result: &RunResult) -> Table {
    let traj = &result.trajectory;
    let n = traj.states[0].len();
    let m = result.gains.first().map_or(0, |g| g.nrows());
    let p = traj.outputs.first().map_or(0, |y| y.len());
    let horizon = traj.horizon();
    let mut header = vec!["k".to_string()];
    header.extend(vector_headers("x", n));
    header.extend(vector_headers("u", m));
    header.extend(vector_headers("y", p));
    if traj.estimates.is_some() {
        header.extend(vector_headers("xhat", n));
    }
    if traj.covariances.is_some() {
        header.extend(vector_headers("P", n));
    }
    header.extend(matrix_headers("K", m, n));
    let mut table = Table::new(header);
    for k in 0..=horizon {
        let mut row = Row::new()
            .text(k.to_string())
            .nums(traj.states[k].iter())
            .opt_nums(m, traj.inputs.get(k).map(|u| u.iter()))
            .nums(traj.outputs.get(k).into_iter().flat_map(|y| y.iter()));
        if let Some(e) = &traj.estimates {
            row = row.nums(e[k].iter());
        }
        if traj.covariances.is_some() {
            row = row.nums(result.covariance_diagonals[k].iter());
        }
        let gain = result.gains.get(k).map(entries);
        table.push(row.opt_nums(m * n, gain.as_ref()).finish());
    }
    table
}

fn describe_result(result: &RunResult, out: &mut Output) {
    if let Some(cost) = result.cost {
        out.summary
            .push(format!("cost J = {cost:.2} ({})", fmt_num(cost)));
    }
    if let Some(st) = result.settling {
        out.summary.push(format!(
            "settling (epsilon {}): k_x = {}, k_K = {}, k_x < k_K: {}",
            fmt_num(st.epsilon),
            st.k_x,
            st.k_gain,
            st.condition_holds()
        ));
    }
    if let Some(steady) = &result.steady {
        out.summary
            .push(format!("steady-state K = {}", two_decimals(&steady.k)));
    }
}

pub fn simulate(s: &Scenario) -> CliResult<Output> {
    let result = run(s)?;
    let mut out = Output::default();
    out.files
        .push(("simulate.csv".into(), trajectory_table(&result)));
    out.summary
        .push(format!("N = {}, seed = {}", s.system.horizon, s.seed));
    describe_result(&result, &mut out);
    Ok(out)
}

/// `"5,50"` or a half-open integer range `"0..100"`.
pub fn parse_values(spec: &str) -> CliResult<Vec<f64>> {
    let bad = |what: &str| CliError::Invalid(format!("--values: cannot parse `{what}`"));
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad(lo))?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad(hi))?;
        return Ok((lo..hi).map(|v| v as f64).collect());
    }
    spec.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad(v)))
        .collect()
}

pub fn sweep(s: &Scenario, axis: SweepAxis, values: &[f64]) -> CliResult<Output> {
    let rows = run_sweep(s, axis, values)?;
    let mut table = Table::new([
        "value",
        "cost",
        "k_x",
        "k_K",
        "condition",
        "terminal_cov_trace",
    ]);
    for r in &rows {
        let st = r.settling;
        table.push(
            Row::new()
                .num(r.value)
                .opt_nums(1, r.cost.as_ref().map(std::iter::once))
                .text(st.map(|s| s.k_x.to_string()).unwrap_or_default())
                .text(st.map(|s| s.k_gain.to_string()).unwrap_or_default())
                .text(
                    st.map(|s| s.condition_holds().to_string())
                        .unwrap_or_default(),
                )
                .opt_nums(1, r.terminal_cov_trace.as_ref().map(std::iter::once))
                .finish(),
        );
    }
    let mut out = Output::default();
    out.files.push(("sweep.csv".into(), table));
    out.summary.push(format!(
        "{} sweep over {} values",
        axis.name(),
        values.len()
    ));
    Ok(out)
}

pub fn validate(s: &Scenario) -> CliResult<Output> {
    s.validate().into_result()?;
    let sys = &s.system;
    let mut out = Output::default();
    out.summary.push(format!(
        "ok: n = {}, m = {}, p = {}, N = {}{}",
        sys.n,
        sys.m,
        sys.p,
        sys.horizon,
        if sys.is_time_invariant() {
            ", time-invariant"
        } else {
            ", time-varying"
        }
    ));
    Ok(out)
}

/// Figures reproducible from the bundled scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig4,
}

pub fn reproduce(figure: Figure, overrides: &Overrides) -> CliResult<Output> {
    match figure {
        Figure::Fig1 => reproduce_fig1(overrides),
        Figure::Fig4 => reproduce_fig4(overrides),
    }
}

fn reproduce_fig1(overrides: &Overrides) -> CliResult<Output> {
    let base = load(bundled::FIG1, overrides)?;
    let weights = base.weights.as_ref().expect("bundled scenario has weights");
    let steady = solve_dare_lqr(
        base.system.a.at(0),
        base.system.b.at(0),
        weights.q.at(0),
        weights.r.at(0),
        base.solver.tol,
        base.solver.max_iter,
    )?;
    let mut out = Output::default();
    let mut costs = Table::new(["N", "J_schedule", "J_fixed", "k_x", "k_K", "condition"]);
    out.summary.push(format!(
        "fixed gain K = {} (steady state)",
        two_decimals(&steady.k)
    ));
    out.summary.push(format!(
        "{:>4}  {:>10}  {:>10}  {:>4}  {:>4}  k_x < k_K",
        "N", "J(K_k)", "J(K)", "k_x", "k_K"
    ));
    for horizon in [5usize, 50] {
        let mut s = base.clone();
        s.system.horizon = horizon;
        let scheduled = run(&Scenario {
            controller: Controller::LqrSchedule,
            ..s.clone()
        })?;
        let fixed = run(&Scenario {
            controller: Controller::Fixed(steady.k.clone()),
            ..s
        })?;
        let (js, jf) = (
            scheduled.cost.expect("weights"),
            fixed.cost.expect("weights"),
        );
        let st = scheduled.settling.expect("controller");
        out.files.push((
            format!("fig1_N{horizon}_schedule.csv"),
            trajectory_table(&scheduled),
        ));
        out.files.push((
            format!("fig1_N{horizon}_fixed.csv"),
            trajectory_table(&fixed),
        ));
        costs.push(
            Row::new()
                .text(horizon.to_string())
                .num(js)
                .num(jf)
                .text(st.k_x.to_string())
                .text(st.k_gain.to_string())
                .text(st.condition_holds().to_string())
                .finish(),
        );
        out.summary.push(format!(
            "{horizon:>4}  {js:>10.4}  {jf:>10.4}  {:>4}  {:>4}  {}",
            st.k_x,
            st.k_gain,
            st.condition_holds()
        ));
    }
    out.files.push(("fig1_costs.csv".into(), costs));
    Ok(out)
}

fn reproduce_fig4(overrides: &Overrides) -> CliResult<Output> {
    let base = load(bundled::FIG4, overrides)?;
    let mut out = Output::default();
    out.summary
        .push(format!("seed = {}, N = {}", base.seed, base.system.horizon));
    let mut ordered = true;
    let mut diagonals = Vec::new();
    for (name, mode) in [
        ("predict", EstimatorMode::Predictor),
        ("filter", EstimatorMode::Filter),
        ("smooth", EstimatorMode::Smoother),
    ] {
        let result = run(&Scenario {
            estimator: mode,
            ..base.clone()
        })?;
        out.files
            .push((format!("fig4_{name}.csv"), estimate_table(&result)));
        if let Some(est) = &result.estimator {
            if est.kind == EstimatorKind::Smoother {
                for k in 0..est.smoothed.len() {
                    let (s, f) = (
                        est.smoothed[k].cov.diagonal(),
                        est.updated[k].cov.diagonal(),
                    );
                    let prior = k.checked_sub(1).map(|i| est.predicted[i].cov.diagonal());
                    for i in 0..s.len() {
                        ordered &= s[i] <= f[i];
                        if let Some(prior) = &prior {
                            ordered &= f[i] <= prior[i];
                        }
                    }
                }
            }
        }
        diagonals.push((name, result.covariance_diagonals.last().cloned()));
    }
    for (name, d) in diagonals {
        if let Some(d) = d {
            let cells: Vec<String> = d.iter().map(|x| fmt_num(*x)).collect();
            out.summary.push(format!(
                "{name:>8}: terminal variance diagonal [{}]",
                cells.join(", ")
            ));
        }
    }
    out.summary.push(format!(
        "diag P(k|N) <= diag P(k|k) <= diag P(k|k-1) at every k: {ordered}"
    ));
    Ok(out)
}
