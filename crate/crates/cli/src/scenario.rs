//! Scenario files: TOML documents describing a system, weights, noise and a run.
//!
//! ```toml
//! [system]
//! A = [[0.5, 0.0], [-1.0, 1.5]]      # constant, row-major
//! B = { schedule = [[[0.5], [0.1]], [[0.4], [0.1]]] }   # one matrix per k
//! C = [[1.0, 0.5]]                   # optional
//!
//! [weights]                          # Q, R, optional terminal QN
//! [noise]                            # estimator model: Qd, Rv, P0, x0_mean
//! [truth]                            # sampling covariances, each defaulting to [noise]
//!
//! [run]
//! N = 20
//! seed = 1
//! controller = "lqr-schedule"        # none | lqr-schedule | steady-state | { fixed = [[...]] }
//! estimator = "filter"               # none | predictor | filter | smoother | { luenberger = [[...]] }
//! feedback = "estimate"              # state | estimate
//! x0 = [10.0, 5.0]                   # or "sampled"
//! epsilon = 0.1                      # settling radius
//! tol = 1e-10
//! max_iter = 100000
//! ```
//!
//! A scalar may stand for a `1 x 1` matrix. The full grammar is in `docs/scenario-format.md`.

use lqg_core::harness::{
    Controller, EstimatorMode, Feedback, InitialState, Scenario, SolverOptions,
};
use lqg_core::{LqrWeights, LtvSystem, Matrix, NoiseModel, Schedule, Vector};
use toml::{Table, Value};

/// A parse failure anchored to a field and, where possible, a line.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{field}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ScenarioError {
    pub field: String,
    pub message: String,
    pub line: Option<usize>,
}

type Res<T> = Result<T, ScenarioError>;

fn err<T>(field: &str, message: impl Into<String>) -> Res<T> {
    Err(ScenarioError {
        field: field.to_string(),
        message: message.into(),
        line: None,
    })
}

fn number(v: &Value, field: &str) -> Res<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => err(
            field,
            format!("expected a number, found {}", other.type_str()),
        ),
    }
}

fn vector(v: &Value, field: &str) -> Res<Vector> {
    match v {
        Value::Array(items) => {
            let xs = items
                .iter()
                .enumerate()
                .map(|(i, x)| number(x, &format!("{field}[{i}]")))
                .collect::<Res<Vec<f64>>>()?;
            Ok(Vector::from_vec(xs))
        }
        other => err(
            field,
            format!("expected an array of numbers, found {}", other.type_str()),
        ),
    }
}

fn matrix(v: &Value, field: &str) -> Res<Matrix> {
    match v {
        Value::Float(_) | Value::Integer(_) => Ok(Matrix::from_element(1, 1, number(v, field)?)),
        Value::Array(rows) => {
            if rows.is_empty() {
                return err(field, "empty matrix");
            }
            let mut data = Vec::new();
            let mut width = None;
            for (i, row) in rows.iter().enumerate() {
                let Value::Array(entries) = row else {
                    return err(
                        field,
                        format!(
                            "row {} is not an array (matrices are nested row arrays)",
                            i + 1
                        ),
                    );
                };
                if *width.get_or_insert(entries.len()) != entries.len() {
                    return err(
                        field,
                        format!(
                            "row {} has {} entries, expected {}",
                            i + 1,
                            entries.len(),
                            width.unwrap()
                        ),
                    );
                }
                for (j, x) in entries.iter().enumerate() {
                    data.push(number(x, &format!("{field}[{}][{}]", i + 1, j + 1))?);
                }
            }
            let cols = width.unwrap_or(0);
            if cols == 0 {
                return err(field, "empty row");
            }
            Ok(Matrix::from_row_slice(rows.len(), cols, &data))
        }
        other => err(
            field,
            format!("expected a matrix, found {}", other.type_str()),
        ),
    }
}

fn schedule(v: &Value, field: &str) -> Res<Schedule<Matrix>> {
    if let Value::Table(t) = v {
        only_keys(t, field, &["constant", "schedule"])?;
        return match (t.get("constant"), t.get("schedule")) {
            (Some(c), None) => Ok(Schedule::Constant(matrix(c, field)?)),
            (None, Some(Value::Array(items))) if !items.is_empty() => Ok(Schedule::Varying(
                items
                    .iter()
                    .enumerate()
                    .map(|(k, m)| matrix(m, &format!("{field}[k={k}]")))
                    .collect::<Res<_>>()?,
            )),
            (None, Some(_)) => err(field, "schedule must be a non-empty array of matrices"),
            _ => err(field, "expected exactly one of `constant` or `schedule`"),
        };
    }
    Ok(Schedule::Constant(matrix(v, field)?))
}

fn only_keys(t: &Table, section: &str, allowed: &[&str]) -> Res<()> {
    for key in t.keys() {
        if !allowed.contains(&key.as_str()) {
            let field = if section.is_empty() {
                key.clone()
            } else {
                format!("{section}.{key}")
            };
            return err(
                &field,
                format!("unknown key (expected one of: {})", allowed.join(", ")),
            );
        }
    }
    Ok(())
}

fn section<'a>(doc: &'a Table, name: &str) -> Res<Option<&'a Table>> {
    match doc.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(other) => err(
            name,
            format!("expected a [{name}] section, found {}", other.type_str()),
        ),
    }
}

fn required<'a>(t: &'a Table, section: &str, key: &str) -> Res<&'a Value> {
    t.get(key)
        .map_or_else(|| err(&format!("{section}.{key}"), "missing"), Ok)
}

fn first(s: &Schedule<Matrix>) -> &Matrix {
    match s {
        Schedule::Constant(m) => m,
        Schedule::Varying(ms) => &ms[0],
    }
}

fn noise_model(t: &Table, section: &str, fallback: Option<&NoiseModel>) -> Res<NoiseModel> {
    only_keys(t, section, &["Qd", "Rv", "P0", "x0_mean"])?;
    let get = |key: &str| -> Res<Option<&Value>> {
        match (t.get(key), fallback) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(_)) => Ok(None),
            (None, None) => err(&format!("{section}.{key}"), "missing"),
        }
    };
    let fb = |f: fn(&NoiseModel) -> Schedule<Matrix>| fallback.map(f).expect("fallback present");
    Ok(NoiseModel {
        qd: match get("Qd")? {
            Some(v) => schedule(v, &format!("{section}.Qd"))?,
            None => fb(|n| n.qd.clone()),
        },
        rv: match get("Rv")? {
            Some(v) => schedule(v, &format!("{section}.Rv"))?,
            None => fb(|n| n.rv.clone()),
        },
        p0: match get("P0")? {
            Some(v) => matrix(v, &format!("{section}.P0"))?,
            None => fallback.expect("fallback present").p0.clone(),
        },
        x0_mean: match get("x0_mean")? {
            Some(v) => vector(v, &format!("{section}.x0_mean"))?,
            None => fallback.expect("fallback present").x0_mean.clone(),
        },
    })
}

fn string_or_table<'a>(v: &'a Value, field: &str) -> Res<Result<&'a str, (&'a String, &'a Value)>> {
    match v {
        Value::String(s) => Ok(Ok(s)),
        Value::Table(t) if t.len() == 1 => Ok(Err(t.iter().next().expect("one entry"))),
        other => err(
            field,
            format!(
                "expected a string or a one-key table, found {}",
                other.type_str()
            ),
        ),
    }
}

fn count(v: &Value, field: &str) -> Res<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => err(field, "expected a non-negative integer"),
    }
}

fn parse_table(doc: &Table) -> Res<Scenario> {
    only_keys(doc, "", &["system", "weights", "noise", "truth", "run"])?;
    let system =
        section(doc, "system")?.map_or_else(|| err("system", "missing [system] section"), Ok)?;
    only_keys(system, "system", &["A", "B", "C"])?;
    let a = schedule(required(system, "system", "A")?, "system.A")?;
    let b = schedule(required(system, "system", "B")?, "system.B")?;
    let n = first(&a).nrows();
    let m = first(&b).ncols();
    let c = match system.get("C") {
        Some(v) => schedule(v, "system.C")?,
        None => Schedule::Constant(Matrix::zeros(0, n)),
    };
    let p = first(&c).nrows();

    let run = section(doc, "run")?.map_or_else(|| err("run", "missing [run] section"), Ok)?;
    only_keys(
        run,
        "run",
        &[
            "N",
            "seed",
            "controller",
            "estimator",
            "feedback",
            "x0",
            "epsilon",
            "tol",
            "max_iter",
        ],
    )?;
    let horizon = count(required(run, "run", "N")?, "run.N")? as usize;

    let weights = match section(doc, "weights")? {
        None => None,
        Some(t) => {
            only_keys(t, "weights", &["Q", "R", "QN"])?;
            Some(LqrWeights {
                q: schedule(required(t, "weights", "Q")?, "weights.Q")?,
                r: schedule(required(t, "weights", "R")?, "weights.R")?,
                q_terminal: t.get("QN").map(|v| matrix(v, "weights.QN")).transpose()?,
            })
        }
    };
    let noise = section(doc, "noise")?
        .map(|t| noise_model(t, "noise", None))
        .transpose()?;
    let truth = section(doc, "truth")?
        .map(|t| noise_model(t, "truth", noise.as_ref()))
        .transpose()?;

    let controller = match run.get("controller") {
        None => Controller::None,
        Some(v) => match string_or_table(v, "run.controller")? {
            Ok("none") => Controller::None,
            Ok("lqr-schedule") => Controller::LqrSchedule,
            Ok("steady-state") => Controller::SteadyState,
            Err((key, m)) if key == "fixed" => {
                Controller::Fixed(matrix(m, "run.controller.fixed")?)
            }
            _ => {
                return err(
                    "run.controller",
                    "expected none, lqr-schedule, steady-state or { fixed = [[...]] }",
                )
            }
        },
    };
    let estimator = match run.get("estimator") {
        None => EstimatorMode::None,
        Some(v) => match string_or_table(v, "run.estimator")? {
            Ok("none") => EstimatorMode::None,
            Ok("predictor") => EstimatorMode::Predictor,
            Ok("filter") => EstimatorMode::Filter,
            Ok("smoother") => EstimatorMode::Smoother,
            Err((key, l)) if key == "luenberger" => {
                EstimatorMode::Luenberger(matrix(l, "run.estimator.luenberger")?)
            }
            _ => {
                return err(
                    "run.estimator",
                    "expected none, predictor, filter, smoother or { luenberger = [[...]] }",
                )
            }
        },
    };
    let feedback = match run.get("feedback") {
        None if estimator == EstimatorMode::None => Feedback::TrueState,
        None => Feedback::Estimate,
        Some(Value::String(s)) if s == "state" => Feedback::TrueState,
        Some(Value::String(s)) if s == "estimate" => Feedback::Estimate,
        Some(_) => return err("run.feedback", "expected \"state\" or \"estimate\""),
    };
    let x0 = match required(run, "run", "x0")? {
        Value::String(s) if s == "sampled" => InitialState::Sampled,
        Value::String(_) => return err("run.x0", "expected an array of numbers or \"sampled\""),
        v => InitialState::Explicit(vector(v, "run.x0")?),
    };
    let mut solver = SolverOptions::default();
    if let Some(v) = run.get("tol") {
        solver.tol = number(v, "run.tol")?;
        if solver.tol.is_nan() || solver.tol <= 0.0 {
            return err("run.tol", "must be positive");
        }
    }
    if let Some(v) = run.get("max_iter") {
        solver.max_iter = count(v, "run.max_iter")? as usize;
    }
    let settling_epsilon = run
        .get("epsilon")
        .map(|v| number(v, "run.epsilon"))
        .transpose()?;

    Ok(Scenario {
        system: LtvSystem {
            n,
            m,
            p,
            horizon,
            a,
            b,
            c,
        },
        weights,
        noise,
        truth,
        controller,
        estimator,
        feedback,
        seed: run
            .get("seed")
            .map(|v| count(v, "run.seed"))
            .transpose()?
            .unwrap_or(0),
        x0,
        settling_epsilon,
        solver,
    })
}

/// Line (1-based) of `key` inside `[section]`, or of the section header itself.
fn locate(text: &str, field: &str) -> Option<usize> {
    let mut parts = field.split('.');
    let section = parts.next()?;
    let key = parts.next().map(|k| k.split('[').next().unwrap_or(k));
    let mut in_section = false;
    let mut header_line = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            in_section = t.trim_start_matches('[').trim_end_matches(']').trim() == section;
            if in_section {
                header_line = Some(i + 1);
            }
            continue;
        }
        if in_section {
            if let Some(key) = key {
                if let Some(rest) = t.strip_prefix(key) {
                    if rest.trim_start().starts_with('=') {
                        return Some(i + 1);
                    }
                }
            }
        }
    }
    header_line
}

pub fn parse(text: &str) -> Res<Scenario> {
    let doc: Table = toml::from_str(text).map_err(|e| ScenarioError {
        field: "syntax".into(),
        message: e.message().trim().to_string(),
        line: e.span().map(|s| text[..s.start].lines().count().max(1)),
    })?;
    parse_table(&doc).map_err(|mut e| {
        e.line = locate(text, &e.field);
        e
    })
}

fn matrix_value(m: &Matrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(|x| Value::Float(*x)).collect()))
            .collect(),
    )
}

fn vector_value(v: &Vector) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

fn schedule_value(s: &Schedule<Matrix>) -> Value {
    match s {
        Schedule::Constant(m) => matrix_value(m),
        Schedule::Varying(ms) => {
            let mut t = Table::new();
            t.insert(
                "schedule".into(),
                Value::Array(ms.iter().map(matrix_value).collect()),
            );
            Value::Table(t)
        }
    }
}

fn noise_value(n: &NoiseModel) -> Value {
    let mut t = Table::new();
    t.insert("Qd".into(), schedule_value(&n.qd));
    t.insert("Rv".into(), schedule_value(&n.rv));
    t.insert("P0".into(), matrix_value(&n.p0));
    t.insert("x0_mean".into(), vector_value(&n.x0_mean));
    Value::Table(t)
}

fn tagged(key: &str, m: &Matrix) -> Value {
    let mut t = Table::new();
    t.insert(key.into(), matrix_value(m));
    Value::Table(t)
}

/// Serializes a scenario so that [`parse`] returns an equal value.
pub fn render(s: &Scenario) -> String {
    let mut doc = Table::new();
    let mut system = Table::new();
    system.insert("A".into(), schedule_value(&s.system.a));
    system.insert("B".into(), schedule_value(&s.system.b));
    if s.system.p > 0 {
        system.insert("C".into(), schedule_value(&s.system.c));
    }
    doc.insert("system".into(), Value::Table(system));
    if let Some(w) = &s.weights {
        let mut t = Table::new();
        t.insert("Q".into(), schedule_value(&w.q));
        t.insert("R".into(), schedule_value(&w.r));
        if let Some(qn) = &w.q_terminal {
            t.insert("QN".into(), matrix_value(qn));
        }
        doc.insert("weights".into(), Value::Table(t));
    }
    if let Some(n) = &s.noise {
        doc.insert("noise".into(), noise_value(n));
    }
    if let Some(n) = &s.truth {
        doc.insert("truth".into(), noise_value(n));
    }
    let mut run = Table::new();
    run.insert("N".into(), Value::Integer(s.system.horizon as i64));
    run.insert("seed".into(), Value::Integer(s.seed as i64));
    run.insert(
        "controller".into(),
        match &s.controller {
            Controller::None => Value::String("none".into()),
            Controller::LqrSchedule => Value::String("lqr-schedule".into()),
            Controller::SteadyState => Value::String("steady-state".into()),
            Controller::Fixed(k) => tagged("fixed", k),
        },
    );
    run.insert(
        "estimator".into(),
        match &s.estimator {
            EstimatorMode::None => Value::String("none".into()),
            EstimatorMode::Predictor => Value::String("predictor".into()),
            EstimatorMode::Filter => Value::String("filter".into()),
            EstimatorMode::Smoother => Value::String("smoother".into()),
            EstimatorMode::Luenberger(l) => tagged("luenberger", l),
        },
    );
    run.insert(
        "feedback".into(),
        Value::String(match s.feedback {
            Feedback::TrueState => "state".into(),
            Feedback::Estimate => "estimate".into(),
        }),
    );
    run.insert(
        "x0".into(),
        match &s.x0 {
            InitialState::Explicit(x) => vector_value(x),
            InitialState::Sampled => Value::String("sampled".into()),
        },
    );
    if let Some(e) = s.settling_epsilon {
        run.insert("epsilon".into(), Value::Float(e));
    }
    run.insert("tol".into(), Value::Float(s.solver.tol));
    run.insert("max_iter".into(), Value::Integer(s.solver.max_iter as i64));
    doc.insert("run".into(), Value::Table(run));
    toml::to_string(&doc).expect("scenario tables serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[system]
A = [[0.5, 0.0], [-1.0, 1.5]]
B = [[0.5], [0.1]]

[weights]
Q = [[1, 0], [0, 1]]
R = 1

[run]
N = 5
controller = \"lqr-schedule\"
x0 = [10, 5]
";

    #[test]
    fn parses_minimal_lqr_scenario() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(
            (s.system.n, s.system.m, s.system.p, s.system.horizon),
            (2, 1, 0, 5)
        );
        assert_eq!(s.controller, Controller::LqrSchedule);
        assert_eq!(s.feedback, Feedback::TrueState);
        assert_eq!(
            s.weights.unwrap().r,
            Schedule::Constant(Matrix::identity(1, 1))
        );
    }

    #[test]
    fn ragged_row_names_field_and_line() {
        let bad = MINIMAL.replace("[-1.0, 1.5]", "[-1.0, 1.5, 2.0]");
        let e = parse(&bad).unwrap_err();
        assert_eq!(e.field, "system.A");
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().contains("row 2 has 3 entries"), "{e}");
    }

    #[test]
    fn unknown_and_missing_keys_are_reported() {
        let e = parse(&MINIMAL.replace("R = 1", "RR = 1")).unwrap_err();
        assert_eq!(e.field, "weights.RR");
        let e = parse(&MINIMAL.replace("x0 = [10, 5]", "")).unwrap_err();
        assert_eq!(e.field, "run.x0");
        let e = parse(&MINIMAL.replace("controller = \"lqr-schedule\"", "controller = \"lqr\""))
            .unwrap_err();
        assert_eq!(e.field, "run.controller");
        assert_eq!(e.line, Some(12));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let e = parse("[system]\nA = [[1, 2]\n").unwrap_err();
        assert_eq!(e.field, "syntax");
        assert!(e.line.is_some());
    }

    #[test]
    fn truth_defaults_to_noise() {
        let text = format!(
            "{MINIMAL}
[noise]
Qd = [[1, 0], [0, 1]]
Rv = 1
P0 = [[1, 0], [0, 1]]
x0_mean = [10, 5]

[truth]
Rv = 0.0625
"
        );
        let s = parse(&text).unwrap();
        let (noise, truth) = (s.noise.unwrap(), s.truth.unwrap());
        assert_eq!(truth.qd, noise.qd);
        assert_eq!(
            truth.rv,
            Schedule::Constant(Matrix::from_element(1, 1, 0.0625))
        );
    }

    #[test]
    fn schedules_round_trip() {
        let text = "
[system]
A = { schedule = [[[1.0]], [[0.5]], [[0.25]]] }
B = { constant = [[1.0]] }
C = [[1.0]]

[noise]
Qd = 0.1
Rv = { schedule = [1, 2, 3, 4] }
P0 = 1
x0_mean = [0]

[run]
N = 3
seed = 9
estimator = { luenberger = [[0.3]] }
x0 = \"sampled\"
epsilon = 0.01
";
        let s = parse(text).unwrap();
        assert_eq!(s.feedback, Feedback::Estimate);
        assert_eq!(parse(&render(&s)).unwrap(), s);
    }
}
