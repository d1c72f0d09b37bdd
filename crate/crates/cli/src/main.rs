use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lqg_cli::commands::{self, CliError, CliResult, Figure, Output, Overrides};
use lqg_core::harness::{EstimatorMode, SweepAxis};

/// Discrete-time LQR synthesis, Kalman estimation and LQG simulation.
///
/// CSV goes to stdout (summary to stderr) unless --output names a directory,
/// in which case files are written there and the summary goes to stdout.
/// Exit status: 0 on success, 2 for invalid input, 1 for runtime failures.
#[derive(Parser)]
#[command(name = "lqg", version)]
struct Cli {
    /// Seed for the noise stream (overrides the scenario file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV files.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Convergence tolerance of the algebraic Riccati iterations.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Iteration cap of the algebraic Riccati iterations.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-horizon gains and Riccati matrices, or the steady-state gain.
    Lqr {
        scenario: PathBuf,
        /// Solve the algebraic Riccati equation instead of the backward recursion.
        #[arg(long)]
        steady: bool,
    },
    /// Run a Kalman estimator along a simulated trajectory.
    Estimate {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Simulate the scenario as written.
    Simulate { scenario: PathBuf },
    /// Independent runs over one parameter.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated list, or a half-open integer range `a..b`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Regenerate the series behind a figure from the bundled scenarios.
    Reproduce {
        #[arg(value_enum)]
        figure: FigureId,
    },
    /// Check dimensions and definiteness without running anything.
    Validate { scenario: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Predict,
    Filter,
    Smooth,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    #[value(name = "N")]
    Horizon,
    Seed,
    #[value(name = "R-scale")]
    RScale,
    #[value(name = "Q-scale")]
    QScale,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureId {
    Fig1,
    Fig4,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn execute(cli: &Cli) -> CliResult<Output> {
    let overrides = Overrides {
        seed: cli.seed,
        tol: cli.tol,
        max_iter: cli.max_iter,
    };
    let load = |path: &Path| commands::load(&read(path)?, &overrides);
    match &cli.command {
        Command::Lqr { scenario, steady } => commands::lqr(&load(scenario)?, *steady),
        Command::Estimate { scenario, mode } => {
            let mode = match mode {
                Mode::Predict => EstimatorMode::Predictor,
                Mode::Filter => EstimatorMode::Filter,
                Mode::Smooth => EstimatorMode::Smoother,
            };
            commands::estimate(&load(scenario)?, mode)
        }
        Command::Simulate { scenario } => commands::simulate(&load(scenario)?),
        Command::Sweep {
            scenario,
            axis,
            values,
        } => {
            let axis = match axis {
                Axis::Horizon => SweepAxis::Horizon,
                Axis::Seed => SweepAxis::Seed,
                Axis::RScale => SweepAxis::RScale,
                Axis::QScale => SweepAxis::QScale,
            };
            commands::sweep(&load(scenario)?, axis, &commands::parse_values(values)?)
        }
        Command::Reproduce { figure } => {
            let figure = match figure {
                FigureId::Fig1 => Figure::Fig1,
                FigureId::Fig4 => Figure::Fig4,
            };
            commands::reproduce(figure, &overrides)
        }
        Command::Validate { scenario } => commands::validate(&load(scenario)?),
    }
}

fn emit(output: &Output, dir: Option<&Path>) -> CliResult<()> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io(dir))?;
            let mut stdout = std::io::stdout().lock();
            for (name, table) in &output.files {
                let path = dir.join(name);
                fs::write(&path, table.to_csv()).map_err(io(&path))?;
                writeln!(stdout, "wrote {}", path.display()).map_err(io(Path::new("stdout")))?;
            }
            for line in &output.summary {
                writeln!(stdout, "{line}").map_err(io(Path::new("stdout")))?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let several = output.files.len() > 1;
            for (i, (name, table)) in output.files.iter().enumerate() {
                if several {
                    // Blank line and a `# name` marker between concatenated tables.
                    let sep = if i > 0 { "\n" } else { "" };
                    writeln!(stdout, "{sep}# {name}").map_err(io(Path::new("stdout")))?;
                }
                stdout
                    .write_all(&table.to_csv())
                    .map_err(io(Path::new("stdout")))?;
            }
            for line in &output.summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli).and_then(|out| emit(&out, cli.output.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
