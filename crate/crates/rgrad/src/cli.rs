//! The `rgrad` command line: `solve` prints a JSON summary of one seeded
//! instance, `experiment` runs a sweep and writes CSV.
//!
//! Every key of [`KEYS`](crate::config::KEYS) is a `--flag`, and `--help`
//! shows each one with its default:
//!
//! ```
//! use rgrad::config::{keys_for, Command};
//!
//! for cmd in [Command::Solve, Command::Experiment] {
//!     let help = rgrad::cli::help_text(cmd);
//!     for key in keys_for(cmd) {
//!         let default = rgrad::cli::display_default(key.default_for(cmd).unwrap());
//!         assert!(help.contains(&format!("--{} <VALUE>", key.name)));
//!         assert!(help.contains(&format!("[default: {default}]")));
//!     }
//! }
//! ```
//!
//! Exit codes: 0 on success (a solve that hits the iteration cap included),
//! 2 for usage errors, 3 for I/O errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};

use clap::{Arg, ArgMatches};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgrad_core::experiments::{sample_signal, AlgorithmSpec, ExperimentKind, ExperimentSpec, Model};
use rgrad_core::measurement::{add_noise, forward_intensity, CdpEnsemble, GaussianEnsemble, SensingOperator};
use rgrad_core::solver::IterationRecord;
use rgrad_core::{solve, Algorithm, Complex64, Scalar, SignalShape, SolverConfig, Stepsize, TruncationParams};

use crate::config::{keys_for, parse_grid, Command, RunConfig, Source};
use crate::error::CliError;
use crate::report::SolveReport;
use crate::runner::run_parallel;
use crate::tables;

pub fn display_default(raw: &str) -> &str {
    if raw.is_empty() {
        "none"
    } else {
        raw
    }
}

fn subcommand(cmd: Command) -> clap::Command {
    let about = match cmd {
        Command::Solve => "Solve one seeded instance and print a JSON summary",
        Command::Experiment => "Run a seeded Monte-Carlo sweep and write CSV",
    };
    let mut c = clap::Command::new(cmd.name()).about(about).arg(
        Arg::new("config")
            .long("config")
            .value_name("PATH")
            .help("flat `key = value` file; flags override it [default: none]"),
    );
    for key in keys_for(cmd) {
        let default = display_default(key.default_for(cmd).unwrap_or_default());
        c = c.arg(
            Arg::new(key.name)
                .long(key.name)
                .value_name("VALUE")
                .allow_negative_numbers(true)
                .help(format!("{} [default: {default}]", key.help)),
        );
    }
    c
}

pub fn command() -> clap::Command {
    clap::Command::new("rgrad")
        .about("Riemannian gradient solvers for phaseless equations |Ax|^2 = y")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(subcommand(Command::Solve))
        .subcommand(subcommand(Command::Experiment))
}

/// Rendered `--help` of a subcommand.
pub fn help_text(cmd: Command) -> String {
    subcommand(cmd).render_long_help().to_string()
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    let result = match matches.subcommand() {
        Some(("solve", sub)) => resolve(Command::Solve, sub).and_then(|cfg| cmd_solve(&cfg, stdout)),
        Some(("experiment", sub)) => resolve(Command::Experiment, sub).and_then(|cfg| cmd_experiment(&cfg, stdout)),
        _ => Err(CliError::usage("expected a subcommand: solve or experiment")),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Defaults, then the `--config` file, then explicit flags.
pub fn resolve(cmd: Command, matches: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::defaults(cmd);
    if let Some(path) = matches.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read config {path}"), e))?;
        cfg.apply_file_text(&text)?;
    }
    for key in keys_for(cmd) {
        if let Some(v) = matches.get_one::<String>(key.name) {
            cfg.set(key.name, v, Source::Flag)?;
        }
    }
    Ok(cfg)
}

fn parse_model(raw: &str) -> Result<Model, CliError> {
    match raw {
        "gaussian-real" => Ok(Model::GaussianReal),
        "gaussian-complex" => Ok(Model::GaussianComplex),
        "cdp-1d" => Ok(Model::Cdp1d),
        "cdp-2d" => Ok(Model::Cdp2d),
        _ => Err(CliError::usage(format!(
            "unknown model `{raw}`; expected gaussian-real, gaussian-complex, cdp-1d or cdp-2d"
        ))),
    }
}

fn parse_shape(raw: &str, model: Model) -> Result<SignalShape, CliError> {
    let dim = |s: &str| -> Result<usize, CliError> {
        let v: usize = s.trim().parse().map_err(|_| CliError::usage(format!("invalid value `{raw}` for --n")))?;
        if v == 0 {
            return Err(CliError::usage("n must be ≥ 1"));
        }
        Ok(v)
    };
    match (raw.split_once('x'), model) {
        (Some((r, c)), Model::Cdp2d) => Ok(SignalShape::TwoD(dim(r)?, dim(c)?)),
        (Some(_), _) => Err(CliError::usage("ROWSxCOLS shapes are only valid with --model cdp-2d")),
        (None, Model::Cdp2d) => Err(CliError::usage("cdp-2d needs --n ROWSxCOLS")),
        (None, _) => Ok(SignalShape::OneD(dim(raw)?)),
    }
}

fn parse_algorithm(raw: &str) -> Result<Algorithm, CliError> {
    match raw {
        "rgrad" => Ok(Algorithm::RGrad),
        "trgrad" => Ok(Algorithm::TRGrad),
        _ => Err(CliError::usage(format!("unknown algorithm `{raw}`; expected rgrad or trgrad"))),
    }
}

fn parse_stepsize(raw: &str, alpha: f64) -> Result<Stepsize, CliError> {
    match raw {
        "sd" => Ok(Stepsize::SteepestDescent),
        "constant" => Ok(Stepsize::Constant(alpha)),
        _ => Err(CliError::usage(format!("unknown stepsize rule `{raw}`; expected sd or constant"))),
    }
}

fn parse_experiment(raw: &str) -> Result<ExperimentKind, CliError> {
    match raw {
        "phase-transition" => Ok(ExperimentKind::PhaseTransition),
        "trace" => Ok(ExperimentKind::ConvergenceTrace),
        "noise" => Ok(ExperimentKind::NoiseStability),
        _ => Err(CliError::usage(format!("unknown experiment `{raw}`; expected phase-transition, trace or noise"))),
    }
}

/// Solver settings shared by both commands; algorithm and stepsize are set
/// by the caller.
fn solver_template(cfg: &RunConfig) -> Result<SolverConfig, CliError> {
    let solver = SolverConfig {
        max_iters: cfg.get("max-iters")?,
        tol_residual: cfg.get("tol")?,
        truncation: TruncationParams::new(cfg.get("tau-x")?, cfg.get("tau-z")?, cfg.get("tau-h")?)?,
        alpha_y: cfg.get("alpha-y")?,
        power_iters: cfg.get("power-iters")?,
        power_tol: cfg.get("power-tol")?,
        ..SolverConfig::default()
    };
    Ok(solver)
}

fn measurement_count(cfg: &RunConfig, model: Model, n: usize) -> Result<usize, CliError> {
    if model.is_cdp() {
        if cfg.source("m") != Source::Default {
            return Err(CliError::usage("--m does not apply to CDP models; use --masks"));
        }
        let masks: usize = cfg.get("masks")?;
        if masks == 0 {
            return Err(CliError::usage("masks must be ≥ 1"));
        }
        Ok(masks * n)
    } else {
        if cfg.source("masks") != Source::Default {
            return Err(CliError::usage("--masks applies to CDP models only; use --m"));
        }
        let m = match cfg.raw("m") {
            "auto" => 8 * n,
            _ => cfg.get("m")?,
        };
        if m == 0 {
            return Err(CliError::usage("m must be ≥ 1"));
        }
        Ok(m)
    }
}

struct SolveOutput {
    report: SolveReport,
    records: Vec<IterationRecord>,
}

fn solve_instance<T, A>(
    op: &A,
    x: &[T],
    rng: &mut ChaCha8Rng,
    solver: &SolverConfig,
    noise_sigma: f64,
    report_truth: bool,
) -> Result<SolveOutput, CliError>
where
    T: Scalar,
    A: SensingOperator<T>,
{
    let clean = forward_intensity(op, x)?;
    let y = if noise_sigma > 0.0 { add_noise(&clean, noise_sigma, rng)? } else { clean };
    let cfg = SolverConfig { init_seed: rng.next_u64(), ..solver.clone() };
    let sol = solve(op, &y, &cfg, report_truth.then_some(x))?;
    Ok(SolveOutput { report: SolveReport::new(&sol, cfg.stepsize, op.m()), records: sol.trace.records })
}

pub fn cmd_solve(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let model = parse_model(cfg.raw("model"))?;
    let shape = parse_shape(cfg.raw("n"), model)?;
    let n = shape.len();
    let m = measurement_count(cfg, model, n)?;
    let alpha: f64 = cfg.get("alpha")?;
    let solver = SolverConfig {
        algorithm: parse_algorithm(cfg.raw("algorithm"))?,
        stepsize: parse_stepsize(cfg.raw("stepsize"), alpha)?,
        ..solver_template(cfg)?
    };
    solver.validate()?;
    let seed: u64 = cfg.get("seed")?;
    let truth_seed: Option<u64> = cfg.optional("truth-seed")?;
    let noise_sigma: f64 = cfg.get("noise-sigma")?;
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(CliError::usage(format!("noise-sigma must be finite and ≥ 0, got {noise_sigma}")));
    }
    let trace_out: Option<String> = cfg.optional("trace-out")?;

    // The signal comes from its own stream when --truth-seed is given, so the
    // same signal can be paired with different ensembles.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth_rng = truth_seed.map(ChaCha8Rng::seed_from_u64);
    let report_truth = truth_seed.is_some();
    let out = match model {
        Model::GaussianReal => {
            let x: Vec<f64> = sample_signal(n, truth_rng.as_mut().unwrap_or(&mut rng));
            let op = GaussianEnsemble::<f64>::sample(n, m, &mut rng)?;
            solve_instance(&op, &x, &mut rng, &solver, noise_sigma, report_truth)?
        }
        Model::GaussianComplex => {
            let x: Vec<Complex64> = sample_signal(n, truth_rng.as_mut().unwrap_or(&mut rng));
            let op = GaussianEnsemble::<Complex64>::sample(n, m, &mut rng)?;
            solve_instance(&op, &x, &mut rng, &solver, noise_sigma, report_truth)?
        }
        Model::Cdp1d | Model::Cdp2d => {
            let x: Vec<Complex64> = sample_signal(n, truth_rng.as_mut().unwrap_or(&mut rng));
            let op = CdpEnsemble::sample(shape, m / n, &mut rng)?;
            solve_instance(&op, &x, &mut rng, &solver, noise_sigma, report_truth)?
        }
    };

    if let Some(path) = trace_out {
        let file = File::create(&path).map_err(|e| CliError::io(format!("cannot write {path}"), e))?;
        tables::write_solve_trace(&out.records, BufWriter::new(file))?;
    }
    writeln!(stdout, "{}", out.report.to_json()).map_err(|e| CliError::io("stdout", e))
}

fn default_grid(kind: ExperimentKind) -> Vec<f64> {
    match kind {
        ExperimentKind::PhaseTransition => (1..=10).map(f64::from).collect(),
        ExperimentKind::NoiseStability => (0..9).map(|k| 20.0 + 5.0 * k as f64).collect(),
        ExperimentKind::ConvergenceTrace => Vec::new(),
    }
}

/// Builds the experiment described by `cfg`; algorithms are the product of
/// the `algorithm` and `stepsize` lists.
pub fn experiment_spec(cfg: &RunConfig) -> Result<ExperimentSpec, CliError> {
    let experiment = parse_experiment(cfg.raw("experiment"))?;
    let model = parse_model(cfg.raw("model"))?;
    let shape = parse_shape(cfg.raw("n"), model)?;
    let alpha: f64 = cfg.get("alpha")?;
    let mut algorithms = Vec::new();
    for a in cfg.list("algorithm") {
        for s in cfg.list("stepsize") {
            let spec = AlgorithmSpec::new(parse_algorithm(&a)?, parse_stepsize(&s, alpha)?);
            if !algorithms.contains(&spec) {
                algorithms.push(spec);
            }
        }
    }
    let grid = match (cfg.raw("grid"), experiment) {
        ("auto", kind) => default_grid(kind),
        (_, ExperimentKind::ConvergenceTrace) => {
            return Err(CliError::usage("--grid does not apply to trace experiments; use --oversampling"))
        }
        (raw, _) => parse_grid(raw)?,
    };
    let spec = ExperimentSpec {
        experiment,
        model,
        shape,
        grid,
        oversampling: cfg.get("oversampling")?,
        trials: cfg.get("trials")?,
        algorithms,
        base_seed: cfg.get("seed")?,
        solver: solver_template(cfg)?,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_experiment(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = experiment_spec(cfg)?;
    let workers: usize = cfg.get("workers")?;
    let out = cfg.raw("out").to_string();
    // Open the destination before the sweep so a bad path fails fast.
    let file = if out == "-" {
        None
    } else {
        Some(File::create(&out).map_err(|e| CliError::io(format!("cannot write {out}"), e))?)
    };
    let result = run_parallel(&spec, workers)?;
    match file {
        Some(f) => tables::write_result(&result, BufWriter::new(f)),
        None => tables::write_result(&result, stdout),
    }
}
