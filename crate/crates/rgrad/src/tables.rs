//! CSV emission and parsing for experiment results and solve traces.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every finite `f64` exactly; `inf` and `NaN` use Rust's spellings.

use std::io::{Read, Write};

use rgrad_core::experiments::{ExperimentKind, ExperimentResult, NoiseRow, PhaseTransitionRow, TraceRow};
use rgrad_core::solver::IterationRecord;

use crate::error::CliError;

pub const PHASE_TRANSITION_HEADER: [&str; 6] = ["ratio", "m", "algorithm", "trials", "successes", "probability"];
pub const TRACE_HEADER: [&str; 5] = ["iteration", "algorithm", "residual_min", "residual_mean", "residual_max"];
pub const NOISE_HEADER: [&str; 4] = ["snr_db", "algorithm", "mean_error_db", "trials"];
pub const SOLVE_TRACE_HEADER: [&str; 7] =
    ["iteration", "relative_residual", "dist_rel", "stepsize", "mask_count", "applications", "restarted"];

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> CliError {
    match e.kind() {
        csv::ErrorKind::Io(_) => CliError::Io(e.to_string()),
        _ => CliError::usage(format!("malformed CSV: {e}")),
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Header row plus one row per aggregate, in the result's order.
pub fn write_result<W: Write>(result: &ExperimentResult, w: W) -> Result<(), CliError> {
    let mut out = writer(w);
    match result {
        ExperimentResult::PhaseTransition(rows) => {
            out.write_record(PHASE_TRANSITION_HEADER).map_err(csv_err)?;
            for r in rows {
                out.write_record([
                    format_float(r.ratio),
                    r.m.to_string(),
                    r.algorithm.clone(),
                    r.trials.to_string(),
                    r.successes.to_string(),
                    format_float(r.probability),
                ])
                .map_err(csv_err)?;
            }
        }
        ExperimentResult::ConvergenceTrace(rows) => {
            out.write_record(TRACE_HEADER).map_err(csv_err)?;
            for r in rows {
                out.write_record([
                    r.iteration.to_string(),
                    r.algorithm.clone(),
                    format_float(r.residual_min),
                    format_float(r.residual_mean),
                    format_float(r.residual_max),
                ])
                .map_err(csv_err)?;
            }
        }
        ExperimentResult::NoiseStability(rows) => {
            out.write_record(NOISE_HEADER).map_err(csv_err)?;
            for r in rows {
                out.write_record([
                    format_float(r.snr_db),
                    r.algorithm.clone(),
                    format_float(r.mean_error_db),
                    r.trials.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn result_to_string(result: &ExperimentResult) -> String {
    let mut buf = Vec::new();
    write_result(result, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

struct Fields<'a> {
    record: &'a csv::StringRecord,
    line: u64,
}

impl Fields<'_> {
    fn get<T: std::str::FromStr>(&self, i: usize) -> Result<T, CliError> {
        let raw = self.record.get(i).unwrap_or("");
        raw.parse()
            .map_err(|_| CliError::usage(format!("CSV line {}: cannot parse `{raw}` in column {}", self.line, i + 1)))
    }

    fn text(&self, i: usize) -> String {
        self.record.get(i).unwrap_or("").to_string()
    }
}

/// Parses CSV produced by [`write_result`] back into aggregates.
pub fn read_result<R: Read>(kind: ExperimentKind, r: R) -> Result<ExperimentResult, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let expected: &[&str] = match kind {
        ExperimentKind::PhaseTransition => &PHASE_TRANSITION_HEADER,
        ExperimentKind::ConvergenceTrace => &TRACE_HEADER,
        ExperimentKind::NoiseStability => &NOISE_HEADER,
    };
    if header != expected {
        return Err(CliError::usage(format!("unexpected CSV header {header:?}, wanted {expected:?}")));
    }
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((rec, line));
    }
    let fields = records.iter().map(|(record, line)| Fields { record, line: *line });
    Ok(match kind {
        ExperimentKind::PhaseTransition => ExperimentResult::PhaseTransition(
            fields
                .map(|f| {
                    Ok(PhaseTransitionRow {
                        ratio: f.get(0)?,
                        m: f.get(1)?,
                        algorithm: f.text(2),
                        trials: f.get(3)?,
                        successes: f.get(4)?,
                        probability: f.get(5)?,
                    })
                })
                .collect::<Result<_, CliError>>()?,
        ),
        ExperimentKind::ConvergenceTrace => ExperimentResult::ConvergenceTrace(
            fields
                .map(|f| {
                    Ok(TraceRow {
                        iteration: f.get(0)?,
                        algorithm: f.text(1),
                        residual_min: f.get(2)?,
                        residual_mean: f.get(3)?,
                        residual_max: f.get(4)?,
                    })
                })
                .collect::<Result<_, CliError>>()?,
        ),
        ExperimentKind::NoiseStability => ExperimentResult::NoiseStability(
            fields
                .map(|f| {
                    Ok(NoiseRow { snr_db: f.get(0)?, algorithm: f.text(1), mean_error_db: f.get(2)?, trials: f.get(3)? })
                })
                .collect::<Result<_, CliError>>()?,
        ),
    })
}

/// Per-iteration solve trace; `dist_rel` is empty without a known truth.
pub fn write_solve_trace<W: Write>(records: &[IterationRecord], w: W) -> Result<(), CliError> {
    let mut out = writer(w);
    out.write_record(SOLVE_TRACE_HEADER).map_err(csv_err)?;
    for r in records {
        out.write_record([
            r.iter.to_string(),
            format_float(r.residual),
            format_opt(r.dist),
            format_opt(r.stepsize),
            r.mask_count.to_string(),
            r.applications.to_string(),
            r.restarted.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}
