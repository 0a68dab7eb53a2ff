//! Parallel trial execution on a rayon pool.
//!
//! Each trial is a pure function of `(spec, job)` and the reduction sorts
//! outcomes first, so the worker count only affects wall time.

use rayon::prelude::*;
use rgrad_core::experiments::{aggregate, run_trial, trial_jobs, ExperimentResult, ExperimentSpec, TrialOutcome};

use crate::error::CliError;

/// Runs every trial of `spec` on `workers` threads (0: one per core).
pub fn run_parallel(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentResult, CliError> {
    let outcomes = run_trials(spec, workers)?;
    Ok(aggregate(spec, outcomes)?)
}

/// Raw per-trial outcomes, in job order.
pub fn run_trials(spec: &ExperimentSpec, workers: usize) -> Result<Vec<TrialOutcome>, CliError> {
    let jobs = trial_jobs(spec)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let outcomes = pool.install(|| jobs.par_iter().map(|&job| run_trial(spec, job)).collect::<Result<Vec<_>, _>>())?;
    Ok(outcomes)
}
