//! JSON summary of a single solve.

use rgrad_core::{Solution, Status, Stepsize};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: &'static str,
    pub iterations: usize,
    pub relative_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist_rel: Option<f64>,
    pub stepsize_rule: String,
    pub mask_fraction_final: f64,
}

pub fn status_name(status: Status) -> &'static str {
    match status {
        Status::Converged => "Converged",
        Status::MaxIters => "MaxIters",
        Status::Degenerate => "Degenerate",
    }
}

pub fn stepsize_rule(rule: Stepsize) -> String {
    match rule {
        Stepsize::SteepestDescent => "sd".to_string(),
        Stepsize::Constant(a) => format!("constant({a})"),
    }
}

impl SolveReport {
    pub fn new<T>(sol: &Solution<T>, rule: Stepsize, m: usize) -> Self {
        let last = sol.trace.records.last();
        SolveReport {
            status: status_name(sol.status),
            iterations: sol.iterations(),
            relative_residual: sol.final_residual(),
            dist_rel: last.and_then(|r| r.dist),
            stepsize_rule: stepsize_rule(rule),
            mask_fraction_final: last.map_or(1.0, |r| r.mask_count as f64 / m as f64),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}
