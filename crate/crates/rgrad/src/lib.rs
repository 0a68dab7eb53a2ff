//! Command-line front end, file formats and a parallel experiment runner for
//! [`rgrad_core`].
//!
//! ```no_run
//! use rgrad::runner::run_parallel;
//! use rgrad_core::experiments::{AlgorithmSpec, ExperimentKind, ExperimentSpec, Model};
//! use rgrad_core::{Algorithm, SignalShape, SolverConfig, Stepsize};
//!
//! let spec = ExperimentSpec {
//!     experiment: ExperimentKind::PhaseTransition,
//!     model: Model::GaussianReal,
//!     shape: SignalShape::OneD(64),
//!     grid: vec![2.0, 4.0, 6.0],
//!     oversampling: 8.0,
//!     trials: 20,
//!     algorithms: vec![AlgorithmSpec::new(Algorithm::TRGrad, Stepsize::SteepestDescent)],
//!     base_seed: 1,
//!     solver: SolverConfig { max_iters: 2500, ..Default::default() },
//! };
//! let result = run_parallel(&spec, 0).unwrap();
//! print!("{}", rgrad::tables::result_to_string(&result));
//! ```

pub mod cli;
pub mod config;
mod error;
pub mod report;
pub mod runner;
pub mod tables;

pub use error::CliError;
