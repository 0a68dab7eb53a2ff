#![no_std]

//! Riemannian gradient descent for systems of phaseless equations `|Ax|² = y`.
//!
//! The unknown is lifted to the rank-1 PSD matrix `X = x xᴴ` and recovered by
//! descending over the embedded manifold of rank-1 positive semidefinite
//! matrices. Iterates are never materialized: `Z = σ u uᴴ` is stored as
//! `(σ, u)` and each iteration costs a handful of applications of `A` and `Aᴴ`
//! plus `O(n)` work.
//!
//! * [`measurement`]: dense Gaussian and coded-diffraction sensing operators.
//! * [`manifold`]: tangent projection, 2×2 retraction, phase-invariant distance.
//! * [`solver`]: RGrad / TRGrad with truncated spectral initialization.
//! * [`oracle`]: dense `n × n` reference implementations for small problems.
//! * [`experiments`]: seeded Monte-Carlo trials and their aggregation.
//!
//! The crate is `no_std` and only needs `alloc`.

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dense;
mod error;
pub mod experiments;
pub mod fft;
pub mod field;
pub mod linalg;
pub mod manifold;
pub mod math;
pub mod measurement;
pub mod oracle;
pub mod solver;

pub use error::{Error, Result};
pub use field::{FieldKind, Scalar};
pub use manifold::{dist_phase, RankOneState, TangentCoeffs};
pub use measurement::{CdpEnsemble, GaussianEnsemble, SensingOperator, SignalShape};
pub use num_complex::Complex64;
pub use solver::{
    solve, solve_from, Algorithm, IterationRecord, IterationTrace, Solution, SolverConfig,
    Status, Stepsize, TruncationParams,
};
