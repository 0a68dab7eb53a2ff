//! RGrad and TRGrad over the rank-1 PSD manifold.
//!
//! With `f(Z) = (1/2m)‖𝒜(Z) − y‖²`, each iteration forms the negative Euclidean
//! gradient `G = (1/m)·𝒜ᴴ(y − 𝒜(Z))` (masked by the truncation rules for
//! TRGrad), projects it onto the tangent space at `Z = σuuᴴ` and retracts
//! `Z + αP_T(G)` back to the manifold. Only `g = G u` is ever needed:
//!
//! ```text
//! g = (1/m)·Aᴴ( mask ⊙ (Au) ⊙ (y − σ|Au|²) )
//! ```
//!
//! so an iteration costs one `A` and one `Aᴴ` application, plus one more `A`
//! application for the exact line search.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::Scalar;
use crate::linalg;
use crate::manifold::{self, dist_phase, RankOneState, TangentCoeffs};
use crate::math;
use crate::measurement::SensingOperator;

/// Truncation thresholds `(τ_x, τ_z, τ_h)`. An infinite threshold never binds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationParams {
    tau_x: f64,
    tau_z: f64,
    tau_h: f64,
}

impl Default for TruncationParams {
    fn default() -> Self {
        TruncationParams { tau_x: 5.0, tau_z: 5.0, tau_h: 5.0 }
    }
}

impl TruncationParams {
    pub fn new(tau_x: f64, tau_z: f64, tau_h: f64) -> Result<Self> {
        for (name, tau) in [("tau_x", tau_x), ("tau_z", tau_z), ("tau_h", tau_h)] {
            if !(tau > 0.0) {
                return Err(Error::invalid(format!("{name} must be > 0, got {tau}")));
            }
        }
        Ok(TruncationParams { tau_x, tau_z, tau_h })
    }

    /// All thresholds infinite: every measurement is accepted.
    pub fn disabled() -> Self {
        TruncationParams { tau_x: f64::INFINITY, tau_z: f64::INFINITY, tau_h: f64::INFINITY }
    }

    pub fn tau_x(&self) -> f64 {
        self.tau_x
    }

    pub fn tau_z(&self) -> f64 {
        self.tau_z
    }

    pub fn tau_h(&self) -> f64 {
        self.tau_h
    }

    /// `τ_{h,z} = τ_z + (0.3·τ_h·(τ_z + 1.2·τ_x) + τ_z²)^{1/2}`
    pub fn tau_hz(&self) -> f64 {
        self.tau_z + math::sqrt(0.3 * self.tau_h * (self.tau_z + 1.2 * self.tau_x) + self.tau_z * self.tau_z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepsize {
    Constant(f64),
    /// Exact line search along the projected gradient.
    SteepestDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    RGrad,
    TRGrad,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub stepsize: Stepsize,
    pub max_iters: usize,
    /// Stop once `‖|Ax̂|² − y‖/‖y‖ ≤ tol_residual`.
    pub tol_residual: f64,
    /// Stop once `dist(x̂, x)/‖x‖ ≤ tol_dist`; only consulted when the truth is known.
    pub tol_dist: Option<f64>,
    /// Used by TRGrad only.
    pub truncation: TruncationParams,
    /// Spectral initialization keeps `y_k ≤ alpha_y²·mean(y)`.
    pub alpha_y: f64,
    pub power_iters: usize,
    pub power_tol: f64,
    /// Seeds the power-iteration start vector.
    pub init_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::TRGrad,
            stepsize: Stepsize::SteepestDescent,
            max_iters: 1000,
            tol_residual: 1e-6,
            tol_dist: None,
            truncation: TruncationParams::default(),
            alpha_y: 3.0,
            power_iters: 100,
            power_tol: 1e-8,
            init_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be ≥ 1"));
        }
        if !(self.tol_residual > 0.0) {
            return Err(Error::invalid("tol_residual must be > 0"));
        }
        if let Stepsize::Constant(alpha) = self.stepsize {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::invalid(format!("constant stepsize must be finite and > 0, got {alpha}")));
            }
        }
        if !(self.alpha_y > 0.0) {
            return Err(Error::invalid("alpha_y must be > 0"));
        }
        if self.power_iters == 0 {
            return Err(Error::invalid("power_iters must be ≥ 1"));
        }
        if !(self.power_tol >= 0.0) {
            return Err(Error::invalid("power_tol must be ≥ 0"));
        }
        // re-validates the thresholds in case fields were built by hand
        TruncationParams::new(self.truncation.tau_x, self.truncation.tau_z, self.truncation.tau_h)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `‖σ|Au|² − y‖/‖y‖` of the iterate entering this iteration.
    pub residual: f64,
    /// `dist(x̂, x)/‖x‖` when the truth is known.
    pub dist: Option<f64>,
    /// Stepsize used to leave this iterate; `None` on the final record.
    pub stepsize: Option<f64>,
    /// Measurements accepted by the truncation rules (`m` for RGrad).
    pub mask_count: usize,
    /// Cumulative applications of `A` or `Aᴴ`, initialization included.
    pub applications: u64,
    /// The retraction collapsed to `σ = 0` and the iterate was reset to the
    /// spectral initializer.
    pub restarted: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub init_power_iters: usize,
    /// Power iteration hit its cap before meeting `power_tol`.
    pub init_stagnated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    MaxIters,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub state: RankOneState<T>,
    pub estimate: Vec<T>,
    pub trace: IterationTrace,
    pub status: Status,
}

impl<T> Solution<T> {
    pub fn final_residual(&self) -> f64 {
        self.trace.records.last().map_or(f64::NAN, |r| r.residual)
    }

    pub fn iterations(&self) -> usize {
        self.trace.records.last().map_or(0, |r| r.iter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInit<T> {
    pub state: RankOneState<T>,
    pub iterations: usize,
    pub converged: bool,
    pub applications: u64,
}

/// Truncated spectral initialization.
///
/// With `λ² = mean(y)`, finds the leading eigenvector `ũ` of
/// `Y = (1/m)·Σ_k y_k a_k a_kᴴ·𝟙{y_k ≤ alpha_y²λ²}` by power iteration and
/// returns `(σ, u) = (λ², ũ)`.
pub fn spectral_init<T, A, R>(
    op: &A,
    y: &[f64],
    alpha_y: f64,
    power_iters: usize,
    power_tol: f64,
    rng: &mut R,
) -> Result<SpectralInit<T>>
where
    T: Scalar,
    A: SensingOperator<T> + ?Sized,
    R: Rng + ?Sized,
{
    let (n, m) = (op.n(), op.m());
    Error::check_len(m, y.len())?;
    if !(alpha_y > 0.0) {
        return Err(Error::invalid("alpha_y must be > 0"));
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid("measurements are all zero"));
    }
    let lambda_sq = y.iter().sum::<f64>() / m as f64;
    if !(lambda_sq > 0.0) {
        return Err(Error::invalid("mean measurement must be positive"));
    }
    let cutoff = alpha_y * alpha_y * lambda_sq;
    let weights: Vec<f64> = y.iter().map(|&v| if v <= cutoff { v / m as f64 } else { 0.0 }).collect();

    let mut u: Vec<T> = (0..n).map(|_| T::gaussian(rng)).collect();
    if linalg::normalize(&mut u) == 0.0 {
        return Err(Error::invalid("degenerate power-iteration start vector"));
    }
    let mut au = vec![T::zero(); m];
    let mut next = vec![T::zero(); n];
    let mut applications = 0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < power_iters {
        op.apply_into(&u, &mut au)?;
        for (a, w) in au.iter_mut().zip(&weights) {
            *a = a.scale(*w);
        }
        op.apply_adjoint_into(&au, &mut next)?;
        applications += 2;
        iterations += 1;
        if linalg::normalize(&mut next) == 0.0 {
            return Err(Error::invalid("truncated spectral matrix annihilates the iterate"));
        }
        let change = dist_phase(&next, &u)?;
        core::mem::swap(&mut u, &mut next);
        if change < power_tol {
            converged = true;
            break;
        }
    }
    Ok(SpectralInit { state: RankOneState { sigma: lambda_sq, u }, iterations, converged, applications })
}

/// `√max(y, 0)`; noisy intensities may be negative.
#[inline]
fn sqrt_pos(y: f64) -> f64 {
    math::sqrt(y.max(0.0))
}

/// Evaluates the three truncation events from a cached `Au`; returns the
/// number of accepted measurements.
fn mask_from_action<T: Scalar>(
    y: &[f64],
    au: &[T],
    sigma: f64,
    params: &TruncationParams,
    mask: &mut [bool],
) -> usize {
    let m = y.len();
    let z_norm = math::sqrt(sigma);
    let y_l1: f64 = y.iter().map(|v| v.abs()).sum();
    let x_bound = params.tau_x * math::sqrt(y_l1 / m as f64);
    let z_bound = params.tau_z * z_norm;
    let resid_l1: f64 = y.iter().zip(au).map(|(yk, a)| (yk - sigma * a.abs_sq()).abs()).sum();
    let h_scale = params.tau_h / m as f64 * resid_l1 / z_norm;
    let mut count = 0;
    for ((keep, yk), a) in mask.iter_mut().zip(y).zip(au) {
        let sy = sqrt_pos(*yk);
        let az = z_norm * a.abs();
        let e1x = params.tau_x == f64::INFINITY || sy <= x_bound;
        let e1z = params.tau_z == f64::INFINITY || az <= z_bound;
        let e2z = params.tau_h == f64::INFINITY || (yk - sigma * a.abs_sq()).abs() <= h_scale * (az + sy);
        *keep = e1x && e1z && e2z;
        count += usize::from(*keep);
    }
    count
}

/// TRGrad's per-measurement acceptance mask at `z = √σ·u`.
pub fn truncation_mask<T, A>(op: &A, y: &[f64], state: &RankOneState<T>, params: &TruncationParams) -> Result<Vec<bool>>
where
    T: Scalar,
    A: SensingOperator<T> + ?Sized,
{
    Error::check_len(op.m(), y.len())?;
    if !(state.sigma > 0.0) {
        return Err(Error::invalid("truncation rules need σ > 0"));
    }
    let au = op.apply(&state.u)?;
    let mut mask = vec![false; y.len()];
    mask_from_action(y, &au, state.sigma, params, &mut mask);
    Ok(mask)
}

fn gradient_from_action<T, A>(
    op: &A,
    y: &[f64],
    au: &[T],
    sigma: f64,
    mask: Option<&[bool]>,
) -> Result<Vec<T>>
where
    T: Scalar,
    A: SensingOperator<T> + ?Sized,
{
    let m = y.len();
    let mut r: Vec<T> = au.iter().zip(y).map(|(a, yk)| a.scale(yk - sigma * a.abs_sq())).collect();
    if let Some(mask) = mask {
        Error::check_len(m, mask.len())?;
        for (rk, keep) in r.iter_mut().zip(mask) {
            if !keep {
                *rk = T::zero();
            }
        }
    }
    let mut g = op.apply_adjoint(&r)?;
    linalg::scale_in_place(&mut g, 1.0 / m as f64);
    Ok(g)
}

/// `g = G u = (1/m)·Aᴴ(mask ⊙ (Au) ⊙ (y − σ|Au|²))`
pub fn gradient_action<T, A>(op: &A, y: &[f64], state: &RankOneState<T>, mask: Option<&[bool]>) -> Result<Vec<T>>
where
    T: Scalar,
    A: SensingOperator<T> + ?Sized,
{
    Error::check_len(op.m(), y.len())?;
    let au = op.apply(&state.u)?;
    gradient_from_action(op, y, &au, state.sigma, mask)
}

fn steepest_from_action<T, A>(op: &A, au: &[T], t: &TangentCoeffs<T>, mask: Option<&[bool]>) -> Result<(f64, u64)>
where
    T: Scalar,
    A: SensingOperator<T> + ?Sized,
{
    if t.is_zero() {
        return Err(Error::invalid("zero search direction has no line search"));
    }
    let m = au.len();
    // 𝒜(D)_k = c|(Au)_k|² + 2s·Re((Av)_k·conj((Au)_k))
    let (av, apps) = if t.s != 0.0 { (Some(op.apply(&t.v)?), 1) } else { (None, 0) };
    let mut acc = 0.0;
    for k in 0..m {
        if let Some(mask) = mask {
            if !mask[k] {
                continue;
            }
        }
        let mut entry = t.c * au[k].abs_sq();
        if let Some(av) = &av {
            entry += 2.0 * t.s * (av[k] * au[k].conj()).re();
        }
        acc += entry * entry;
    }
    let denom = acc / m as f64;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::DegenerateStepsize);
    }
    Ok((t.norm_sq() / denom, apps))
}

/// Exact line search `‖D‖_F² / ((1/m)·‖𝒜_mask(D)‖²)` for `D = P_T(G)`.
///
/// The `1/m` in the denominator matches the `1/m` in `G`, so the resulting
/// update equals the unnormalized exact line search step.
pub fn steepest_stepsize<T, A>(op: &A, state: &RankOneState<T>, t: &TangentCoeffs<T>, mask: Option<&[bool]>) -> Result<f64>
where
    T: Scalar,
    A: SensingOperator<T> + ?Sized,
{
    Error::check_len(state.n(), t.v.len())?;
    if let Some(mask) = mask {
        Error::check_len(op.m(), mask.len())?;
    }
    let au = op.apply(&state.u)?;
    steepest_from_action(op, &au, t, mask).map(|(alpha, _)| alpha)
}

fn relative_residual<T: Scalar>(y: &[f64], au: &[T], sigma: f64, y_norm: f64) -> f64 {
    let sq: f64 = y
        .iter()
        .zip(au)
        .map(|(yk, a)| {
            let d = sigma * a.abs_sq() - yk;
            d * d
        })
        .sum();
    math::sqrt(sq) / y_norm
}

/// Everything one iteration produces besides the next iterate.
struct Advance<T> {
    state: RankOneState<T>,
    stepsize: Option<f64>,
    applications: u64,
    stationary: bool,
}

fn advance<T, A>(
    op: &A,
    y: &[f64],
    state: &RankOneState<T>,
    au: &[T],
    mask: Option<&[bool]>,
    stepsize: Stepsize,
) -> Result<Advance<T>>
where
    T: Scalar,
    A: SensingOperator<T> + ?Sized,
{
    let g = gradient_from_action(op, y, au, state.sigma, mask)?;
    let mut applications = 1;
    let t = manifold::tangent_from_action(&g, &state.u)?;
    if t.is_zero() {
        return Ok(Advance { state: state.clone(), stepsize: None, applications, stationary: true });
    }
    let alpha = match stepsize {
        Stepsize::Constant(alpha) => alpha,
        Stepsize::SteepestDescent => {
            let (alpha, apps) = steepest_from_action(op, au, &t, mask)?;
            applications += apps;
            alpha
        }
    };
    Ok(Advance { state: manifold::retract(state, &t, alpha), stepsize: Some(alpha), applications, stationary: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub state: RankOneState<T>,
    pub record: IterationRecord,
    /// The projected gradient vanished and the state was returned unchanged.
    pub stationary: bool,
}

/// One RGrad/TRGrad iteration from `state`.
pub fn step<T, A>(op: &A, y: &[f64], state: &RankOneState<T>, cfg: &SolverConfig) -> Result<StepOutcome<T>>
where
    T: Scalar,
    A: SensingOperator<T> + ?Sized,
{
    Error::check_len(op.m(), y.len())?;
    Error::check_len(op.n(), state.n())?;
    let au = op.apply(&state.u)?;
    let mask = build_mask(cfg, y, &au, state.sigma)?;
    let mask_count = mask.as_ref().map_or(y.len(), |(_, c)| *c);
    let adv = advance(op, y, state, &au, mask.as_ref().map(|(m, _)| m.as_slice()), cfg.stepsize)?;
    let record = IterationRecord {
        iter: 0,
        residual: relative_residual(y, &au, state.sigma, linalg::norm_f64(y)),
        dist: None,
        stepsize: adv.stepsize,
        mask_count,
        applications: 1 + adv.applications,
        restarted: false,
    };
    Ok(StepOutcome { state: adv.state, record, stationary: adv.stationary })
}

fn build_mask<T: Scalar>(cfg: &SolverConfig, y: &[f64], au: &[T], sigma: f64) -> Result<Option<(Vec<bool>, usize)>> {
    match cfg.algorithm {
        Algorithm::RGrad => Ok(None),
        Algorithm::TRGrad => {
            if !(sigma > 0.0) {
                return Err(Error::invalid("truncation rules need σ > 0"));
            }
            let mut mask = vec![false; y.len()];
            let count = mask_from_action(y, au, sigma, &cfg.truncation, &mut mask);
            Ok(Some((mask, count)))
        }
    }
}

/// Spectral initialization followed by RGrad/TRGrad iterations.
///
/// Non-convergence is reported through [`Status`], never as an error.
pub fn solve<T, A>(op: &A, y: &[f64], cfg: &SolverConfig, truth: Option<&[T]>) -> Result<Solution<T>>
where
    T: Scalar,
    A: SensingOperator<T> + ?Sized,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
    let init = spectral_init(op, y, cfg.alpha_y, cfg.power_iters, cfg.power_tol, &mut rng)?;
    let trace = IterationTrace {
        records: Vec::new(),
        init_power_iters: init.iterations,
        init_stagnated: !init.converged,
    };
    iterate(op, y, cfg, init.state, truth, trace, init.applications)
}

/// Like [`solve`] but starting from a given iterate, which also serves as the
/// restart point after a collapse to `σ = 0`.
pub fn solve_from<T, A>(
    op: &A,
    y: &[f64],
    cfg: &SolverConfig,
    init: RankOneState<T>,
    truth: Option<&[T]>,
) -> Result<Solution<T>>
where
    T: Scalar,
    A: SensingOperator<T> + ?Sized,
{
    cfg.validate()?;
    RankOneState::new(init.sigma, init.u.clone())?;
    iterate(op, y, cfg, init, truth, IterationTrace::default(), 0)
}

fn iterate<T, A>(
    op: &A,
    y: &[f64],
    cfg: &SolverConfig,
    init: RankOneState<T>,
    truth: Option<&[T]>,
    mut trace: IterationTrace,
    mut applications: u64,
) -> Result<Solution<T>>
where
    T: Scalar,
    A: SensingOperator<T> + ?Sized,
{
    let (n, m) = (op.n(), op.m());
    Error::check_len(m, y.len())?;
    Error::check_len(n, init.n())?;
    if let Some(x) = truth {
        Error::check_len(n, x.len())?;
    }
    let y_norm = linalg::norm_f64(y);
    if y_norm == 0.0 {
        return Err(Error::invalid("measurements are all zero"));
    }
    let truth_norm = truth.map(linalg::norm);

    let mut state = init.clone();
    let mut au = vec![T::zero(); m];
    let mut status = Status::MaxIters;
    for iter in 0..=cfg.max_iters {
        op.apply_into(&state.u, &mut au)?;
        applications += 1;
        let residual = relative_residual(y, &au, state.sigma, y_norm);
        let dist = match (truth, truth_norm) {
            (Some(x), Some(xn)) => Some(dist_phase(&state.estimate(), x)? / xn),
            _ => None,
        };
        let mask = build_mask(cfg, y, &au, state.sigma)?;
        let mut record = IterationRecord {
            iter,
            residual,
            dist,
            stepsize: None,
            mask_count: mask.as_ref().map_or(m, |(_, c)| *c),
            applications,
            restarted: false,
        };
        let reached_dist = matches!((dist, cfg.tol_dist), (Some(d), Some(tol)) if d <= tol);
        if residual <= cfg.tol_residual || reached_dist {
            trace.records.push(record);
            status = Status::Converged;
            break;
        }
        if iter == cfg.max_iters {
            trace.records.push(record);
            break;
        }
        let adv = match advance(op, y, &state, &au, mask.as_ref().map(|(k, _)| k.as_slice()), cfg.stepsize) {
            Ok(adv) => adv,
            Err(Error::DegenerateStepsize) => {
                // the gradient was still computed
                record.applications += 1;
                trace.records.push(record);
                status = Status::Degenerate;
                break;
            }
            Err(e) => return Err(e),
        };
        applications += adv.applications;
        record.applications = applications;
        record.stepsize = adv.stepsize;
        if adv.stationary {
            trace.records.push(record);
            status = Status::Converged;
            break;
        }
        state = adv.state;
        if state.sigma == 0.0 {
            state = init.clone();
            record.restarted = true;
        }
        trace.records.push(record);
    }
    let estimate = state.estimate();
    Ok(Solution { state, estimate, trace, status })
}
