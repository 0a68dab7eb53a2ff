//! Seeded Monte-Carlo trials: phase transitions, convergence traces and noise
//! stability sweeps.
//!
//! A trial is identified by `(grid point, trial index)` and draws everything
//! (signal, ensemble, noise, power-iteration start) from a ChaCha stream keyed
//! on `(base_seed, point, trial)`. Trials are therefore independent of
//! execution order, and [`aggregate`] sorts outcomes before reducing them, so
//! any scheduler that runs [`run_trial`] over [`trial_jobs`] produces the same
//! bits as [`run_sequential`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{FieldKind, Scalar};
use crate::linalg;
use crate::manifold::dist_phase;
use crate::math;
use crate::measurement::{add_noise, forward_intensity, CdpEnsemble, GaussianEnsemble, SensingOperator, SignalShape};
use crate::solver::{solve, Algorithm, SolverConfig, Status, Stepsize};

/// Relative distance counted as a successful recovery.
pub const SUCCESS_TOL: f64 = 1e-3;

/// Floor applied before taking decibels of an exact recovery.
const ERROR_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    PhaseTransition,
    ConvergenceTrace,
    NoiseStability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    GaussianReal,
    GaussianComplex,
    Cdp1d,
    Cdp2d,
}

impl Model {
    pub fn field(self) -> FieldKind {
        match self {
            Model::GaussianReal => FieldKind::Real,
            _ => FieldKind::Complex,
        }
    }

    pub fn is_cdp(self) -> bool {
        matches!(self, Model::Cdp1d | Model::Cdp2d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    pub stepsize: Stepsize,
}

impl AlgorithmSpec {
    pub fn new(algorithm: Algorithm, stepsize: Stepsize) -> Self {
        AlgorithmSpec { algorithm, stepsize }
    }

    /// `trgrad-sd`, `rgrad-c0.2`, ...
    pub fn label(&self) -> String {
        let algo = match self.algorithm {
            Algorithm::RGrad => "rgrad",
            Algorithm::TRGrad => "trgrad",
        };
        match self.stepsize {
            Stepsize::SteepestDescent => format!("{algo}-sd"),
            Stepsize::Constant(a) => format!("{algo}-c{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub model: Model,
    pub shape: SignalShape,
    /// Phase transition: `m/n` ratios (Gaussian) or mask counts `L` (CDP).
    /// Noise stability: SNRs in dB, `+∞` for noiseless. Unused by traces.
    pub grid: Vec<f64>,
    /// `m/n` (or `L`) for the convergence-trace and noise experiments.
    pub oversampling: f64,
    pub trials: usize,
    pub algorithms: Vec<AlgorithmSpec>,
    pub base_seed: u64,
    /// Template for every solve; algorithm, stepsize and init seed are
    /// overridden per trial.
    pub solver: SolverConfig,
}

/// One point of the sweep, resolved to a concrete measurement count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    /// The grid value as given (ratio, `L`, or SNR in dB).
    pub value: f64,
    pub m: usize,
    /// Relative noise level `σ = 10^(−SNR/20)`.
    pub noise_sigma: f64,
}

impl ExperimentSpec {
    pub fn n(&self) -> usize {
        self.shape.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape.is_empty() {
            return Err(Error::invalid("n must be ≥ 1"));
        }
        match (self.model, self.shape) {
            (Model::Cdp2d, SignalShape::TwoD(..)) => {}
            (Model::Cdp2d, _) => return Err(Error::invalid("cdp-2d needs a 2D signal shape")),
            (_, SignalShape::TwoD(..)) => return Err(Error::invalid("only cdp-2d takes a 2D signal shape")),
            _ => {}
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be ≥ 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("at least one algorithm is required"));
        }
        // stream ids pack (point, trial) into 32 bits each
        if self.trials > u32::MAX as usize || self.grid.len() > u32::MAX as usize {
            return Err(Error::invalid("grid or trial count too large for per-trial seeding"));
        }
        self.solver.validate()?;
        match self.experiment {
            ExperimentKind::PhaseTransition => {
                if self.grid.is_empty() {
                    return Err(Error::invalid("grid must be nonempty"));
                }
                for &g in &self.grid {
                    self.measurement_count(g)?;
                }
            }
            ExperimentKind::NoiseStability => {
                if self.grid.is_empty() {
                    return Err(Error::invalid("grid must be nonempty"));
                }
                if self.grid.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
                    return Err(Error::invalid("SNR values must be numbers or +inf"));
                }
                self.measurement_count(self.oversampling)?;
            }
            ExperimentKind::ConvergenceTrace => {
                self.measurement_count(self.oversampling)?;
            }
        }
        Ok(())
    }

    fn measurement_count(&self, ratio: f64) -> Result<usize> {
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::invalid(format!("oversampling must be finite and > 0, got {ratio}")));
        }
        let n = self.n();
        if self.model.is_cdp() {
            if ratio.fract() != 0.0 {
                return Err(Error::invalid(format!("mask count L must be an integer, got {ratio}")));
            }
            Ok(ratio as usize * n)
        } else {
            let m = libm::round(ratio * n as f64) as usize;
            Ok(m.max(1))
        }
    }

    /// Grid points in output order; phase-transition and noise grids are
    /// sorted ascending with duplicates removed.
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        self.validate()?;
        let mut grid = self.grid.clone();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        Ok(match self.experiment {
            ExperimentKind::PhaseTransition => grid
                .iter()
                .enumerate()
                .map(|(index, &value)| GridPoint { index, value, m: self.measurement_count(value).unwrap_or(0), noise_sigma: 0.0 })
                .collect(),
            ExperimentKind::ConvergenceTrace => vec![GridPoint {
                index: 0,
                value: self.oversampling,
                m: self.measurement_count(self.oversampling)?,
                noise_sigma: 0.0,
            }],
            ExperimentKind::NoiseStability => {
                let m = self.measurement_count(self.oversampling)?;
                grid.iter()
                    .enumerate()
                    .map(|(index, &snr)| GridPoint { index, value: snr, m, noise_sigma: noise_sigma_for_snr(snr) })
                    .collect()
            }
        })
    }
}

/// `σ = 10^(−SNR_dB/20)`, so the SNR is `‖y‖²/‖e‖²` in dB.
pub fn noise_sigma_for_snr(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        math::powf(10.0, -snr_db / 20.0)
    }
}

/// Generator for trial `(point, trial)`: ChaCha keyed by the base seed, with
/// the pair packed into the 64-bit stream id.
pub fn trial_rng(base_seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrialJob {
    pub point: usize,
    pub trial: usize,
}

pub fn trial_jobs(spec: &ExperimentSpec) -> Result<Vec<TrialJob>> {
    let points = spec.points()?;
    Ok(points
        .iter()
        .flat_map(|p| (0..spec.trials).map(move |trial| TrialJob { point: p.index, trial }))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmOutcome {
    /// `None` when the solver returned an error for this instance.
    pub status: Option<Status>,
    pub dist_rel: f64,
    pub final_residual: f64,
    pub iterations: usize,
    /// Per-iteration relative residuals (convergence traces only).
    pub residuals: Vec<f64>,
}

impl AlgorithmOutcome {
    pub fn success(&self) -> bool {
        self.dist_rel <= SUCCESS_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub job: TrialJob,
    /// One entry per algorithm, ordered as `spec.algorithms`; all run on the same instance.
    pub algorithms: Vec<AlgorithmOutcome>,
}

/// Test signal: `N(0, I)` for real fields, `N(0, I) + i·N(0, I)` for complex.
pub fn sample_signal<T: Scalar, R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Vec<T> {
    let k = match T::KIND {
        FieldKind::Real => 1.0,
        FieldKind::Complex => core::f64::consts::SQRT_2,
    };
    (0..n).map(|_| T::gaussian(rng).scale(k)).collect()
}

fn run_instance<T, A>(spec: &ExperimentSpec, point: &GridPoint, job: TrialJob, rng: &mut ChaCha8Rng, op: &A, x: &[T]) -> TrialOutcome
where
    T: Scalar,
    A: SensingOperator<T>,
{
    let clean = forward_intensity(op, x).expect("signal length matches ensemble");
    let y = if point.noise_sigma > 0.0 {
        add_noise(&clean, point.noise_sigma, rng).expect("noise level validated")
    } else {
        clean
    };
    let init_seed = rng.next_u64();
    let x_norm = linalg::norm(x);
    let keep_trace = spec.experiment == ExperimentKind::ConvergenceTrace;
    let algorithms = spec
        .algorithms
        .iter()
        .map(|a| {
            let cfg = SolverConfig {
                algorithm: a.algorithm,
                stepsize: a.stepsize,
                init_seed,
                tol_dist: match spec.experiment {
                    ExperimentKind::PhaseTransition => Some(SUCCESS_TOL),
                    _ => spec.solver.tol_dist,
                },
                ..spec.solver.clone()
            };
            match solve(op, &y, &cfg, Some(x)) {
                Ok(sol) => AlgorithmOutcome {
                    status: Some(sol.status),
                    dist_rel: dist_phase(&sol.estimate, x).map_or(f64::INFINITY, |d| d / x_norm),
                    final_residual: sol.final_residual(),
                    iterations: sol.iterations(),
                    residuals: if keep_trace { sol.trace.records.iter().map(|r| r.residual).collect() } else { Vec::new() },
                },
                Err(_) => AlgorithmOutcome {
                    status: None,
                    dist_rel: f64::INFINITY,
                    final_residual: f64::NAN,
                    iterations: 0,
                    residuals: Vec::new(),
                },
            }
        })
        .collect();
    TrialOutcome { job, algorithms }
}

/// Runs one trial. Pure in `(spec, job)`.
pub fn run_trial(spec: &ExperimentSpec, job: TrialJob) -> Result<TrialOutcome> {
    let points = spec.points()?;
    let point = points
        .get(job.point)
        .ok_or_else(|| Error::invalid(format!("grid point {} out of range", job.point)))?;
    if job.trial >= spec.trials {
        return Err(Error::invalid(format!("trial {} out of range", job.trial)));
    }
    let mut rng = trial_rng(spec.base_seed, job.point, job.trial);
    let n = spec.n();
    Ok(match spec.model {
        Model::GaussianReal => {
            let x = sample_signal::<f64, _>(n, &mut rng);
            let op = GaussianEnsemble::<f64>::sample(n, point.m, &mut rng)?;
            run_instance(spec, point, job, &mut rng, &op, &x)
        }
        Model::GaussianComplex => {
            let x = sample_signal::<Complex64, _>(n, &mut rng);
            let op = GaussianEnsemble::<Complex64>::sample(n, point.m, &mut rng)?;
            run_instance(spec, point, job, &mut rng, &op, &x)
        }
        Model::Cdp1d | Model::Cdp2d => {
            let x = sample_signal::<Complex64, _>(n, &mut rng);
            let op = CdpEnsemble::sample(spec.shape, point.m / n, &mut rng)?;
            run_instance(spec, point, job, &mut rng, &op, &x)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTransitionRow {
    pub ratio: f64,
    pub m: usize,
    pub algorithm: String,
    pub trials: usize,
    pub successes: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub algorithm: String,
    pub residual_min: f64,
    pub residual_mean: f64,
    pub residual_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRow {
    pub snr_db: f64,
    pub algorithm: String,
    pub mean_error_db: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentResult {
    PhaseTransition(Vec<PhaseTransitionRow>),
    ConvergenceTrace(Vec<TraceRow>),
    NoiseStability(Vec<NoiseRow>),
}

/// Reduces trial outcomes (in any order) to per-point aggregates.
pub fn aggregate(spec: &ExperimentSpec, mut outcomes: Vec<TrialOutcome>) -> Result<ExperimentResult> {
    let points = spec.points()?;
    outcomes.sort_by_key(|o| o.job);
    let expected = trial_jobs(spec)?;
    if outcomes.len() != expected.len() || outcomes.iter().zip(&expected).any(|(o, j)| o.job != *j) {
        return Err(Error::invalid("trial outcomes do not cover the experiment grid exactly once"));
    }
    if outcomes.iter().any(|o| o.algorithms.len() != spec.algorithms.len()) {
        return Err(Error::invalid("trial outcome has the wrong number of algorithms"));
    }
    let labels: Vec<String> = spec.algorithms.iter().map(AlgorithmSpec::label).collect();
    let per_point = |p: usize| outcomes.iter().filter(move |o| o.job.point == p);

    Ok(match spec.experiment {
        ExperimentKind::PhaseTransition => {
            let mut rows = Vec::new();
            for p in &points {
                for (a, label) in labels.iter().enumerate() {
                    let successes = per_point(p.index).filter(|o| o.algorithms[a].success()).count();
                    rows.push(PhaseTransitionRow {
                        ratio: p.value,
                        m: p.m,
                        algorithm: label.clone(),
                        trials: spec.trials,
                        successes,
                        probability: successes as f64 / spec.trials as f64,
                    });
                }
            }
            ExperimentResult::PhaseTransition(rows)
        }
        ExperimentKind::ConvergenceTrace => {
            let len = spec.solver.max_iters + 1;
            let mut rows = Vec::new();
            for (a, label) in labels.iter().enumerate() {
                for it in 0..len {
                    let mut min = f64::INFINITY;
                    let mut max = f64::NEG_INFINITY;
                    let mut sum = 0.0;
                    for o in &outcomes {
                        let r = &o.algorithms[a].residuals;
                        // trials that stopped early hold their final residual
                        let v = r.get(it).or(r.last()).copied().unwrap_or(f64::NAN);
                        min = min.min(v);
                        max = max.max(v);
                        sum += v;
                    }
                    let mean = (sum / outcomes.len() as f64).clamp(min, max);
                    rows.push(TraceRow { iteration: it, algorithm: label.clone(), residual_min: min, residual_mean: mean, residual_max: max });
                }
            }
            ExperimentResult::ConvergenceTrace(rows)
        }
        ExperimentKind::NoiseStability => {
            let mut rows = Vec::new();
            for p in &points {
                for (a, label) in labels.iter().enumerate() {
                    let db: f64 = per_point(p.index)
                        .map(|o| 20.0 * math::log10(o.algorithms[a].dist_rel.max(ERROR_FLOOR)))
                        .sum();
                    rows.push(NoiseRow { snr_db: p.value, algorithm: label.clone(), mean_error_db: db / spec.trials as f64, trials: spec.trials });
                }
            }
            ExperimentResult::NoiseStability(rows)
        }
    })
}

/// Runs every trial in order on the current thread.
pub fn run_sequential(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let outcomes = trial_jobs(spec)?
        .into_iter()
        .map(|job| run_trial(spec, job))
        .collect::<Result<Vec<_>>>()?;
    aggregate(spec, outcomes)
}

pub fn run_phase_transition(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::PhaseTransition)?;
    run_sequential(spec)
}

pub fn run_convergence_trace(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::ConvergenceTrace)?;
    run_sequential(spec)
}

pub fn run_noise_stability(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::NoiseStability)?;
    run_sequential(spec)
}

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.experiment == kind {
        Ok(())
    } else {
        Err(Error::invalid(format!("expected a {kind:?} spec, got {:?}", spec.experiment)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn spec(kind: ExperimentKind) -> ExperimentSpec {
        ExperimentSpec {
            experiment: kind,
            model: Model::GaussianReal,
            shape: SignalShape::OneD(8),
            grid: vec![3.0, 1.0, 2.0],
            oversampling: 6.0,
            trials: 3,
            algorithms: vec![AlgorithmSpec::new(Algorithm::TRGrad, Stepsize::SteepestDescent)],
            base_seed: 17,
            solver: SolverConfig { max_iters: 50, ..Default::default() },
        }
    }

    #[test]
    fn labels() {
        assert_eq!(AlgorithmSpec::new(Algorithm::TRGrad, Stepsize::SteepestDescent).label(), "trgrad-sd");
        assert_eq!(AlgorithmSpec::new(Algorithm::RGrad, Stepsize::Constant(0.2)).label(), "rgrad-c0.2");
    }

    #[test]
    fn grid_is_sorted_and_resolved() {
        let pts = spec(ExperimentKind::PhaseTransition).points().unwrap();
        assert_eq!(pts.iter().map(|p| p.value).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
        assert_eq!(pts.iter().map(|p| p.m).collect::<Vec<_>>(), vec![8, 16, 24]);
    }

    #[test]
    fn cdp_grid_requires_integer_mask_counts() {
        let mut s = spec(ExperimentKind::PhaseTransition);
        s.model = Model::Cdp1d;
        s.grid = vec![2.5];
        assert!(s.validate().is_err());
        s.grid = vec![2.0];
        assert_eq!(s.points().unwrap()[0].m, 16);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = spec(ExperimentKind::PhaseTransition);
        s.trials = 0;
        assert!(s.validate().is_err());
        let mut s = spec(ExperimentKind::PhaseTransition);
        s.grid.clear();
        assert!(s.validate().is_err());
        let mut s = spec(ExperimentKind::NoiseStability);
        s.grid = vec![f64::NAN];
        assert!(s.validate().is_err());
        let mut s = spec(ExperimentKind::PhaseTransition);
        s.shape = SignalShape::TwoD(2, 2);
        assert!(s.validate().is_err());
    }

    #[test]
    fn snr_to_sigma() {
        assert_eq!(noise_sigma_for_snr(f64::INFINITY), 0.0);
        assert!((noise_sigma_for_snr(40.0) - 0.01).abs() < 1e-17);
    }

    #[test]
    fn trial_streams_are_distinct() {
        let mut firsts = BTreeSet::new();
        for point in 0..10 {
            for trial in 0..50 {
                assert!(firsts.insert(trial_rng(99, point, trial).next_u64()));
            }
        }
        assert_eq!(trial_rng(1, 2, 3).next_u64(), trial_rng(1, 2, 3).next_u64());
    }

    #[test]
    fn aggregation_ignores_trial_order() {
        let s = spec(ExperimentKind::PhaseTransition);
        let mut outcomes: Vec<_> = trial_jobs(&s).unwrap().into_iter().map(|j| run_trial(&s, j).unwrap()).collect();
        let a = aggregate(&s, outcomes.clone()).unwrap();
        outcomes.reverse();
        assert_eq!(aggregate(&s, outcomes.clone()).unwrap(), a);
        outcomes.pop();
        assert!(aggregate(&s, outcomes).is_err());
    }

    #[test]
    fn phase_transition_endpoints_small() {
        let mut s = spec(ExperimentKind::PhaseTransition);
        s.grid = vec![1.0, 12.0];
        s.solver.max_iters = 500;
        let ExperimentResult::PhaseTransition(rows) = run_phase_transition(&s).unwrap() else { panic!() };
        assert_eq!(rows[0].successes, 0);
        assert_eq!(rows[1].probability, 1.0);
        assert_eq!(run_phase_transition(&s).unwrap(), ExperimentResult::PhaseTransition(rows));
    }

    #[test]
    fn trace_envelope_is_ordered() {
        let s = spec(ExperimentKind::ConvergenceTrace);
        let ExperimentResult::ConvergenceTrace(rows) = run_convergence_trace(&s).unwrap() else { panic!() };
        assert_eq!(rows.len(), s.solver.max_iters + 1);
        for r in rows {
            assert!(r.residual_min <= r.residual_mean && r.residual_mean <= r.residual_max);
        }
    }

    #[test]
    fn noise_rows_match_grid() {
        let mut s = spec(ExperimentKind::NoiseStability);
        s.grid = vec![20.0, f64::INFINITY, 40.0];
        s.oversampling = 8.0;
        let ExperimentResult::NoiseStability(rows) = run_noise_stability(&s).unwrap() else { panic!() };
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].snr_db, f64::INFINITY);
        assert!(rows[2].mean_error_db <= -60.0, "{rows:?}");
        assert!(rows[0].mean_error_db > rows[1].mean_error_db);
        assert!(run_phase_transition(&s).is_err());
    }
}
