//! The compressed `(σ, u)` iteration against the dense `n × n` reference.

mod common;

use common::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgrad_core::dense::Matrix;
use rgrad_core::measurement::GaussianEnsemble;
use rgrad_core::oracle::DenseLiftedOperator;
use rgrad_core::solver::{step, truncation_mask};
use rgrad_core::{Algorithm, RankOneState, Scalar, SolverConfig, Stepsize, TruncationParams};

fn dense_reference<T: Scalar>(
    op: &DenseLiftedOperator<T>,
    y: &[f64],
    state: &RankOneState<T>,
    cfg: &SolverConfig,
) -> Matrix<T> {
    let z = state.lifted();
    let mask = match cfg.algorithm {
        Algorithm::RGrad => None,
        Algorithm::TRGrad => Some(op.truncation_mask(y, &state.estimate(), &cfg.truncation).unwrap()),
    };
    let alpha = match cfg.stepsize {
        Stepsize::Constant(a) => a,
        Stepsize::SteepestDescent => op.steepest_stepsize(y, &z, mask.as_deref()).unwrap(),
    };
    op.dense_step(y, &z, alpha, mask.as_deref()).unwrap()
}

fn compare_one<T: Scalar>(seed: u64, cfg: &SolverConfig) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=6);
    let m = rng.random_range(2 * n..=36);
    let inst = gaussian_instance::<T, _>(n, m, &mut rng);
    let state = perturbed_state(&inst.x, 0.3, &mut rng);
    let dense = DenseLiftedOperator::from_ensemble(&inst.op).unwrap();
    let want = dense_reference(&dense, &inst.y, &state, cfg);
    let got = step(&inst.op, &inst.y, &state, cfg).unwrap().state.lifted();
    got.sub(&want).frobenius()
}

fn configs() -> Vec<SolverConfig> {
    let mut out = Vec::new();
    for algorithm in [Algorithm::RGrad, Algorithm::TRGrad] {
        for stepsize in [Stepsize::Constant(0.2), Stepsize::SteepestDescent] {
            out.push(SolverConfig { algorithm, stepsize, truncation: TruncationParams::new(2.0, 2.0, 2.0).unwrap(), ..Default::default() });
        }
    }
    out
}

#[test]
fn compressed_step_matches_dense_step() {
    let mut worst: f64 = 0.0;
    for (i, cfg) in configs().iter().enumerate() {
        for seed in 0..25u64 {
            worst = worst.max(compare_one::<f64>(1000 * i as u64 + seed, cfg));
            worst = worst.max(compare_one::<Complex64>(1000 * i as u64 + seed, cfg));
        }
    }
    assert!(worst <= 1e-10, "worst Frobenius gap {worst:e}");
}

#[test]
fn oracle_step_n3_m12() {
    let cfg = SolverConfig { algorithm: Algorithm::RGrad, stepsize: Stepsize::Constant(0.2), ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inst = gaussian_instance::<f64, _>(3, 12, &mut rng);
    let state = perturbed_state(&inst.x, 0.5, &mut rng);
    let dense = DenseLiftedOperator::from_ensemble(&inst.op).unwrap();
    let want = dense_reference(&dense, &inst.y, &state, &cfg);
    let got = step(&inst.op, &inst.y, &state, &cfg).unwrap().state.lifted();
    assert!(got.sub(&want).frobenius() <= 1e-10);
}

#[test]
fn oracle_step_hand_instance_n2_m4() {
    let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, -2.0]];
    let op = GaussianEnsemble::from_rows(&rows).unwrap();
    let x = [1.0, 0.5];
    let y = rgrad_core::measurement::forward_intensity(&op, &x).unwrap();
    let state = RankOneState::from_signal(&[0.8, 0.9]).unwrap();
    let cfg = SolverConfig { algorithm: Algorithm::RGrad, stepsize: Stepsize::Constant(0.2), ..Default::default() };
    let dense = DenseLiftedOperator::new(rows).unwrap();
    let want = dense.dense_step(&y, &state.lifted(), 0.2, None).unwrap();
    let got = step(&op, &y, &state, &cfg).unwrap().state.lifted();
    assert!(got.sub(&want).frobenius() <= 1e-10);
}

#[test]
fn dense_step_fixed_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let inst = gaussian_instance::<Complex64, _>(3, 12, &mut rng);
    let dense = DenseLiftedOperator::from_ensemble(&inst.op).unwrap();
    let x_lift = Matrix::outer(&inst.x, &inst.x);
    let next = dense.dense_step(&inst.y, &x_lift, 0.5, None).unwrap();
    assert!(next.sub(&x_lift).frobenius() <= 1e-10 * x_lift.frobenius());
    let z = perturbed_state(&inst.x, 0.4, &mut rng).lifted();
    let same = dense.dense_step(&inst.y, &z, 0.0, None).unwrap();
    assert!(same.sub(&z).frobenius() <= 1e-12 * z.frobenius());
}

#[test]
fn lifted_forward_of_outer_product_is_intensity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inst = gaussian_instance::<Complex64, _>(4, 10, &mut rng);
    let dense = DenseLiftedOperator::from_ensemble(&inst.op).unwrap();
    let fwd = dense.lifted_forward(&Matrix::outer(&inst.x, &inst.x)).unwrap();
    for (a, b) in fwd.iter().zip(&inst.y) {
        assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }
}

#[test]
fn lifted_adjoint_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let inst = gaussian_instance::<Complex64, _>(5, 20, &mut rng);
        let dense = DenseLiftedOperator::from_ensemble(&inst.op).unwrap();
        let z = random_hermitian::<Complex64, _>(5, &mut rng);
        let b: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = dense.lifted_forward(&z).unwrap().iter().zip(&b).map(|(p, q)| p * q).sum();
        let rhs = z.inner(&dense.lifted_adjoint(&b).unwrap());
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        assert!(dense.lifted_adjoint(&b).unwrap().is_hermitian(1e-12));
    }
}

#[test]
fn truncation_mask_matches_literal_events() {
    // n = 2, m = 3 by hand; thresholds chosen so every event binds somewhere.
    let rows = vec![vec![1.0, 0.0], vec![0.5, 2.0], vec![-1.0, 1.0]];
    let op = GaussianEnsemble::from_rows(&rows).unwrap();
    let y = [9.0, 0.25, 1.0];
    let z = [0.9, 0.2];
    let state = RankOneState::from_signal(&z).unwrap();
    let dense = DenseLiftedOperator::new(rows.clone()).unwrap();
    for &(tx, tz, th) in &[(1.0, 1.0, 1.0), (2.0, 0.5, 3.0), (0.9, 5.0, 0.2), (10.0, 10.0, 10.0)] {
        let p = TruncationParams::new(tx, tz, th).unwrap();
        let got = truncation_mask(&op, &y, &state, &p).unwrap();
        // scalar-by-scalar, straight from the event definitions
        let m = 3.0;
        let zn = (z[0] * z[0] + z[1] * z[1] as f64).sqrt();
        let y1: f64 = y.iter().sum();
        let az: Vec<f64> = rows.iter().map(|a| (a[0] * z[0] + a[1] * z[1]).abs()).collect();
        let res1: f64 = (0..3).map(|k| (y[k] - az[k] * az[k]).abs()).sum();
        let want: Vec<bool> = (0..3)
            .map(|k| {
                y[k].sqrt() <= tx * (y1 / m).sqrt()
                    && az[k] <= tz * zn
                    && (y[k] - az[k] * az[k]).abs() <= th / m * res1 * (az[k] + y[k].sqrt()) / zn
            })
            .collect();
        assert_eq!(got, want, "{tx} {tz} {th}");
        assert_eq!(dense.truncation_mask(&y, &z, &p).unwrap(), want);
    }
}

#[test]
fn exact_iterate_keeps_residual_event() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let inst = gaussian_instance::<f64, _>(4, 40, &mut rng);
    let state = RankOneState::from_signal(&inst.x).unwrap();
    let p = TruncationParams::default();
    let got = truncation_mask(&inst.op, &inst.y, &state, &p).unwrap();
    // With z = x the residual event holds everywhere; only the magnitude events remain.
    let big = TruncationParams::new(p.tau_x(), p.tau_z(), f64::INFINITY).unwrap();
    assert_eq!(got, truncation_mask(&inst.op, &inst.y, &state, &big).unwrap());
}
