mod common;

use std::f64::consts::PI;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rgrad_core::linalg::{dot, norm};
use rgrad_core::measurement::{forward_intensity, CdpEnsemble, GaussianEnsemble, SensingOperator, SignalShape};
use rgrad_core::Scalar;

/// `|⟨Av, r⟩ − ⟨v, Aᴴr⟩| / (‖v‖‖r‖·scale)` over 200 random pairs.
fn worst_adjoint_gap<T: Scalar, A: SensingOperator<T>>(op: &A, row_norm: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..200)
        .map(|_| {
            let v: Vec<T> = random_vec(op.n(), &mut rng);
            let r: Vec<T> = random_vec(op.m(), &mut rng);
            let lhs = dot(&op.apply(&v).unwrap(), &r);
            let rhs = dot(&v, &op.apply_adjoint(&r).unwrap());
            (lhs - rhs).abs() / (norm(&v) * norm(&r) * row_norm)
        })
        .fold(0.0, f64::max)
}

#[test]
fn adjoint_consistency_all_ensembles() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let real = GaussianEnsemble::<f64>::sample(16, 48, &mut rng).unwrap();
    let cplx = GaussianEnsemble::<Complex64>::sample(16, 48, &mut rng).unwrap();
    let cdp1 = CdpEnsemble::sample(SignalShape::OneD(20), 3, &mut rng).unwrap();
    let cdp2 = CdpEnsemble::sample(SignalShape::TwoD(4, 6), 2, &mut rng).unwrap();
    let scale = 16f64.sqrt();
    assert!(worst_adjoint_gap(&real, scale, 2) <= 1e-10);
    assert!(worst_adjoint_gap(&cplx, scale, 3) <= 1e-10);
    assert!(worst_adjoint_gap(&cdp1, 20f64.sqrt(), 4) <= 1e-10);
    assert!(worst_adjoint_gap(&cdp2, 24f64.sqrt(), 5) <= 1e-10);
}

/// Row `(ℓ, k)` of the CDP matrix is `a_{ℓk}ᴴ = (exp(−2πi jk/n)·d_ℓ[j])_j`,
/// built here straight from the definition.
fn explicit_cdp_1d(e: &CdpEnsemble, n: usize) -> Vec<Vec<Complex64>> {
    let mut rows = Vec::new();
    for l in 0..e.num_masks() {
        for k in 0..n {
            rows.push(
                (0..n)
                    .map(|j| Complex64::from_polar(1.0, -2.0 * PI * ((j * k) % n) as f64 / n as f64) * e.mask(l)[j])
                    .collect(),
            );
        }
    }
    rows
}

fn explicit_cdp_2d(e: &CdpEnsemble, r: usize, c: usize) -> Vec<Vec<Complex64>> {
    let mut rows = Vec::new();
    for l in 0..e.num_masks() {
        for k1 in 0..r {
            for k2 in 0..c {
                rows.push(
                    (0..r * c)
                        .map(|j| {
                            let (j1, j2) = (j / c, j % c);
                            let phase = (j1 * k1) as f64 / r as f64 + (j2 * k2) as f64 / c as f64;
                            Complex64::from_polar(1.0, -2.0 * PI * phase) * e.mask(l)[j]
                        })
                        .collect(),
                );
            }
        }
    }
    rows
}

fn check_against_dense(e: &CdpEnsemble, rows: &[Vec<Complex64>], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let v: Vec<Complex64> = random_vec(e.n(), &mut rng);
        let r: Vec<Complex64> = random_vec(e.m(), &mut rng);
        let av = e.apply(&v).unwrap();
        let dense_av: Vec<Complex64> = rows.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        let mut ahr = vec![Complex64::new(0.0, 0.0); e.n()];
        for (row, rk) in rows.iter().zip(&r) {
            for (o, a) in ahr.iter_mut().zip(row) {
                *o += a.conj() * rk;
            }
        }
        let got_ahr = e.apply_adjoint(&r).unwrap();
        let d1: Vec<Complex64> = av.iter().zip(&dense_av).map(|(a, b)| a - b).collect();
        let d2: Vec<Complex64> = got_ahr.iter().zip(&ahr).map(|(a, b)| a - b).collect();
        assert!(norm(&d1) <= 1e-10 * norm(&dense_av));
        assert!(norm(&d2) <= 1e-10 * norm(&ahr));
    }
}

#[test]
fn cdp_matches_explicit_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 1..=8 {
        let e = CdpEnsemble::sample(SignalShape::OneD(n), 3, &mut rng).unwrap();
        check_against_dense(&e, &explicit_cdp_1d(&e, n), n as u64);
    }
    for (r, c) in [(2, 2), (2, 3), (2, 4)] {
        let e = CdpEnsemble::sample(SignalShape::TwoD(r, c), 2, &mut rng).unwrap();
        check_against_dense(&e, &explicit_cdp_2d(&e, r, c), (r * c) as u64);
    }
}

proptest! {
    #[test]
    fn intensity_scales_with_modulus_squared(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = CdpEnsemble::sample(SignalShape::OneD(6), 2, &mut rng).unwrap();
        let g = GaussianEnsemble::<Complex64>::sample(6, 10, &mut rng).unwrap();
        let x: Vec<Complex64> = random_vec(6, &mut rng);
        let c = Complex64::new(re, im);
        let cx: Vec<Complex64> = x.iter().map(|v| c * v).collect();
        for (base, scaled) in [
            (forward_intensity(&e, &x).unwrap(), forward_intensity(&e, &cx).unwrap()),
            (forward_intensity(&g, &x).unwrap(), forward_intensity(&g, &cx).unwrap()),
        ] {
            for (b, s) in base.iter().zip(&scaled) {
                prop_assert!((s - c.norm_sqr() * b).abs() <= 1e-10 * (1.0 + s.abs()));
            }
        }
    }

    #[test]
    fn noise_norm_is_exact(seed in any::<u64>(), sigma in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..30).map(|k| 1.0 + k as f64).collect();
        let noisy = rgrad_core::measurement::add_noise(&y, sigma, &mut rng).unwrap();
        let diff: Vec<f64> = noisy.iter().zip(&y).map(|(a, b)| a - b).collect();
        let rel = rgrad_core::linalg::norm_f64(&diff) / rgrad_core::linalg::norm_f64(&y);
        prop_assert!((rel - sigma).abs() <= 1e-12);
    }
}
