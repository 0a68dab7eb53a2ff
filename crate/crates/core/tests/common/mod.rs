#![allow(dead_code)]

use std::cell::Cell;

use rand::Rng;
use rgrad_core::dense::Matrix;
use rgrad_core::measurement::{forward_intensity, GaussianEnsemble, SensingOperator};
use rgrad_core::{RankOneState, Result, Scalar};

pub fn random_vec<T: Scalar, R: Rng>(n: usize, rng: &mut R) -> Vec<T> {
    (0..n).map(|_| T::gaussian(rng)).collect()
}

pub fn random_unit<T: Scalar, R: Rng>(n: usize, rng: &mut R) -> Vec<T> {
    let mut u = random_vec(n, rng);
    rgrad_core::linalg::normalize(&mut u);
    u
}

pub fn random_hermitian<T: Scalar, R: Rng>(n: usize, rng: &mut R) -> Matrix<T> {
    let g = Matrix::from_fn(n, |_, _| T::gaussian(rng));
    g.hermitian_part()
}

/// A Gaussian instance `(A, x, y)` with `y = |Ax|²`.
pub struct Instance<T> {
    pub op: GaussianEnsemble<T>,
    pub x: Vec<T>,
    pub y: Vec<f64>,
}

pub fn gaussian_instance<T: Scalar, R: Rng>(n: usize, m: usize, rng: &mut R) -> Instance<T> {
    let x = random_vec(n, rng);
    let op = GaussianEnsemble::sample(n, m, rng).unwrap();
    let y = forward_intensity(&op, &x).unwrap();
    Instance { op, x, y }
}

/// Iterate near the truth: `x + noise_scale·‖x‖·w`, lifted.
pub fn perturbed_state<T: Scalar, R: Rng>(x: &[T], noise_scale: f64, rng: &mut R) -> RankOneState<T> {
    let xn = rgrad_core::linalg::norm(x);
    let w: Vec<T> = random_vec(x.len(), rng);
    let z: Vec<T> = x.iter().zip(&w).map(|(a, b)| *a + b.scale(noise_scale * xn / (x.len() as f64).sqrt())).collect();
    RankOneState::from_signal(&z).unwrap()
}

/// Counts every application of `A` or `Aᴴ`.
pub struct Counting<A> {
    pub inner: A,
    pub count: Cell<u64>,
}

impl<A> Counting<A> {
    pub fn new(inner: A) -> Self {
        Counting { inner, count: Cell::new(0) }
    }

    pub fn take(&self) -> u64 {
        self.count.replace(0)
    }
}

impl<T: Scalar, A: SensingOperator<T>> SensingOperator<T> for Counting<A> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn m(&self) -> usize {
        self.inner.m()
    }
    fn apply_into(&self, v: &[T], out: &mut [T]) -> Result<()> {
        self.count.set(self.count.get() + 1);
        self.inner.apply_into(v, out)
    }
    fn apply_adjoint_into(&self, r: &[T], out: &mut [T]) -> Result<()> {
        self.count.set(self.count.get() + 1);
        self.inner.apply_adjoint_into(r, out)
    }
}
