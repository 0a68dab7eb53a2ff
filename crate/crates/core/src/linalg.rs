//! Small vector kernels shared by the solver and the oracle.

use crate::field::Scalar;
use crate::math;

/// `⟨x, y⟩ = Σ conj(x_i) y_i`, conjugate-linear in the first slot.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = T::zero();
    for (a, b) in x.iter().zip(y) {
        acc += a.conj() * *b;
    }
    acc
}

pub fn norm_sq<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.abs_sq()).sum()
}

pub fn norm<T: Scalar>(x: &[T]) -> f64 {
    math::sqrt(norm_sq(x))
}

pub fn norm_f64(x: &[f64]) -> f64 {
    math::sqrt(x.iter().map(|v| v * v).sum())
}

/// `y += a·x`
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}

pub fn scale_in_place<T: Scalar>(x: &mut [T], k: f64) {
    for v in x.iter_mut() {
        *v = v.scale(k);
    }
}

/// Normalizes `x` in place and returns its former norm; zero vectors are left alone.
pub fn normalize<T: Scalar>(x: &mut [T]) -> f64 {
    let nrm = norm(x);
    if nrm > 0.0 {
        scale_in_place(x, 1.0 / nrm);
    }
    nrm
}
