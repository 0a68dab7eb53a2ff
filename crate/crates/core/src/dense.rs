//! Square dense matrices for small reference computations.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::field::Scalar;
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::from_re(1.0) } else { T::zero() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    /// `x yᴴ`
    pub fn outer(x: &[T], y: &[T]) -> Self {
        assert_eq!(x.len(), y.len());
        Self::from_fn(x.len(), |i, j| x[i] * y[j].conj())
    }

    /// `σ u uᴴ`
    pub fn rank_one(sigma: f64, u: &[T]) -> Self {
        Self::outer(u, u).scaled(sigma)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn scaled(&self, k: f64) -> Self {
        Matrix { n: self.n, data: self.data.iter().map(|v| v.scale(k)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Matrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        Self::from_fn(n, |i, j| {
            let mut acc = T::zero();
            for k in 0..n {
                acc += self[(i, k)] * other[(k, j)];
            }
            acc
        })
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.n, x.len());
        (0..self.n)
            .map(|i| {
                let mut acc = T::zero();
                for j in 0..self.n {
                    acc += self[(i, j)] * x[j];
                }
                acc
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    /// Real part of the Frobenius inner product `tr(Aᴴ B)`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a.conj() * *b).re()).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v.abs_sq()).sum()
    }

    pub fn frobenius(&self) -> f64 {
        math::sqrt(self.frobenius_sq())
    }

    /// `‖A − Aᴴ‖_F ≤ tol·max(‖A‖_F, 1)`
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.sub(&self.adjoint()).frobenius() <= tol * self.frobenius().max(1.0)
    }

    /// `(A + Aᴴ)/2`
    pub fn hermitian_part(&self) -> Self {
        self.add(&self.adjoint()).scaled(0.5)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}
