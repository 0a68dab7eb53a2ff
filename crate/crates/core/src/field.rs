//! Real and complex scalars behind one trait.
//!
//! Everything in the crate is generic over [`Scalar`], implemented for `f64`
//! and [`Complex64`]. A single problem instance uses one field throughout.

use core::fmt::Debug;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Real,
    Complex,
}

pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    const KIND: FieldKind;

    fn zero() -> Self;
    fn from_re(re: f64) -> Self;
    /// Drops `im` in the real field.
    fn from_parts(re: f64, im: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn conj(self) -> Self;
    fn abs_sq(self) -> f64;
    fn scale(self, k: f64) -> Self;

    fn abs(self) -> f64 {
        math::sqrt(self.abs_sq())
    }

    /// Draw from the standard Gaussian of this field, normalized so that
    /// `E|a|² = 1` (complex: independent `N(0, 1/2)` real and imaginary parts).
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    const KIND: FieldKind = FieldKind::Real;

    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn from_re(re: f64) -> Self {
        re
    }
    #[inline]
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn im(self) -> f64 {
        0.0
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn abs_sq(self) -> f64 {
        self * self
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self * k
    }
    #[inline]
    fn abs(self) -> f64 {
        f64::abs(self)
    }

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for Complex64 {
    const KIND: FieldKind = FieldKind::Complex;

    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn from_re(re: f64) -> Self {
        Complex64::new(re, 0.0)
    }
    #[inline]
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn im(self) -> f64 {
        self.im
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::new(self.re, -self.im)
    }
    #[inline]
    fn abs_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        Complex64::new(self.re * k, self.im * k)
    }

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im).scale(core::f64::consts::FRAC_1_SQRT_2)
    }
}

/// `exp(iθ)` in the complex field.
pub fn cis(theta: f64) -> Complex64 {
    Complex64::new(math::cos(theta), math::sin(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn real_conj_is_identity() {
        assert_eq!((-2.5f64).conj(), -2.5);
        assert_eq!(f64::from_parts(3.0, 7.0), 3.0);
    }

    #[test]
    fn complex_gaussian_has_unit_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = 200_000;
        let mean: f64 = (0..k).map(|_| Complex64::gaussian(&mut rng).abs_sq()).sum::<f64>() / k as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }
}
