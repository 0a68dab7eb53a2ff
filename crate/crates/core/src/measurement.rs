//! Sensing operators `A` and the measurement model `y = |Ax|²`.
//!
//! Two ensembles are provided. [`GaussianEnsemble`] stores `A` densely and
//! works in either field. [`CdpEnsemble`] realizes coded diffraction patterns
//! `Ax = [F(d₁ ⊙ x); …; F(d_L ⊙ x)]` with random unimodular masks drawn from
//! `{1, −1, i, −i}` and the unnormalized DFT `F`, so every row of `A` has norm
//! `√n` like a Gaussian row in expectation. 2D signals are flattened row-major
//! and transformed with the separable 2D DFT.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fft::{Fft, Fft2};
use crate::field::Scalar;
use crate::linalg;

/// A linear map `A: 𝔽ⁿ → 𝔽ᵐ` together with its conjugate transpose.
pub trait SensingOperator<T: Scalar> {
    fn n(&self) -> usize;
    fn m(&self) -> usize;

    /// `out ← A v`
    fn apply_into(&self, v: &[T], out: &mut [T]) -> Result<()>;

    /// `out ← Aᴴ r`
    fn apply_adjoint_into(&self, r: &[T], out: &mut [T]) -> Result<()>;

    fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.m()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    fn apply_adjoint(&self, r: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.n()];
        self.apply_adjoint_into(r, &mut out)?;
        Ok(out)
    }
}

impl<T: Scalar, A: SensingOperator<T> + ?Sized> SensingOperator<T> for &A {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn m(&self) -> usize {
        (**self).m()
    }
    fn apply_into(&self, v: &[T], out: &mut [T]) -> Result<()> {
        (**self).apply_into(v, out)
    }
    fn apply_adjoint_into(&self, r: &[T], out: &mut [T]) -> Result<()> {
        (**self).apply_adjoint_into(r, out)
    }
}

/// `y_k = |(Ax)_k|²`
pub fn forward_intensity<T: Scalar, A: SensingOperator<T> + ?Sized>(
    op: &A,
    x: &[T],
) -> Result<Vec<f64>> {
    Ok(op.apply(x)?.iter().map(|v| v.abs_sq()).collect())
}

/// Adds `e = σ‖y‖·w/‖w‖` with `w` standard real Gaussian, so `‖e‖ = σ‖y‖`.
pub fn add_noise<R: Rng + ?Sized>(y: &[f64], sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("noise level must be finite and ≥ 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(y.to_vec());
    }
    let y_norm = linalg::norm_f64(y);
    if y_norm == 0.0 {
        return Err(Error::invalid("cannot scale noise to a zero measurement vector"));
    }
    let w: Vec<f64> = (0..y.len()).map(|_| rng.sample(StandardNormal)).collect();
    let w_norm = linalg::norm_f64(&w);
    let k = sigma * y_norm / w_norm;
    Ok(y.iter().zip(&w).map(|(yi, wi)| yi + k * wi).collect())
}

/// Shape of the unknown signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalShape {
    OneD(usize),
    /// `(rows, cols)`, flattened row-major.
    TwoD(usize, usize),
}

impl SignalShape {
    pub fn len(&self) -> usize {
        match *self {
            SignalShape::OneD(n) => n,
            SignalShape::TwoD(r, c) => r * c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense `m × n` sensing matrix whose `k`-th measurement is `a_kᴴ v`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEnsemble<T> {
    n: usize,
    m: usize,
    /// Row-major `m × n`, row `k` holds `a_k`.
    rows: Vec<T>,
}

impl<T: Scalar> GaussianEnsemble<T> {
    /// I.i.d. standard Gaussian entries (`E|a_jk|² = 1` in both fields).
    pub fn sample<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        check_dims(n, m)?;
        let rows = (0..n * m).map(|_| T::gaussian(rng)).collect();
        Ok(GaussianEnsemble { n, m, rows })
    }

    /// Builds the ensemble from the sensing vectors `a_k`.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        check_dims(n, m)?;
        let mut flat = Vec::with_capacity(n * m);
        for row in rows {
            Error::check_len(n, row.len())?;
            flat.extend_from_slice(row);
        }
        Ok(GaussianEnsemble { n, m, rows: flat })
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.rows[k * self.n..(k + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.rows.chunks_exact(self.n)
    }

    /// Multiplies every sensing vector by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        GaussianEnsemble { n: self.n, m: self.m, rows: self.rows.iter().map(|v| v.scale(t)).collect() }
    }
}

impl<T: Scalar> SensingOperator<T> for GaussianEnsemble<T> {
    fn n(&self) -> usize {
        self.n
    }

    fn m(&self) -> usize {
        self.m
    }

    fn apply_into(&self, v: &[T], out: &mut [T]) -> Result<()> {
        Error::check_len(self.n, v.len())?;
        Error::check_len(self.m, out.len())?;
        for (o, row) in out.iter_mut().zip(self.rows()) {
            *o = linalg::dot(row, v);
        }
        Ok(())
    }

    fn apply_adjoint_into(&self, r: &[T], out: &mut [T]) -> Result<()> {
        Error::check_len(self.m, r.len())?;
        Error::check_len(self.n, out.len())?;
        out.fill(T::zero());
        for (rk, row) in r.iter().zip(self.rows()) {
            linalg::axpy(*rk, row, out);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Transform {
    OneD(Fft),
    TwoD(Fft2),
}

impl Transform {
    fn forward(&self, buf: &mut [Complex64]) {
        match self {
            Transform::OneD(f) => f.forward(buf),
            Transform::TwoD(f) => f.forward(buf),
        }
    }

    fn adjoint(&self, buf: &mut [Complex64]) {
        match self {
            Transform::OneD(f) => f.adjoint(buf),
            Transform::TwoD(f) => f.adjoint(buf),
        }
    }
}

/// Coded diffraction patterns: `L` masked, unnormalized DFTs of the signal.
#[derive(Debug, Clone)]
pub struct CdpEnsemble {
    shape: SignalShape,
    /// `L × n`, mask `ℓ` is `masks[ℓn..(ℓ+1)n]`.
    masks: Vec<Complex64>,
    transform: Transform,
}

const MASK_ALPHABET: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(0.0, -1.0),
];

impl CdpEnsemble {
    /// `masks` entries drawn uniformly from `{1, −1, i, −i}`.
    pub fn sample<R: Rng + ?Sized>(shape: SignalShape, num_masks: usize, rng: &mut R) -> Result<Self> {
        if num_masks == 0 {
            return Err(Error::invalid("number of masks L must be ≥ 1"));
        }
        let n = shape.len();
        let masks = (0..num_masks * n).map(|_| MASK_ALPHABET[rng.random_range(0..4)]).collect();
        Self::from_masks(shape, masks)
    }

    /// Masks must be unimodular; `masks.len()` must be a positive multiple of `n`.
    pub fn from_masks(shape: SignalShape, masks: Vec<Complex64>) -> Result<Self> {
        let n = shape.len();
        if n == 0 {
            return Err(Error::invalid("n must be ≥ 1"));
        }
        if masks.is_empty() || masks.len() % n != 0 {
            return Err(Error::invalid(format!(
                "mask buffer of length {} is not a positive multiple of n = {n}",
                masks.len()
            )));
        }
        if masks.iter().any(|d| (d.norm_sqr() - 1.0).abs() > 1e-12) {
            return Err(Error::invalid("CDP mask entries must have unit modulus"));
        }
        let transform = match shape {
            SignalShape::OneD(n) => Transform::OneD(Fft::new(n)),
            SignalShape::TwoD(r, c) => Transform::TwoD(Fft2::new(r, c)),
        };
        Ok(CdpEnsemble { shape, masks, transform })
    }

    pub fn shape(&self) -> SignalShape {
        self.shape
    }

    pub fn num_masks(&self) -> usize {
        self.masks.len() / self.shape.len()
    }

    pub fn mask(&self, l: usize) -> &[Complex64] {
        let n = self.shape.len();
        &self.masks[l * n..(l + 1) * n]
    }
}

impl SensingOperator<Complex64> for CdpEnsemble {
    fn n(&self) -> usize {
        self.shape.len()
    }

    fn m(&self) -> usize {
        self.masks.len()
    }

    fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let n = self.n();
        Error::check_len(n, v.len())?;
        Error::check_len(self.m(), out.len())?;
        for (block, mask) in out.chunks_exact_mut(n).zip(self.masks.chunks_exact(n)) {
            for ((o, d), x) in block.iter_mut().zip(mask).zip(v) {
                *o = d * x;
            }
            self.transform.forward(block);
        }
        Ok(())
    }

    fn apply_adjoint_into(&self, r: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let n = self.n();
        Error::check_len(self.m(), r.len())?;
        Error::check_len(n, out.len())?;
        out.fill(Complex64::new(0.0, 0.0));
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        for (block, mask) in r.chunks_exact(n).zip(self.masks.chunks_exact(n)) {
            scratch.copy_from_slice(block);
            self.transform.adjoint(&mut scratch);
            for ((o, d), s) in out.iter_mut().zip(mask).zip(&scratch) {
                *o += d.conj() * s;
            }
        }
        Ok(())
    }
}

fn check_dims(n: usize, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    if m == 0 {
        return Err(Error::invalid("m must be ≥ 1"));
    }
    Ok(())
}
