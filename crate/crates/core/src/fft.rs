//! Unnormalized discrete Fourier transforms of arbitrary length.
//!
//! Powers of two use an iterative radix-2 kernel; every other length goes
//! through Bluestein's chirp-z convolution on a padded power-of-two grid. The
//! forward transform is `X_k = Σ_j x_j exp(−2πi jk/n)` with no scaling, and
//! [`Fft::adjoint`] applies its conjugate transpose (also unscaled).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::field::cis;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    plan: Plan,
}

#[derive(Debug, Clone)]
enum Plan {
    Radix2(Radix2),
    Bluestein(Bluestein),
}

#[derive(Debug, Clone)]
struct Radix2 {
    n: usize,
    /// `exp(−2πi k/n)` for `k < n/2`
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Bluestein {
    inner: Radix2,
    /// `exp(−πi k²/n)` for `k < n`
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp, wrapped onto the padded grid.
    kernel_hat: Vec<Complex64>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| cis(-2.0 * PI * k as f64 / n as f64))
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Radix2 { n, twiddles, bitrev }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let padded = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(padded);
        // k² mod 2n keeps the angle argument small and exact.
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
                cis(-PI * k2 / n as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); padded];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[padded - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Bluestein { inner, chirp, kernel_hat: kernel }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let n = self.chirp.len();
        let padded = self.inner.n;
        let mut work = vec![Complex64::new(0.0, 0.0); padded];
        for k in 0..n {
            work[k] = buf[k] * self.chirp[k];
        }
        self.inner.forward(&mut work);
        for (w, h) in work.iter_mut().zip(&self.kernel_hat) {
            // conj trick below turns the forward kernel into an inverse transform
            *w = (*w * *h).conj();
        }
        self.inner.forward(&mut work);
        let inv = 1.0 / padded as f64;
        for k in 0..n {
            buf[k] = work[k].conj() * self.chirp[k] * inv;
        }
    }
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "transform length must be positive");
        let plan = if n.is_power_of_two() {
            Plan::Radix2(Radix2::new(n))
        } else {
            Plan::Bluestein(Bluestein::new(n))
        };
        Fft { n, plan }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place `x ← F x`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n);
        match &self.plan {
            Plan::Radix2(p) => p.forward(buf),
            Plan::Bluestein(p) => p.forward(buf),
        }
    }

    /// In-place `x ← Fᴴ x` (unnormalized inverse).
    pub fn adjoint(&self, buf: &mut [Complex64]) {
        for v in buf.iter_mut() {
            *v = v.conj();
        }
        self.forward(buf);
        for v in buf.iter_mut() {
            *v = v.conj();
        }
    }
}

/// Separable 2D transform over a row-major `rows × cols` grid.
#[derive(Debug, Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fft: Fft,
    col_fft: Fft,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        Fft2 { rows, cols, row_fft: Fft::new(cols), col_fft: Fft::new(rows) }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, false);
    }

    pub fn adjoint(&self, buf: &mut [Complex64]) {
        self.run(buf, true);
    }

    fn run(&self, buf: &mut [Complex64], adjoint: bool) {
        assert_eq!(buf.len(), self.rows * self.cols);
        for row in buf.chunks_exact_mut(self.cols) {
            if adjoint {
                self.row_fft.adjoint(row);
            } else {
                self.row_fft.forward(row);
            }
        }
        let mut column = vec![Complex64::new(0.0, 0.0); self.rows];
        for c in 0..self.cols {
            for r in 0..self.rows {
                column[r] = buf[r * self.cols + c];
            }
            if adjoint {
                self.col_fft.adjoint(&mut column);
            } else {
                self.col_fft.forward(&mut column);
            }
            for r in 0..self.rows {
                buf[r * self.cols + c] = column[r];
            }
        }
    }
}
