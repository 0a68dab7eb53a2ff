//! Kernels for the manifold of rank-1 positive semidefinite matrices.
//!
//! A point `Z = σ u uᴴ` is kept as `(σ, u)`. For a Hermitian `G`, the tangent
//! projection `P_T(G) = uuᴴG + Guuᴴ − uuᴴGuuᴴ` is determined by `g = G u` alone
//! and is stored as `(c, s, v)` with `P_T(G) = c·uuᴴ + s·(vuᴴ + uvᴴ)`, `v ⊥ u`.
//! Then `Z + αP_T(G) = [u v]·M·[u v]ᴴ` with the real symmetric
//! `M = [[σ + αc, αs], [αs, 0]]`, and the best rank-1 PSD approximation comes
//! from the larger eigenpair of `M`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::field::Scalar;
use crate::linalg;
use crate::math;

const UNIT_TOL: f64 = 1e-10;

/// The iterate `Z = σ u uᴴ`; the signal estimate is `√σ·u`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneState<T> {
    pub sigma: f64,
    pub u: Vec<T>,
}

impl<T: Scalar> RankOneState<T> {
    pub fn new(sigma: f64, u: Vec<T>) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("σ must be finite and ≥ 0, got {sigma}")));
        }
        check_unit(&u)?;
        Ok(RankOneState { sigma, u })
    }

    /// Lifts a signal `x` to `(‖x‖², x/‖x‖)`.
    pub fn from_signal(x: &[T]) -> Result<Self> {
        let mut u = x.to_vec();
        let nrm = linalg::normalize(&mut u);
        if nrm == 0.0 {
            return Err(Error::invalid("cannot lift the zero vector"));
        }
        Ok(RankOneState { sigma: nrm * nrm, u })
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    /// `x̂ = √σ·u`
    pub fn estimate(&self) -> Vec<T> {
        let k = math::sqrt(self.sigma);
        self.u.iter().map(|v| v.scale(k)).collect()
    }

    /// Dense `σ u uᴴ`; small `n` only.
    pub fn lifted(&self) -> Matrix<T> {
        Matrix::rank_one(self.sigma, &self.u)
    }
}

/// `P_T(G) = c·uuᴴ + s·(vuᴴ + uvᴴ)` relative to the base point's `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentCoeffs<T> {
    pub c: f64,
    pub s: f64,
    pub v: Vec<T>,
}

impl<T: Scalar> TangentCoeffs<T> {
    /// `‖P_T(G)‖_F² = c² + 2s²`
    pub fn norm_sq(&self) -> f64 {
        self.c * self.c + 2.0 * self.s * self.s
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0 && self.s == 0.0
    }

    pub fn to_dense(&self, u: &[T]) -> Matrix<T> {
        let uu = Matrix::outer(u, u).scaled(self.c);
        let cross = Matrix::outer(&self.v, u).add(&Matrix::outer(u, &self.v)).scaled(self.s);
        uu.add(&cross)
    }
}

fn check_unit<T: Scalar>(u: &[T]) -> Result<()> {
    if u.is_empty() {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    let nrm = linalg::norm(u);
    if (nrm - 1.0).abs() > UNIT_TOL {
        return Err(Error::invalid(format!("expected a unit vector, got norm {nrm}")));
    }
    Ok(())
}

/// Compresses `P_T(G)` from `g = G u`.
///
/// When `g ∥ u` the direction `v` is the canonical basis vector at the
/// smallest `|u_j|`, orthonormalized against `u`. For `n = 1` there is no
/// orthogonal complement and `v` is the zero vector.
pub fn tangent_from_action<T: Scalar>(g: &[T], u: &[T]) -> Result<TangentCoeffs<T>> {
    check_unit(u)?;
    Error::check_len(u.len(), g.len())?;
    let proj = linalg::dot(u, g);
    let c = proj.re();
    let mut w = g.to_vec();
    // `uᴴg` is real for Hermitian G; removing the full projection keeps w ⊥ u
    // to rounding.
    linalg::axpy(-proj, u, &mut w);
    let s = linalg::normalize(&mut w);
    if s > 0.0 {
        return Ok(TangentCoeffs { c, s, v: w });
    }
    Ok(TangentCoeffs { c, s: 0.0, v: fallback_direction(u) })
}

fn fallback_direction<T: Scalar>(u: &[T]) -> Vec<T> {
    let n = u.len();
    let mut v = vec![T::zero(); n];
    if n == 1 {
        return v;
    }
    let j = (0..n)
        .min_by(|&a, &b| u[a].abs_sq().total_cmp(&u[b].abs_sq()))
        .unwrap_or(0);
    v[j] = T::from_re(1.0);
    // e_j − u·(uᴴe_j)
    let coeff = u[j].conj();
    linalg::axpy(-coeff, u, &mut v);
    linalg::normalize(&mut v);
    v
}

/// Eigen-decomposition of a real symmetric 2×2 matrix `[[a, b], [b, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eig2 {
    /// Eigenvalues with `values[0] ≥ values[1]`.
    pub values: [f64; 2],
    /// Orthonormal eigenvectors, `vectors[i]` belongs to `values[i]`.
    pub vectors: [[f64; 2]; 2],
}

pub fn eig2x2_sym(a: f64, b: f64, d: f64) -> Eig2 {
    let mean = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let radius = math::hypot(half_gap, b);
    let values = [mean + radius, mean - radius];
    // (M − λ₁I)q = 0 has the solutions (b, λ₁ − a) and (λ₁ − d, b), i.e.
    // (b, r − h) and (r + h, b); take the one free of cancellation.
    let q1 = if radius == 0.0 {
        [1.0, 0.0]
    } else if half_gap >= 0.0 {
        unit2(radius + half_gap, b)
    } else {
        unit2(b, radius - half_gap)
    };
    Eig2 { values, vectors: [q1, [-q1[1], q1[0]]] }
}

fn unit2(x: f64, y: f64) -> [f64; 2] {
    let r = math::hypot(x, y);
    [x / r, y / r]
}

/// `𝒯₁(Z + α·P_T(G))` in `O(n)`: the larger eigenpair of
/// `[[σ + αc, αs], [αs, 0]]`, with the eigenvalue clamped at zero.
pub fn retract<T: Scalar>(state: &RankOneState<T>, t: &TangentCoeffs<T>, alpha: f64) -> RankOneState<T> {
    let eig = eig2x2_sym(state.sigma + alpha * t.c, alpha * t.s, 0.0);
    let [qu, qv] = eig.vectors[0];
    let mut u: Vec<T> = state.u.iter().zip(&t.v).map(|(a, b)| a.scale(qu) + b.scale(qv)).collect();
    if linalg::normalize(&mut u) == 0.0 {
        u = state.u.clone();
    }
    RankOneState { sigma: eig.values[0].max(0.0), u }
}

/// `min_φ ‖x₁ − e^{iφ}x₂‖ = √(‖x₁‖² + ‖x₂‖² − 2|⟨x₁, x₂⟩|)`; real inputs reduce to
/// `min(‖x₁ − x₂‖, ‖x₁ + x₂‖)`.
pub fn dist_phase<T: Scalar>(x1: &[T], x2: &[T]) -> Result<f64> {
    Error::check_len(x1.len(), x2.len())?;
    // Align the phase and measure the difference directly; the closed form
    // above loses half the digits to cancellation near zero.
    let p = linalg::dot(x2, x1);
    let mag = p.abs();
    let phase = if mag > 0.0 { T::from_parts(p.re() / mag, p.im() / mag) } else { T::from_re(1.0) };
    let sq: f64 = x1.iter().zip(x2).map(|(a, b)| (*a - phase * *b).abs_sq()).sum();
    Ok(math::sqrt(sq))
}

/// Dense tangent projection `uuᴴW + Wuuᴴ − uuᴴWuuᴴ`.
pub fn project_tangent_dense<T: Scalar>(w: &Matrix<T>, u: &[T]) -> Result<Matrix<T>> {
    check_unit(u)?;
    Error::check_len(w.dim(), u.len())?;
    if !w.is_hermitian(1e-12) {
        return Err(Error::invalid("tangent projection expects a Hermitian matrix"));
    }
    let uu = Matrix::outer(u, u);
    let left = uu.matmul(w);
    let right = w.matmul(&uu);
    let both = left.matmul(&uu);
    Ok(left.add(&right).sub(&both))
}
