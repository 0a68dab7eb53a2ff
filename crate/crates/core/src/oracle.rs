//! Dense reference implementations for small problems (`n ≤ 8`, `m ≤ 64`).
//!
//! Everything here materializes `n × n` matrices and follows the textbook
//! definitions literally: the lifted operator `𝒜(Z)_k = a_kᴴ Z a_k`, its
//! adjoint `Σ_k b_k a_k a_kᴴ`, the dense tangent projection, and the rank-1
//! PSD truncation by full eigendecomposition (cyclic Jacobi). The compressed
//! solver is checked against these.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::field::{FieldKind, Scalar};
use crate::manifold::project_tangent_dense;
use crate::math;
use crate::measurement::{GaussianEnsemble, SensingOperator};
use crate::solver::TruncationParams;

pub const MAX_N: usize = 8;
pub const MAX_M: usize = 64;

/// Off-diagonal tolerance for the Jacobi sweeps, relative to `‖A‖_F`.
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLiftedOperator<T> {
    n: usize,
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> DenseLiftedOperator<T> {
    /// `rows[k] = a_k`, so that `(Ax)_k = a_kᴴ x`.
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::invalid("dense oracle needs n, m ≥ 1"));
        }
        if n > MAX_N || m > MAX_M {
            return Err(Error::invalid(format!(
                "dense oracle is limited to n ≤ {MAX_N}, m ≤ {MAX_M}; got n = {n}, m = {m}"
            )));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("ragged sensing vectors"));
        }
        Ok(DenseLiftedOperator { n, rows })
    }

    pub fn from_ensemble(e: &GaussianEnsemble<T>) -> Result<Self> {
        Self::new(e.rows().map(<[T]>::to_vec).collect())
    }

    /// Recovers the sensing vectors of any operator by probing it with the
    /// canonical basis: `a_k = conj(row k of A)`.
    pub fn materialize<A: SensingOperator<T> + ?Sized>(op: &A) -> Result<Self> {
        let (n, m) = (op.n(), op.m());
        let mut rows = vec![vec![T::zero(); n]; m];
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.fill(T::zero());
            e[j] = T::from_re(1.0);
            let col = op.apply(&e)?;
            for k in 0..m {
                rows[k][j] = col[k].conj();
            }
        }
        Self::new(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    fn check_dim(&self, z: &Matrix<T>) -> Result<()> {
        Error::check_len(self.n, z.dim())
    }

    /// `a_kᴴ x`, written out.
    pub fn measure(&self, k: usize, x: &[T]) -> T {
        let mut acc = T::zero();
        for j in 0..self.n {
            acc += self.rows[k][j].conj() * x[j];
        }
        acc
    }

    /// `𝒜(Z)_k = Re(a_kᴴ Z a_k)`
    pub fn lifted_forward(&self, z: &Matrix<T>) -> Result<Vec<f64>> {
        self.check_dim(z)?;
        Ok(self
            .rows
            .iter()
            .map(|a| {
                let mut acc = T::zero();
                for i in 0..self.n {
                    for j in 0..self.n {
                        acc += a[i].conj() * z[(i, j)] * a[j];
                    }
                }
                acc.re()
            })
            .collect())
    }

    /// `𝒜ᴴ(b) = Σ_k b_k a_k a_kᴴ`
    pub fn lifted_adjoint(&self, b: &[f64]) -> Result<Matrix<T>> {
        Error::check_len(self.m(), b.len())?;
        let mut out = Matrix::zeros(self.n);
        for (a, bk) in self.rows.iter().zip(b) {
            out = out.add(&Matrix::outer(a, a).scaled(*bk));
        }
        Ok(out)
    }

    /// TRGrad's acceptance mask evaluated measurement by measurement from the
    /// signal `z`.
    pub fn truncation_mask(&self, y: &[f64], z: &[T], p: &TruncationParams) -> Result<Vec<bool>> {
        Error::check_len(self.m(), y.len())?;
        Error::check_len(self.n, z.len())?;
        let m = self.m() as f64;
        let z_norm = math::sqrt(z.iter().map(|v| v.abs_sq()).sum());
        if z_norm == 0.0 {
            return Err(Error::invalid("truncation rules need z ≠ 0"));
        }
        let y_l1: f64 = y.iter().map(|v| v.abs()).sum();
        let az: Vec<f64> = (0..self.m()).map(|k| self.measure(k, z).abs()).collect();
        let resid_l1: f64 = (0..self.m()).map(|k| (y[k] - az[k] * az[k]).abs()).sum();
        Ok((0..self.m())
            .map(|k| {
                let sqrt_y = math::sqrt(y[k].max(0.0));
                let e1x = p.tau_x().is_infinite() || sqrt_y <= p.tau_x() * math::sqrt(y_l1 / m);
                let e1z = p.tau_z().is_infinite() || az[k] <= p.tau_z() * z_norm;
                let e2z = p.tau_h().is_infinite()
                    || (y[k] - az[k] * az[k]).abs() <= p.tau_h() / m * resid_l1 * (az[k] + sqrt_y) / z_norm;
                e1x && e1z && e2z
            })
            .collect())
    }

    /// `G = (1/m)·𝒜ᴴ(mask ⊙ (y − 𝒜(Z)))`
    pub fn gradient(&self, y: &[f64], z: &Matrix<T>, mask: Option<&[bool]>) -> Result<Matrix<T>> {
        Error::check_len(self.m(), y.len())?;
        let fwd = self.lifted_forward(z)?;
        let r: Vec<f64> = (0..self.m())
            .map(|k| if mask.map_or(true, |mk| mk[k]) { y[k] - fwd[k] } else { 0.0 })
            .collect();
        Ok(self.lifted_adjoint(&r)?.scaled(1.0 / self.m() as f64))
    }

    /// Projected gradient `P_T(G)` at the rank-1 matrix `Z`.
    pub fn riemannian_gradient(&self, y: &[f64], z: &Matrix<T>, mask: Option<&[bool]>) -> Result<Matrix<T>> {
        let g = self.gradient(y, z, mask)?.hermitian_part();
        let (_, u) = top_eigenpair(z);
        project_tangent_dense(&g, &u)
    }

    /// `‖D‖_F² / ((1/m)·‖𝒜_mask(D)‖²)` for `D = P_T(G)`.
    pub fn steepest_stepsize(&self, y: &[f64], z: &Matrix<T>, mask: Option<&[bool]>) -> Result<f64> {
        let d = self.riemannian_gradient(y, z, mask)?;
        let fwd = self.lifted_forward(&d)?;
        let denom: f64 = fwd
            .iter()
            .enumerate()
            .filter(|(k, _)| mask.map_or(true, |mk| mk[*k]))
            .map(|(_, v)| v * v)
            .sum::<f64>()
            / self.m() as f64;
        if !(denom > 0.0) {
            return Err(Error::DegenerateStepsize);
        }
        Ok(d.frobenius_sq() / denom)
    }

    /// `𝒯₁(Z + α·P_T(G))`
    pub fn dense_step(&self, y: &[f64], z: &Matrix<T>, alpha: f64, mask: Option<&[bool]>) -> Result<Matrix<T>> {
        let d = self.riemannian_gradient(y, z, mask)?;
        Ok(best_rank_one_psd(&z.add(&d.scaled(alpha))))
    }

    /// `f(Z) = (1/2m)·‖𝒜(Z) − y‖²`
    pub fn objective(&self, y: &[f64], z: &Matrix<T>) -> Result<f64> {
        let fwd = self.lifted_forward(z)?;
        Ok(fwd.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * self.m() as f64))
    }
}

/// Eigen-decomposition of a real symmetric `n × n` matrix (row-major) by
/// cyclic Jacobi rotations. Returns eigenvalues in descending order and the
/// matching eigenvectors.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(a.len(), n * n);
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = math::sqrt(a.iter().map(|x| x * x).sum());
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if math::sqrt(off) <= JACOBI_TOL * frob {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    (values, vectors)
}

/// Real embedding `[[Re H, −Im H], [Im H, Re H]]` of a complex Hermitian matrix;
/// each eigenvalue of `H` appears twice.
fn real_embedding<T: Scalar>(h: &Matrix<T>) -> Vec<f64> {
    let n = h.dim();
    let big = 2 * n;
    let mut out = vec![0.0; big * big];
    for i in 0..n {
        for j in 0..n {
            let (re, im) = (h[(i, j)].re(), h[(i, j)].im());
            out[i * big + j] = re;
            out[i * big + n + j] = -im;
            out[(n + i) * big + j] = im;
            out[(n + i) * big + n + j] = re;
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues<T: Scalar>(h: &Matrix<T>) -> Vec<f64> {
    let n = h.dim();
    match T::KIND {
        FieldKind::Real => {
            let flat: Vec<f64> = (0..n * n).map(|k| h[(k / n, k % n)].re()).collect();
            symmetric_eigen(&flat, n).0
        }
        FieldKind::Complex => symmetric_eigen(&real_embedding(h), 2 * n).0.into_iter().step_by(2).collect(),
    }
}

/// Largest eigenvalue of a Hermitian matrix and a unit eigenvector.
pub fn top_eigenpair<T: Scalar>(h: &Matrix<T>) -> (f64, Vec<T>) {
    let n = h.dim();
    match T::KIND {
        FieldKind::Real => {
            let flat: Vec<f64> = (0..n * n).map(|k| h[(k / n, k % n)].re()).collect();
            let (vals, vecs) = symmetric_eigen(&flat, n);
            (vals[0], vecs[0].iter().map(|&x| T::from_re(x)).collect())
        }
        FieldKind::Complex => {
            let (vals, vecs) = symmetric_eigen(&real_embedding(h), 2 * n);
            // (a; b) ↦ a + ib is an eigenvector of H with the same eigenvalue
            let mut u: Vec<T> = (0..n).map(|j| T::from_parts(vecs[0][j], vecs[0][n + j])).collect();
            crate::linalg::normalize(&mut u);
            (vals[0], u)
        }
    }
}

/// Best rank-1 PSD approximation: `λ₁ q₁q₁ᴴ` with `λ₁` clamped at zero.
pub fn best_rank_one_psd<T: Scalar>(h: &Matrix<T>) -> Matrix<T> {
    let (lambda, q) = top_eigenpair(&h.hermitian_part());
    Matrix::rank_one(lambda.max(0.0), &q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::eig2x2_sym;
    use num_complex::Complex64;

    #[test]
    fn lifted_forward_by_hand() {
        let op = DenseLiftedOperator::new(vec![vec![1.0, 1.0]]).unwrap();
        let z = Matrix::from_fn(2, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        assert_eq!(op.lifted_forward(&z).unwrap(), vec![3.0]);
        assert_eq!(op.lifted_forward(&Matrix::zeros(2)).unwrap(), vec![0.0]);
    }

    #[test]
    fn lifted_adjoint_by_hand() {
        let rows = vec![vec![1.0, 2.0], vec![0.5, -1.0]];
        let op = DenseLiftedOperator::new(rows.clone()).unwrap();
        assert_eq!(op.lifted_adjoint(&[1.0, 0.0]).unwrap(), Matrix::outer(&rows[0], &rows[0]));
        assert_eq!(op.lifted_adjoint(&[0.0, 0.0]).unwrap(), Matrix::zeros(2));
    }

    #[test]
    fn size_guard() {
        assert!(DenseLiftedOperator::new(vec![vec![0.0; 9]]).is_err());
        assert!(DenseLiftedOperator::new(vec![vec![0.0; 2]; 65]).is_err());
        assert!(DenseLiftedOperator::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn jacobi_agrees_with_closed_form_2x2() {
        for &(a, b, d) in &[(2.0, 2.0, 0.0), (-1.0, 0.3, 4.0), (1.0, -5.0, 1.0)] {
            // embedded as the leading block of a 3×3 with an isolated small eigenvalue
            let m = [a, b, 0.0, b, d, 0.0, 0.0, 0.0, -100.0];
            let (vals, vecs) = symmetric_eigen(&m, 3);
            let e = eig2x2_sym(a, b, d);
            assert!((vals[0] - e.values[0]).abs() < 1e-12);
            assert!((vals[1] - e.values[1]).abs() < 1e-12);
            let overlap = vecs[0][0] * e.vectors[0][0] + vecs[0][1] * e.vectors[0][1];
            assert!((overlap.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_top_eigenpair_satisfies_eigen_equation() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let h = Matrix::from_fn(2, |r, c| match (r, c) {
            (0, 0) => one * 2.0,
            (0, 1) => i,
            (1, 0) => -i,
            _ => one * 2.0,
        });
        let (lambda, q) = top_eigenpair(&h);
        assert!((lambda - 3.0).abs() < 1e-12);
        let hq = h.matvec(&q);
        for k in 0..2 {
            assert!((hq[k] - q[k] * lambda).norm() < 1e-12);
        }
        assert_eq!(hermitian_eigenvalues(&h).len(), 2);
    }
}
