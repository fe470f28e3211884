//! Dense complex matrix helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn basis_vector(n: usize, index: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// `diag(i·λ)`.
pub fn drift_matrix(lambda: &[f64]) -> CMat {
    let n = lambda.len();
    CMat::from_fn(n, n, |r, k| if r == k { c(0.0, lambda[r]) } else { c(0.0, 0.0) })
}

pub fn commutator(x: &CMat, y: &CMat) -> CMat {
    x * y - y * x
}

/// Real inner product `Re tr(X* Y)`.
pub fn real_inner(x: &CMat, y: &CMat) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

pub fn frobenius(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral norm (largest singular value).
pub fn op_norm(x: &CMat) -> f64 {
    x.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// `max |X + X*|`, zero for skew-Hermitian input.
pub fn skew_defect(x: &CMat) -> f64 {
    max_abs(&(x + x.adjoint()))
}

pub fn hermitian_defect(x: &CMat) -> f64 {
    max_abs(&(x - x.adjoint()))
}

/// Frobenius norm of `U*U - I`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.nrows();
    frobenius(&(u.adjoint() * u - identity(n)))
}

/// Exponential of a skew-Hermitian matrix through the eigendecomposition of the
/// Hermitian matrix `-iM`.
pub fn expm_skew(m: &CMat) -> CMat {
    let n = m.nrows();
    if n == 1 {
        return CMat::from_element(1, 1, c(0.0, m[(0, 0)].im).exp());
    }
    let h = m * c(0.0, -1.0);
    let h = (&h + h.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, w) in eig.eigenvalues.iter().enumerate() {
        let phase = c(0.0, *w).exp();
        for r in 0..n {
            scaled[(r, k)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    let h = (h + h.adjoint()) * c(0.5, 0.0);
    let mut w: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().cloned().collect();
    w.sort_by(|a, b| a.total_cmp(b));
    w
}

/// Nearest unitary by modified Gram-Schmidt on the columns.
pub fn reorthonormalize(u: &CMat) -> CMat {
    let n = u.ncols();
    let mut q = u.clone();
    for k in 0..n {
        for _ in 0..2 {
            for j in 0..k {
                let proj: Complex64 = q.column(j).dotc(&q.column(k));
                let col_j = q.column(j).clone_owned();
                let mut col_k = q.column_mut(k);
                col_k -= col_j * proj;
            }
        }
        let norm = q.column(k).norm();
        q.column_mut(k).unscale_mut(norm);
    }
    q
}

pub fn vec_norm(v: &CVec) -> f64 {
    v.norm()
}
