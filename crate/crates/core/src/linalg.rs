//! Small dense complex linear algebra helpers on top of `nalgebra`.
//!
//! Every residual in the crate is measured with the Frobenius norm, which
//! bounds the spectral norm from above.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dist(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `tr(a * b)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    dist(m, &m.adjoint())
}

pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    dist(&(a * b), &(b * a))
}

/// Kronecker product with `a` as the slow (most significant) index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are returned in
/// the order produced by the solver, with eigenvectors as matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.into_iter().fold(f64::INFINITY, f64::min)
}

/// `exp(-i * h * t)` for Hermitian `h`, through its eigen-decomposition.
pub fn unitary_from_hamiltonian(h: &CMatrix, t: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(h);
    let n = h.nrows();
    let mut scaled = vecs.clone();
    for (j, lambda) in vals.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * vecs.adjoint()
}

pub fn unitarity_residual(u: &CMatrix) -> f64 {
    dist(&(u.adjoint() * u), &identity(u.nrows()))
}

/// Numerical rank of a Hermitian matrix: eigenvalues above `tol`.
pub fn hermitian_rank(m: &CMatrix, tol: f64) -> usize {
    let (vals, _) = hermitian_eigen(m);
    vals.into_iter().filter(|v| *v > tol).count()
}

pub fn outer(v: &[Complex64]) -> CMatrix {
    let n = v.len();
    CMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

pub fn diag(entries: &[Complex64]) -> CMatrix {
    let n = entries.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { entries[i] } else { c64(0.0, 0.0) })
}

pub fn basis_projector(dim: usize, k: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        if i == k && j == k {
            c64(1.0, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    })
}
