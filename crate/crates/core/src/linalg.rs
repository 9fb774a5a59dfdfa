//! Dense complex helpers shared by the quantum modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest absolute deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in ascending order.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn spectral_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let s = f(v);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    scaled * vectors.adjoint()
}

pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    spectral_map(m, |v| v.max(0.0).sqrt())
}

/// Inverse square root on the support; eigenvalues below `floor` map to zero.
pub fn psd_inv_sqrt(m: &CMatrix, floor: f64) -> CMatrix {
    spectral_map(m, |v| if v > floor { 1.0 / v.sqrt() } else { 0.0 })
}

/// Projects onto the PSD cone in Frobenius norm.
pub fn clip_psd(m: &CMatrix) -> CMatrix {
    spectral_map(m, |v| v.max(0.0))
}

/// Operator norm of a Hermitian matrix.
pub fn hermitian_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().sum()
}

/// `Re tr(A B)` without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// `<v|M|v>` real part.
pub fn expectation(m: &CMatrix, v: &CVector) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Orthonormal basis (as columns) of the orthogonal complement of the span
/// of the given vectors.
pub fn orthogonal_complement(vectors: &[CVector], dim: usize) -> CMatrix {
    let mut projector = identity(dim);
    for q in gram_schmidt(vectors) {
        projector -= outer(&q);
    }
    let (values, vecs) = hermitian_eigen(&projector);
    let cols: Vec<usize> = (0..dim).filter(|&k| values[k] > 0.5).collect();
    let mut basis = CMatrix::zeros(dim, cols.len());
    for (j, &k) in cols.iter().enumerate() {
        basis.set_column(j, &vecs.column(k));
    }
    basis
}

/// Modified Gram–Schmidt; vectors numerically dependent on earlier ones are dropped.
pub fn gram_schmidt(vectors: &[CVector]) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for q in &out {
            let proj = q.dotc(&w);
            w -= q * proj;
        }
        let n = w.norm();
        if n > 1e-12 {
            out.push(w / c(n, 0.0));
        }
    }
    out
}
