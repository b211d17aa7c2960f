//! Dense complex linear algebra shared by every analyzer.
//!
//! Matrices and vectors are `nalgebra` dynamic types over `Complex64`. The
//! eigen- and singular value solvers run on `faer`, which stays accurate on
//! rank-deficient complex input.
//! Bipartite index convention: the product basis element `|i>|j>` of an
//! `n ⊗ m` system sits at flat index `i * m + j` (A-major), which is the
//! ordering produced by [`kron`].

use faer::Mat;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Relative threshold for rank and parallelism decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
/// Relative threshold for reconstruction checks.
pub const DEFAULT_RECONSTRUCTION_TOL: f64 = 1e-10;

fn to_faer(m: &ComplexMatrix) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entrywise modulus of `M - M†`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    assert!(m.is_square(), "hermitian_deviation needs a square matrix");
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
///
/// Column `k` of `vectors` is the unit eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eigen(m: &ComplexMatrix, tol: f64) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let deviation = hermitian_deviation(m);
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = to_faer(&sym)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::NoConvergence { routine: "hermitian eigensolver" })?;
    let raw = eig.S().column_vector();
    let basis = eig.U();

    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| raw[b].re.total_cmp(&raw[a].re));
    let values = order.iter().map(|&k| raw[k].re).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, c| basis[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// All eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix, tol: f64) -> Result<Vec<f64>> {
    hermitian_eigen(m, tol).map(|e| e.values)
}

/// Thin singular value decomposition `M = left · diag(singular_values) · right`.
///
/// `left` has orthonormal columns, `right` orthonormal rows; both are square
/// unitaries when `M` is square. Singular values are non-increasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub left: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub right: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.singular_values.len();
        let mut scaled = self.left.clone();
        for (c, &s) in self.singular_values.iter().enumerate().take(k) {
            scaled.column_mut(c).scale_mut(s);
        }
        scaled * &self.right
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        rank_of_values(&self.singular_values, rel_tol)
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd { left: ComplexMatrix::zeros(rows, 0), singular_values: Vec::new(), right: ComplexMatrix::zeros(0, cols) });
    }
    let dec = to_faer(m).thin_svd().map_err(|_| Error::NoConvergence { routine: "svd" })?;
    let raw = dec.S().column_vector();
    let (u, v) = (dec.U(), dec.V());

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw[b].re.total_cmp(&raw[a].re));
    let singular_values = order.iter().map(|&i| raw[i].re).collect();
    let left = ComplexMatrix::from_fn(rows, k, |r, c| u[(r, order[c])]);
    let right = ComplexMatrix::from_fn(k, cols, |r, c| v[(c, order[r])].conj());
    Ok(Svd { left, singular_values, right })
}

fn rank_of_values(values: &[f64], rel_tol: f64) -> usize {
    let largest = values.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    values.iter().filter(|&&s| s > rel_tol * largest).count()
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank(m: &ComplexMatrix, rel_tol: f64) -> Result<usize> {
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(0);
    }
    Ok(svd(m)?.rank(rel_tol))
}

/// Kronecker product; entry `((i, j), (k, l))` is `A[i,k] · B[j,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

/// Which tensor factor a partial trace removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Traces out `side` of an operator on an `n ⊗ m` space.
pub fn partial_trace(m: &ComplexMatrix, shape: (usize, usize), side: Side) -> Result<ComplexMatrix> {
    let (n, k) = shape;
    let dim = n * k;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::ShapeMismatch {
            expected: format!("{dim}x{dim}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let out = match side {
        Side::B => ComplexMatrix::from_fn(n, n, |i, l| (0..k).map(|j| m[(i * k + j, l * k + j)]).sum()),
        Side::A => ComplexMatrix::from_fn(k, k, |j, l| (0..n).map(|i| m[(i * k + j, i * k + l)]).sum()),
    };
    Ok(out)
}

/// Reads a vector on `n ⊗ m` as its `n × m` coefficient matrix.
pub fn reshape_bipartite(v: &ComplexVector, n: usize, m: usize) -> Result<ComplexMatrix> {
    if v.len() != n * m {
        return Err(Error::DimMismatch { left: v.len(), right: n * m });
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| v[i * m + j]))
}

/// Inverse of [`reshape_bipartite`].
pub fn flatten_bipartite(c: &ComplexMatrix) -> ComplexVector {
    let (n, m) = c.shape();
    ComplexVector::from_fn(n * m, |k, _| c[(k / m, k % m)])
}

/// Frobenius norm of `U†U - I`.
pub fn unitarity_deviation(u: &ComplexMatrix) -> f64 {
    let gram = u.adjoint() * u;
    (gram - ComplexMatrix::identity(u.ncols(), u.ncols())).norm()
}

/// `‖a - b‖_F / ‖b‖_F`, or the absolute error when `b` vanishes.
pub fn relative_error(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let scale = b.norm();
    let diff = (a - b).norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Closest unitary in Frobenius norm (polar factor).
pub fn nearest_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dec = svd(m)?;
    Ok(&dec.left * &dec.right)
}

/// Moore–Penrose pseudo-inverse with relative cutoff `rel_tol`.
pub fn pseudo_inverse(m: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    let dec = svd(m)?;
    let largest = dec.singular_values.first().copied().unwrap_or(0.0);
    let mut inv_sigma_left_t = dec.left.adjoint();
    for (r, &s) in dec.singular_values.iter().enumerate() {
        let factor = if s > rel_tol * largest { 1.0 / s } else { 0.0 };
        inv_sigma_left_t.row_mut(r).scale_mut(factor);
    }
    Ok(dec.right.adjoint() * inv_sigma_left_t)
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c64(values[i], 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn diag_complex(values: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_column_slice(values))
}

/// Converts a real matrix given as rows.
pub fn real_matrix(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
}

/// Rotates `v` by a global phase so its largest-modulus entry is real positive.
pub fn fix_phase_gauge(v: &ComplexVector) -> (ComplexVector, C64) {
    let pivot = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let z = v[pivot];
    if z.norm() == 0.0 {
        return (v.clone(), C64::new(1.0, 0.0));
    }
    let phase = z / z.norm();
    (v.map(|x| x / phase), phase)
}
