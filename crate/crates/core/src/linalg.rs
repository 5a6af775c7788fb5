//! Thin helpers over `faer` for the dense complex linear algebra used everywhere else.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn cplx(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

pub fn to_complex(a: MatRef<'_, f64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn diag(values: &[c64]) -> CMat {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { c64::new(0.0, 0.0) })
}

pub fn diag_real(values: &[f64]) -> CMat {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(values[i], 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn scale(a: MatRef<'_, c64>, s: c64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

/// `a + s * b`.
pub fn axpy(a: MatRef<'_, c64>, s: c64, b: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + s * b[(i, j)])
}

pub fn adjoint(a: MatRef<'_, c64>) -> CMat {
    a.adjoint().to_owned()
}

pub fn matmul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a * b
}

/// `aᴴ b`.
pub fn adj_mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a.adjoint() * b
}

/// `aᴴ m a`.
pub fn congruence(a: MatRef<'_, c64>, m: MatRef<'_, c64>) -> CMat {
    let ma = m * a;
    a.adjoint() * ma.as_ref()
}

pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Largest entrywise modulus of `a - aᴴ` (sign = +1) or `a + aᴴ` (sign = -1).
pub fn hermitian_defect(a: MatRef<'_, c64>, sign: f64) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let d = a[(i, j)] - a[(j, i)].conj() * sign;
            m = m.max(d.norm());
        }
    }
    m
}

pub fn hermitian_part(a: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn eigh(a: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    let h = hermitian_part(a);
    let e = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::LinearizationFailure {
        detail: format!("hermitian eigensolver: {e:?}"),
    })?;
    let vals = e.S().column_vector().iter().map(|v| v.re).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn eigvalsh(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let h = hermitian_part(a);
    let vals = h.self_adjoint_eigenvalues(Side::Lower).map_err(|e| {
        Error::LinearizationFailure { detail: format!("hermitian eigensolver: {e:?}") }
    })?;
    Ok(vals)
}

/// Real symmetric eigendecomposition with ascending eigenvalues.
pub fn eigh_real(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let h = Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let e = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::LinearizationFailure {
        detail: format!("symmetric eigensolver: {e:?}"),
    })?;
    Ok((e.S().column_vector().iter().copied().collect(), e.U().to_owned()))
}

/// General eigendecomposition (eigenvalues and right eigenvectors).
pub fn eig(a: MatRef<'_, c64>) -> Result<(Vec<c64>, CMat)> {
    let e = a.eigen().map_err(|e| Error::LinearizationFailure {
        detail: format!("eigensolver: {e:?}"),
    })?;
    Ok((e.S().column_vector().iter().copied().collect(), e.U().to_owned()))
}

pub fn eig_real(a: MatRef<'_, f64>) -> Result<(Vec<c64>, CMat)> {
    let e = a.eigen().map_err(|e| Error::LinearizationFailure {
        detail: format!("eigensolver: {e:?}"),
    })?;
    Ok((e.S().column_vector().iter().copied().collect(), e.U().to_owned()))
}

pub fn eigvals(a: MatRef<'_, c64>) -> Result<Vec<c64>> {
    a.eigenvalues().map_err(|e| Error::LinearizationFailure {
        detail: format!("eigensolver: {e:?}"),
    })
}

/// Singular values in non-increasing order.
pub fn singular_values(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let mut s = a.singular_values().map_err(|e| Error::LinearizationFailure {
        detail: format!("svd: {e:?}"),
    })?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Orthonormal basis of the numerical null space: right singular vectors with
/// singular value at most `rel_cutoff * sigma_max`.
pub fn null_space(a: MatRef<'_, c64>, rel_cutoff: f64) -> Result<CMat> {
    let svd = a.svd().map_err(|e| Error::LinearizationFailure { detail: format!("svd: {e:?}") })?;
    let s: Vec<f64> = svd.S().column_vector().iter().map(|v| v.re).collect();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..s.len()).filter(|&k| s[k] <= rel_cutoff * smax).collect();
    let v = svd.V();
    Ok(Mat::from_fn(a.ncols(), cols.len(), |i, j| v[(i, cols[j])]))
}

/// Solves `a x = b` by partial-pivoting LU.
pub fn solve(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a.partial_piv_lu().solve(b)
}

pub fn solve_real(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    a.partial_piv_lu().solve(b)
}

/// Orthonormal basis of the orthogonal complement of the column span of `basis`
/// (whose columns must be orthonormal), via a full QR factorisation.
pub fn orthogonal_complement(basis: MatRef<'_, c64>) -> CMat {
    let (n, k) = (basis.nrows(), basis.ncols());
    if k == 0 {
        return identity(n);
    }
    let q = basis.qr().compute_Q();
    Mat::from_fn(n, n - k, |i, j| q[(i, k + j)])
}

pub fn column(a: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn columns(a: MatRef<'_, c64>, idx: &[usize]) -> CMat {
    Mat::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])])
}

pub fn from_columns(n: usize, cols: &[Vec<c64>]) -> CMat {
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

pub fn dot(u: &[c64], v: &[c64]) -> c64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(v: &[c64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub fn matvec(a: MatRef<'_, c64>, v: &[c64]) -> Vec<c64> {
    let mut out = vec![c64::new(0.0, 0.0); a.nrows()];
    for j in 0..a.ncols() {
        let vj = v[j];
        if vj == c64::new(0.0, 0.0) {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += a[(i, j)] * vj;
        }
    }
    out
}

pub fn matvec_real(a: MatRef<'_, f64>, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        let vj = v[j];
        for (i, o) in out.iter_mut().enumerate() {
            *o += a[(i, j)] * vj;
        }
    }
    out
}

/// Number of eigenvalues strictly below `-tol` of a Hermitian matrix.
pub fn count_negative(vals: &[f64], tol: f64) -> usize {
    vals.iter().filter(|&&v| v < -tol).count()
}

pub fn spectral_norm_hermitian(a: MatRef<'_, c64>) -> Result<f64> {
    Ok(eigvalsh(a)?.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}
