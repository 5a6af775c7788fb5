//! Hamiltonian-Krein index from operator data and from spectral censuses.

use faer::{c64, Mat, MatRef};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::pencil::{Census, SpectrumReport};
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NegativeIndex {
    pub count: usize,
    /// Some eigenvalue lies within the threshold of zero.
    pub ambiguous: bool,
}

/// Number of eigenvalues of the Hermitian matrix `h` below `-threshold`.
pub fn negative_index(h: MatRef<'_, c64>, threshold: f64) -> Result<NegativeIndex> {
    let vals = linalg::eigvalsh(h)?;
    Ok(NegativeIndex {
        count: linalg::count_negative(&vals, threshold),
        ambiguous: vals.iter().any(|v| v.abs() < threshold),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CensusSummary {
    pub k_r: usize,
    pub k_c: usize,
    pub k_i_minus: usize,
    pub k_ham_census: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    pub n_a0: usize,
    pub n_a2: Option<usize>,
    pub n_constraint: usize,
    pub kernel_dim: usize,
    pub k_ham_formula: i64,
    pub census: Option<CensusSummary>,
    /// Eigenvalues of the constraint matrix (empty when the kernel is trivial).
    pub constraint_eigenvalues: Vec<f64>,
}

struct KernelSplit {
    n_a0: usize,
    kernel: CMat,
    /// `Yᴴ B0⁻¹ Y` with `Y = Qᴴ A_1 K` and `B0 = Qᴴ A_0 Q`.
    reduced: CMat,
}

fn split(a0: MatRef<'_, c64>, a1: MatRef<'_, c64>, tol: &Tolerances) -> Result<KernelSplit> {
    let n = a0.nrows();
    if a0.ncols() != n || a1.nrows() != n || a1.ncols() != n {
        return Err(Error::DimensionMismatch { detail: "coefficients must be square and equal size".into() });
    }
    let (vals, vecs) = linalg::eigh(a0)?;
    let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = tol.zero * norm;
    let n_a0 = linalg::count_negative(&vals, cut);
    let ker: Vec<usize> = (0..n).filter(|&k| vals[k].abs() <= cut).collect();
    let rest: Vec<usize> = (0..n).filter(|&k| vals[k].abs() > cut).collect();
    let kernel = linalg::columns(vecs.as_ref(), &ker);
    if ker.is_empty() {
        return Ok(KernelSplit { n_a0, kernel, reduced: Mat::zeros(0, 0) });
    }
    let a1_norm = linalg::max_abs(a1).max(f64::MIN_POSITIVE);
    let inside = linalg::adj_mul(kernel.as_ref(), (a1 * kernel.as_ref()).as_ref());
    let deviation = linalg::max_abs(inside.as_ref()) / a1_norm;
    if deviation > tol.sym.sqrt() {
        return Err(Error::KernelMapViolation { deviation });
    }
    let q = linalg::columns(vecs.as_ref(), &rest);
    let y = linalg::adj_mul(q.as_ref(), (a1 * kernel.as_ref()).as_ref());
    let w = Mat::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] / vals[rest[i]]);
    let reduced = linalg::hermitian_part(linalg::adj_mul(y.as_ref(), w.as_ref()).as_ref());
    Ok(KernelSplit { n_a0, kernel, reduced })
}

fn constraint_index(m: MatRef<'_, c64>, scale: f64, tol: &Tolerances) -> Result<(usize, Vec<f64>)> {
    if m.nrows() == 0 {
        return Ok((0, Vec::new()));
    }
    let vals = linalg::eigvalsh(m)?;
    let vmin = vals.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if vmin <= tol.rank.sqrt() * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularConstraint { value: vmin });
    }
    Ok((linalg::count_negative(&vals, 0.0), vals))
}

/// `K_Ham = n(A_0) - n(-A_1 A_0⁻¹ A_1 |_ker A_0)`.
pub fn hki_linear(a0: MatRef<'_, c64>, a1: MatRef<'_, c64>, tol: &Tolerances) -> Result<IndexReport> {
    let sp = split(a0, a1, tol)?;
    let scale = linalg::max_abs(sp.reduced.as_ref()).max(linalg::max_abs(a1));
    let (n_c, ev) = constraint_index(sp.reduced.as_ref(), scale, tol)?;
    Ok(IndexReport {
        n_a0: sp.n_a0,
        n_a2: None,
        n_constraint: n_c,
        kernel_dim: sp.kernel.ncols(),
        k_ham_formula: sp.n_a0 as i64 - n_c as i64,
        census: None,
        constraint_eigenvalues: ev,
    })
}

/// `K_Ham = n(A_0) + n(A_2) - n((A_2 - A_1 A_0⁻¹ A_1)|_ker A_0)`.
pub fn hki_quadratic(
    a0: MatRef<'_, c64>,
    a1: MatRef<'_, c64>,
    a2: MatRef<'_, c64>,
    tol: &Tolerances,
) -> Result<IndexReport> {
    let sp = split(a0, a1, tol)?;
    let a2_norm = linalg::spectral_norm_hermitian(a2)?;
    let n_a2 = negative_index(a2, tol.zero * a2_norm)?.count;
    let c = if sp.kernel.ncols() == 0 {
        Mat::zeros(0, 0)
    } else {
        linalg::congruence(sp.kernel.as_ref(), a2) + sp.reduced.as_ref()
    };
    let scale = linalg::max_abs(c.as_ref()).max(a2_norm);
    let (n_c, ev) = constraint_index(c.as_ref(), scale, tol)?;
    Ok(IndexReport {
        n_a0: sp.n_a0,
        n_a2: Some(n_a2),
        n_constraint: n_c,
        kernel_dim: sp.kernel.ncols(),
        k_ham_formula: (sp.n_a0 + n_a2) as i64 - n_c as i64,
        census: None,
        constraint_eigenvalues: ev,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusCheck {
    pub agrees: bool,
    pub formula: i64,
    pub census: CensusSummary,
    /// Imaginary eigenvalues without an index (non-semi-simple).
    pub unindexed: Vec<[f64; 2]>,
}

/// Compares the formula count with an already filtered census.
pub fn census_check_with(report: &mut IndexReport, census: &Census) -> CensusCheck {
    let summary = CensusSummary {
        k_r: census.k_r,
        k_c: census.k_c,
        k_i_minus: census.k_i_minus,
        k_ham_census: census.k_ham,
    };
    report.census = Some(summary.clone());
    CensusCheck {
        agrees: report.k_ham_formula == census.k_ham as i64,
        formula: report.k_ham_formula,
        census: summary,
        unindexed: census.unindexed.clone(),
    }
}

/// Compares the formula count with the full census of `spectrum`.
pub fn census_check(report: &mut IndexReport, spectrum: &SpectrumReport) -> CensusCheck {
    census_check_with(report, &spectrum.census())
}

/// Unitary change of basis `Uᴴ A U` applied to every coefficient.
pub fn rotate(coeffs: &[CMat], u: MatRef<'_, c64>) -> Vec<CMat> {
    coeffs.iter().map(|a| linalg::congruence(u, a.as_ref())).collect()
}
