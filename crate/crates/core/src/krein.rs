//! Krein matrix `K_S(z)` of a star-even pencil relative to a subspace `S`, its
//! eigenvalue branches, zeros, poles and the small-`z` reduced problem.

use faer::{c64, Mat, MatRef};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::pencil::{matrix_polynomial_eigenvalues, SpectrumReport, StarEvenPencil};
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubspaceOrigin {
    NegativePlusKernel,
    SmallEigs,
    UserSupplied,
}

#[derive(Debug, Clone)]
pub struct Subspace {
    pub basis: CMat,
    /// Orthonormal basis of the orthogonal complement.
    pub complement: CMat,
    pub origin: SubspaceOrigin,
    pub source_eigenvalues: Vec<f64>,
    /// Eigenvalues of `A_0` on the complement (empty for user-supplied subspaces).
    pub complement_eigenvalues: Vec<f64>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let g = linalg::adj_mul(self.basis.as_ref(), self.basis.as_ref());
        linalg::max_abs((g - linalg::identity(self.dim())).as_ref())
    }

    fn from_eigen(
        vals: &[f64],
        vecs: MatRef<'_, c64>,
        chosen: &[usize],
        origin: SubspaceOrigin,
    ) -> Self {
        let rest: Vec<usize> = (0..vals.len()).filter(|k| !chosen.contains(k)).collect();
        Subspace {
            basis: linalg::columns(vecs, chosen),
            complement: linalg::columns(vecs, &rest),
            origin,
            source_eigenvalues: chosen.iter().map(|&k| vals[k]).collect(),
            complement_eigenvalues: rest.iter().map(|&k| vals[k]).collect(),
        }
    }
}

/// Negative space plus kernel of `A_0`: eigenvectors with eigenvalue below
/// `tol.zero · ‖A_0‖`.
pub fn select_subspace(a0: MatRef<'_, c64>, tol: &Tolerances) -> Result<Subspace> {
    let (vals, vecs) = linalg::eigh(a0)?;
    let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = tol.zero * norm;
    let chosen: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] < cut).collect();
    if chosen.is_empty() {
        return Err(Error::EmptySubspace);
    }
    Ok(Subspace::from_eigen(&vals, vecs.as_ref(), &chosen, SubspaceOrigin::NegativePlusKernel))
}

/// Eigenvectors of the `count` eigenvalues of `A_0` of smallest modulus.
pub fn select_small_subspace(a0: MatRef<'_, c64>, count: usize) -> Result<Subspace> {
    if count == 0 {
        return Err(Error::EmptySubspace);
    }
    if count > a0.nrows() {
        return Err(Error::DimensionMismatch {
            detail: format!("{count} small eigenvalues requested from dimension {}", a0.nrows()),
        });
    }
    let (vals, vecs) = linalg::eigh(a0)?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs()));
    let mut chosen: Vec<usize> = order[..count].to_vec();
    chosen.sort_unstable();
    Ok(Subspace::from_eigen(&vals, vecs.as_ref(), &chosen, SubspaceOrigin::SmallEigs))
}

/// Subspace spanned by the columns of `basis` (orthonormalised), with a QR completion.
pub fn user_subspace(basis: MatRef<'_, c64>) -> Result<Subspace> {
    if basis.ncols() == 0 {
        return Err(Error::EmptySubspace);
    }
    let sv = linalg::singular_values(basis)?;
    if *sv.last().unwrap() <= 1e-12 * sv[0] {
        return Err(Error::InvalidInput { detail: "subspace basis is rank deficient".into() });
    }
    let q = basis.qr().compute_thin_Q();
    Ok(Subspace {
        complement: linalg::orthogonal_complement(q.as_ref()),
        basis: q,
        origin: SubspaceOrigin::UserSupplied,
        source_eigenvalues: Vec::new(),
        complement_eigenvalues: Vec::new(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KreinEvaluation {
    pub z: f64,
    #[serde(skip)]
    pub matrix: CMat,
    pub projected_invertible: bool,
    pub cond_estimate: f64,
}

struct Blocks {
    /// Unscaled Krein matrix `A - Cᴴ B⁻¹ C`.
    unscaled: CMat,
    /// `B⁻¹ C`.
    x: CMat,
    cond: f64,
}

fn blocks(p: &StarEvenPencil, s: &Subspace, z: f64) -> Result<Blocks> {
    let pz = p.at_imaginary(z);
    let a = linalg::congruence(s.basis.as_ref(), pz.as_ref());
    let m = s.complement.ncols();
    if m == 0 {
        return Ok(Blocks { unscaled: a, x: Mat::zeros(0, s.dim()), cond: 1.0 });
    }
    let b = linalg::congruence(s.complement.as_ref(), pz.as_ref());
    let c = linalg::adj_mul(s.complement.as_ref(), (pz.as_ref() * s.basis.as_ref()).as_ref());
    // row-norm equilibration: B = D B̃ D
    let d: Vec<f64> = (0..m)
        .map(|i| {
            let r: f64 = (0..m).map(|j| b[(i, j)].norm()).sum();
            if r > 0.0 { r.sqrt().recip() } else { 1.0 }
        })
        .collect();
    let bt = Mat::from_fn(m, m, |i, j| b[(i, j)] * (d[i] * d[j]));
    let (ev, u) = linalg::eigh(bt.as_ref())?;
    let emax = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let emin = ev.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let cond = if emin > 0.0 { emax / emin } else { f64::INFINITY };
    let dc = Mat::from_fn(m, s.dim(), |i, j| c[(i, j)] * d[i]);
    let uc = linalg::adj_mul(u.as_ref(), dc.as_ref());
    let scaled = Mat::from_fn(m, s.dim(), |i, j| uc[(i, j)] / ev[i]);
    let ux = u.as_ref() * scaled.as_ref();
    let x = Mat::from_fn(m, s.dim(), |i, j| ux[(i, j)] * d[i]);
    let ctx = linalg::adj_mul(c.as_ref(), x.as_ref());
    let unscaled = linalg::hermitian_part((a - ctx).as_ref());
    Ok(Blocks { unscaled, x, cond })
}

fn evaluate_unchecked(p: &StarEvenPencil, s: &Subspace, z: f64) -> Result<(CMat, f64)> {
    let b = blocks(p, s, z)?;
    Ok((linalg::scale(b.unscaled.as_ref(), c64::new(-z, 0.0)), b.cond))
}

/// `K_S(z) = -z [P(iz)|_S - P(iz) P_⊥ (P_⊥ P(iz) P_⊥)⁻¹ P_⊥ P(iz)|_S]`.
pub fn krein_matrix_at(
    p: &StarEvenPencil,
    s: &Subspace,
    z: f64,
    tol: &Tolerances,
) -> Result<KreinEvaluation> {
    check_dims(p, s)?;
    let (matrix, cond) = evaluate_unchecked(p, s, z)?;
    if !(cond <= tol.cond_max) {
        return Err(Error::ProjectedSingular { z, cond });
    }
    Ok(KreinEvaluation { z, matrix, projected_invertible: true, cond_estimate: cond })
}

fn check_dims(p: &StarEvenPencil, s: &Subspace) -> Result<()> {
    if p.dim() != s.ambient_dim() {
        return Err(Error::DimensionMismatch {
            detail: format!("pencil dimension {} vs subspace ambient {}", p.dim(), s.ambient_dim()),
        });
    }
    Ok(())
}

/// Derivative in `z` of the scaled Krein matrix `K_S(z)`.
pub fn krein_matrix_derivative(
    p: &StarEvenPencil,
    s: &Subspace,
    z: f64,
    tol: &Tolerances,
) -> Result<CMat> {
    check_dims(p, s)?;
    let b = blocks(p, s, z)?;
    if !(b.cond <= tol.cond_max) {
        return Err(Error::ProjectedSingular { z, cond: b.cond });
    }
    let d = p.derivative_at_imaginary(z);
    let sb = s.basis.as_ref();
    let mut du = linalg::congruence(sb, d.as_ref());
    if s.complement.ncols() > 0 {
        let q = s.complement.as_ref();
        let qd_s = linalg::adj_mul(q, (d.as_ref() * sb).as_ref());
        let qdq = linalg::congruence(q, d.as_ref());
        let cross = linalg::adj_mul(b.x.as_ref(), qd_s.as_ref());
        let quad = linalg::congruence(b.x.as_ref(), qdq.as_ref());
        du = du - cross.as_ref() - cross.adjoint() + quad;
    }
    let du = linalg::hermitian_part(du.as_ref());
    Ok(Mat::from_fn(s.dim(), s.dim(), |i, j| -b.unscaled[(i, j)] - du[(i, j)] * z))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Positive,
    Negative,
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct KreinZero {
    pub z: f64,
    pub branch: usize,
    pub slope: f64,
    pub signature: Signature,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KreinPole {
    pub z: f64,
    pub removable: bool,
    /// Mean growth factor of `|det K_S|` per tenfold approach to the pole.
    pub growth: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KreinCurveSet {
    pub grid: Vec<f64>,
    /// `branches[j][k]` is `r_j(grid[k])`, absent at gap points.
    pub branches: Vec<Vec<Option<f64>>>,
    #[serde(skip)]
    vectors: Vec<Vec<Option<Vec<c64>>>>,
    pub valid: Vec<bool>,
    pub zeros: Vec<KreinZero>,
    pub poles: Vec<KreinPole>,
    pub gaps: Vec<[f64; 2]>,
    /// `(grid index, branch)` pairs where matching fell below the overlap threshold.
    pub discontinuities: Vec<(usize, usize)>,
}

impl KreinCurveSet {
    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("z");
        for j in 0..self.branches.len() {
            out.push_str(&format!(",r_{}", j + 1));
        }
        out.push_str(",valid\n");
        for (k, z) in self.grid.iter().enumerate() {
            out.push_str(&format!("{z:.17e}"));
            for b in &self.branches {
                match b[k] {
                    Some(v) => out.push_str(&format!(",{v:.17e}")),
                    None => out.push(','),
                }
            }
            out.push_str(if self.valid[k] { ",1\n" } else { ",0\n" });
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "zeros": self.zeros,
            "poles": self.poles,
            "gaps": self.gaps,
            "discontinuities": self.discontinuities,
        })
    }
}

fn overlap(u: &[c64], v: &[c64]) -> f64 {
    linalg::dot(u, v).norm()
}

/// Greedy assignment of new eigenvectors to previous branch vectors by maximal overlap.
fn match_branches(prev: &[Vec<c64>], next: &[Vec<c64>]) -> (Vec<usize>, Vec<f64>) {
    let n = prev.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (j, p) in prev.iter().enumerate() {
        for (l, q) in next.iter().enumerate() {
            pairs.push((overlap(p, q), j, l));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut assign = vec![usize::MAX; n];
    let mut score = vec![0.0; n];
    let mut used = vec![false; n];
    for (o, j, l) in pairs {
        if assign[j] == usize::MAX && !used[l] {
            assign[j] = l;
            score[j] = o;
            used[l] = true;
        }
    }
    (assign, score)
}

fn eig_at(p: &StarEvenPencil, s: &Subspace, z: f64, tol: &Tolerances) -> Option<(Vec<f64>, Vec<Vec<c64>>)> {
    let (k, cond) = evaluate_unchecked(p, s, z).ok()?;
    if !(cond <= tol.cond_max) {
        return None;
    }
    let (vals, vecs) = linalg::eigh(k.as_ref()).ok()?;
    let cols = (0..vals.len()).map(|j| linalg::column(vecs.as_ref(), j)).collect();
    Some((vals, cols))
}

/// Krein eigenvalue branches `r_j(z)` over `grid`, matched by eigenvector overlap.
pub fn trace_branches(
    p: &StarEvenPencil,
    s: &Subspace,
    grid: &[f64],
    tol: &Tolerances,
) -> Result<KreinCurveSet> {
    check_dims(p, s)?;
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput { detail: "grid must be strictly increasing".into() });
    }
    let n = s.dim();
    let evals: Vec<_> = grid.par_iter().map(|&z| eig_at(p, s, z, tol)).collect();
    let mut branches = vec![vec![None; grid.len()]; n];
    let mut vectors = vec![vec![None; grid.len()]; n];
    let mut valid = vec![false; grid.len()];
    let mut gaps = Vec::new();
    let mut discontinuities = Vec::new();
    let mut prev: Option<Vec<Vec<c64>>> = None;
    let mut gap_start: Option<usize> = None;
    for (k, e) in evals.into_iter().enumerate() {
        let Some((vals, vecs)) = e else {
            gap_start.get_or_insert(k);
            continue;
        };
        if let Some(g) = gap_start.take() {
            gaps.push([grid[g], grid[k - 1]]);
        }
        valid[k] = true;
        let assign: Vec<usize> = match &prev {
            None => (0..n).collect(),
            Some(pv) => {
                let (assign, score) = match_branches(pv, &vecs);
                for (j, &o) in score.iter().enumerate() {
                    if o < tol.overlap {
                        discontinuities.push((k, j));
                    }
                }
                assign
            }
        };
        let mut cur = Vec::with_capacity(n);
        for j in 0..n {
            let l = assign[j];
            branches[j][k] = Some(vals[l]);
            vectors[j][k] = Some(vecs[l].clone());
            cur.push(vecs[l].clone());
        }
        prev = Some(cur);
    }
    if let Some(g) = gap_start {
        gaps.push([grid[g], grid[grid.len() - 1]]);
    }
    Ok(KreinCurveSet {
        grid: grid.to_vec(),
        branches,
        vectors,
        valid,
        zeros: Vec::new(),
        poles: Vec::new(),
        gaps,
        discontinuities,
    })
}

/// Eigenvalue of `K_S(z)` whose eigenvector best matches `reference`.
fn follow(
    p: &StarEvenPencil,
    s: &Subspace,
    z: f64,
    reference: &[c64],
    tol: &Tolerances,
) -> Option<(f64, Vec<c64>, f64)> {
    let (vals, vecs) = eig_at(p, s, z, tol)?;
    let (l, _) = vecs
        .iter()
        .enumerate()
        .map(|(l, v)| (l, overlap(reference, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Some((vals[l], vecs[l].clone(), scale))
}

/// Refines sign changes of every branch by bisection and classifies each zero by the
/// slope `vᴴ K_S'(z*) v`. Crossings through poles, where `P(iz)` stays nonsingular, are
/// discarded, as is the trivial zero at `z = 0`.
pub fn locate_zeros(
    curves: &mut KreinCurveSet,
    p: &StarEvenPencil,
    s: &Subspace,
    tol: &Tolerances,
) -> Result<()> {
    let mut zeros = Vec::new();
    let disc: std::collections::HashSet<(usize, usize)> =
        curves.discontinuities.iter().copied().collect();
    for j in 0..curves.n_branches() {
        for k in 0..curves.grid.len().saturating_sub(1) {
            let (Some(ra), Some(rb)) = (curves.branches[j][k], curves.branches[j][k + 1]) else {
                continue;
            };
            if disc.contains(&(k + 1, j)) {
                continue;
            }
            let (a, b) = (curves.grid[k], curves.grid[k + 1]);
            if a <= 0.0 && b >= 0.0 {
                continue;
            }
            if ra == 0.0 {
                if k == 0 || curves.branches[j][k - 1].is_none() {
                    if let Some(zr) = classify(p, s, a, j, tol)? {
                        zeros.push(zr);
                    }
                }
                continue;
            }
            if rb == 0.0 {
                if let Some(zr) = classify(p, s, b, j, tol)? {
                    zeros.push(zr);
                }
                continue;
            }
            if ra.signum() == rb.signum() {
                continue;
            }
            let reference = curves.vectors[j][k].clone().unwrap();
            let Some(zs) = refine_inertia(p, s, a, b, tol)
                .or_else(|| refine_following(p, s, a, b, ra.signum(), reference, tol))
            else {
                continue;
            };
            let Some((vals, vecs)) = eig_at(p, s, zs, tol) else {
                continue;
            };
            let l = (0..vals.len()).min_by(|&x, &y| vals[x].abs().total_cmp(&vals[y].abs())).unwrap();
            let (r, v) = (vals[l], &vecs[l]);
            let scale = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let natural = zs.abs() * p.scale_at(c64::new(0.0, zs));
            if r.abs() > tol.zero_r * scale.max(natural).max(1.0) || !pencil_singular(p, zs, tol) {
                continue;
            }
            if zeros.iter().any(|q: &KreinZero| (q.z - zs).abs() <= 1e-12 * zs.abs().max(1.0)) {
                continue;
            }
            let dk = krein_matrix_derivative(p, s, zs, tol)?;
            let slope = linalg::dot(v, &linalg::matvec(dk.as_ref(), v)).re / linalg::norm2(v).powi(2);
            zeros.push(KreinZero {
                z: zs,
                branch: j,
                slope,
                signature: signature_of(slope, p, zs, tol),
                residual: r,
            });
        }
    }
    zeros.sort_by(|a, b| a.z.total_cmp(&b.z));
    curves.zeros = zeros;
    Ok(())
}

fn pencil_singular(p: &StarEvenPencil, z: f64, tol: &Tolerances) -> bool {
    let Ok(vals) = linalg::eigvalsh(p.at_imaginary(z).as_ref()) else {
        return false;
    };
    let smin = vals.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    smin <= tol.resid * p.scale_at(c64::new(0.0, z))
}

fn inertia(p: &StarEvenPencil, s: &Subspace, z: f64, tol: &Tolerances) -> Option<usize> {
    eig_at(p, s, z, tol).map(|(v, _)| v.iter().filter(|x| **x < 0.0).count())
}

fn narrow(a: f64, b: f64) -> bool {
    b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300)
}

/// Bisection on the number of negative Krein eigenvalues.
fn refine_inertia(p: &StarEvenPencil, s: &Subspace, mut a: f64, mut b: f64, tol: &Tolerances) -> Option<f64> {
    let na = inertia(p, s, a, tol)?;
    if inertia(p, s, b, tol)? == na {
        return None;
    }
    while !narrow(a, b) {
        let m = 0.5 * (a + b);
        if inertia(p, s, m, tol)? == na {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Bisection on one branch, followed by eigenvector overlap.
fn refine_following(
    p: &StarEvenPencil,
    s: &Subspace,
    mut a: f64,
    mut b: f64,
    sa: f64,
    mut reference: Vec<c64>,
    tol: &Tolerances,
) -> Option<f64> {
    while !narrow(a, b) {
        let m = 0.5 * (a + b);
        let (rm, vm, _) = follow(p, s, m, &reference, tol)?;
        reference = vm;
        if rm == 0.0 {
            return Some(m);
        }
        if rm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Sign of the slope, with the threshold relative to the Krein form at `z` (poles
/// nearby inflate `K_S'` but not the form).
fn signature_of(slope: f64, p: &StarEvenPencil, z: f64, tol: &Tolerances) -> Signature {
    let scale = linalg::max_abs(p.krein_form(z).as_ref()).max(1.0);
    if slope.abs() < tol.slope * scale {
        Signature::Degenerate
    } else if slope > 0.0 {
        Signature::Positive
    } else {
        Signature::Negative
    }
}

fn classify(
    p: &StarEvenPencil,
    s: &Subspace,
    z: f64,
    branch: usize,
    tol: &Tolerances,
) -> Result<Option<KreinZero>> {
    let Some((vals, vecs)) = eig_at(p, s, z, tol) else {
        return Ok(None);
    };
    let Some(l) = (0..vals.len()).find(|&l| vals[l] == 0.0) else {
        return Ok(None);
    };
    let dk = krein_matrix_derivative(p, s, z, tol)?;
    let v = &vecs[l];
    let slope = linalg::dot(v, &linalg::matvec(dk.as_ref(), v)).re;
    Ok(Some(KreinZero { z, branch, slope, signature: signature_of(slope, p, z, tol), residual: 0.0 }))
}

/// Coefficients `Qᴴ A_j Q` of the pencil compressed to the complement of `S`.
pub fn complement_pencil(p: &StarEvenPencil, s: &Subspace) -> Vec<CMat> {
    p.project(s.complement.as_ref())
}

fn det(m: MatRef<'_, c64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let (vals, _) = match linalg::eig(m) {
        Ok(v) => v,
        Err(_) => return f64::NAN,
    };
    vals.iter().map(|v| v.norm()).product()
}

/// Poles of `K_S` in `[z_lo, z_hi]`: real `z` with `iz` an eigenvalue of the complement
/// pencil. A pole is genuine when `|det K_S|` grows by more than `√10` per tenfold
/// approach over three refinement levels on both sides.
pub fn locate_poles(
    p: &StarEvenPencil,
    s: &Subspace,
    z_lo: f64,
    z_hi: f64,
    tol: &Tolerances,
) -> Result<Vec<KreinPole>> {
    check_dims(p, s)?;
    if s.complement.ncols() == 0 {
        return Ok(Vec::new());
    }
    let coeffs = complement_pencil(p, s);
    let eigs = matrix_polynomial_eigenvalues(&coeffs)?;
    let mut zs: Vec<f64> = eigs
        .iter()
        .filter(|l| l.re.abs() <= tol.pair.sqrt() * l.norm().max(1.0))
        .map(|l| l.im)
        .filter(|&z| z >= z_lo && z <= z_hi)
        .collect();
    zs.sort_by(f64::total_cmp);
    zs.dedup_by(|a, b| (*a - *b).abs() <= tol.cluster * a.abs().max(1.0));
    let mut poles = Vec::new();
    for zp in zs {
        let scale = zp.abs().max(1.0);
        let mut logs = Vec::new();
        for side in [-1.0, 1.0] {
            let dets: Vec<f64> = [1e-6, 1e-7, 1e-8]
                .iter()
                .map(|d| {
                    let z = zp + side * d * scale;
                    evaluate_unchecked(p, s, z).map(|(k, _)| det(k.as_ref())).unwrap_or(f64::NAN)
                })
                .collect();
            for w in dets.windows(2) {
                logs.push((w[1] / w[0]).log10());
            }
        }
        let finite: Vec<f64> = logs.iter().copied().filter(|v| v.is_finite()).collect();
        let mean = if finite.is_empty() {
            0.0
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        let growth = 10f64.powf(mean);
        poles.push(KreinPole { z: zp, removable: growth <= 10f64.sqrt(), growth });
    }
    Ok(poles)
}

/// Inserts `z_p ± 10^-k · max(1,|z_p|)` for `k` in `levels` around each pole into `grid`.
pub fn refine_grid_near_poles(grid: &[f64], poles: &[f64], levels: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    let mut out = grid.to_vec();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    for &zp in poles {
        for k in levels.clone() {
            for side in [-1.0, 1.0] {
                let z = zp + side * 10f64.powi(-k) * zp.abs().max(1.0);
                if z > lo && z < hi {
                    out.push(z);
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Poles, branches and classified zeros in one pass, on `z_grid` refined towards each
/// pole and towards the origin.
pub fn krein_curves(p: &StarEvenPencil, s: &Subspace, z_grid: &[f64], tol: &Tolerances) -> Result<KreinCurveSet> {
    if z_grid.len() < 2 {
        return Err(Error::InvalidInput { detail: "z grid needs at least two points".into() });
    }
    let poles = locate_poles(p, s, z_grid[0], z_grid[z_grid.len() - 1], tol)?;
    let zp: Vec<f64> = poles.iter().map(|q| q.z).collect();
    let mut grid = refine_grid_near_poles(z_grid, &zp, 2..=12);
    if grid[0] < 0.0 && grid[grid.len() - 1] > 0.0 {
        grid = refine_grid_near_poles(&grid, &[0.0], 0..=12);
    }
    let mut curves = trace_branches(p, s, &grid, tol)?;
    locate_zeros(&mut curves, p, s, tol)?;
    curves.poles = poles;
    Ok(curves)
}

/// Whether `iz` lies within `tol_match` of an eigenvalue in `report`.
pub fn matches_spectrum(z: f64, report: &SpectrumReport, tol_match: f64) -> bool {
    report
        .eigenvalues
        .iter()
        .any(|e| (e.lambda - c64::new(0.0, z)).norm() <= tol_match * z.abs().max(1.0))
}

/// Coefficients of `-K_S(z)/z = M0 + z K1 - z² K2 + O(z³)`.
#[derive(Debug, Clone)]
pub struct SmallZExpansion {
    pub m0: CMat,
    pub k1: CMat,
    pub k2: CMat,
}

pub fn small_z_reduction(p: &StarEvenPencil, s: &Subspace, tol: &Tolerances) -> Result<SmallZExpansion> {
    check_dims(p, s)?;
    let sb = s.basis.as_ref();
    let m0 = linalg::hermitian_part(linalg::congruence(sb, p.coeff(0)).as_ref());
    let ia1 = linalg::scale(p.coeff(1), linalg::I);
    let k1 = linalg::hermitian_part(linalg::congruence(sb, ia1.as_ref()).as_ref());
    let mut k2 = if p.degree() == 2 {
        linalg::congruence(sb, p.coeff(2))
    } else {
        Mat::zeros(s.dim(), s.dim())
    };
    if s.complement.ncols() > 0 {
        let q = s.complement.as_ref();
        let b0 = linalg::congruence(q, p.coeff(0));
        let (ev, u) = linalg::eigh(b0.as_ref())?;
        let norm = linalg::spectral_norm_hermitian(p.coeff(0))?;
        if let Some(&bad) = ev.iter().find(|v| v.abs() <= tol.zero * norm) {
            return Err(Error::ComplementSingular { eigenvalue: bad });
        }
        let y = linalg::adj_mul(q, (p.coeff(1) * sb).as_ref());
        let uy = linalg::adj_mul(u.as_ref(), y.as_ref());
        let w = Mat::from_fn(uy.nrows(), uy.ncols(), |i, j| uy[(i, j)] / ev[i]);
        let yb = linalg::adj_mul(uy.as_ref(), w.as_ref());
        // A_1 Q B0⁻¹ Qᴴ A_1 on S equals -Yᴴ B0⁻¹ Y since A_1ᴴ = -A_1.
        k2 += yb;
    }
    let k2 = linalg::hermitian_part(k2.as_ref());
    Ok(SmallZExpansion { m0, k1, k2 })
}

impl SmallZExpansion {
    /// `M0 + z K1 - z² K2`.
    pub fn model(&self, z: f64) -> CMat {
        let a = linalg::axpy(self.m0.as_ref(), c64::new(z, 0.0), self.k1.as_ref());
        linalg::axpy(a.as_ref(), c64::new(-z * z, 0.0), self.k2.as_ref())
    }
}

/// Small eigenvalues `λ = ±i√α` from `M0 v = α K2 v`.
pub fn interaction_eigenvalues(m0: MatRef<'_, c64>, k2: MatRef<'_, c64>, tol: &Tolerances) -> Result<Vec<c64>> {
    let sv = linalg::singular_values(k2)?;
    let smin = sv.last().copied().unwrap_or(0.0);
    if sv.is_empty() || smin <= tol.rank * sv[0].max(1.0) {
        return Err(Error::SingularConstraint { value: smin });
    }
    let x = linalg::solve(k2, m0);
    let alphas = linalg::eigvals(x.as_ref())?;
    let mut out = Vec::with_capacity(2 * alphas.len());
    for a in alphas {
        let a = if a.im.abs() <= 1e-12 * a.norm() { c64::new(a.re, 0.0) } else { a };
        let root = if a.im == 0.0 {
            if a.re >= 0.0 {
                c64::new(0.0, a.re.sqrt())
            } else {
                c64::new((-a.re).sqrt(), 0.0)
            }
        } else {
            linalg::I * a.sqrt()
        };
        out.push(root);
        out.push(-root);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::{polynomial_spectrum, validate_pencil};

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn j2() -> CMat {
        Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(1.0, 0.0),
            (1, 0) => c(-1.0, 0.0),
            _ => c(0.0, 0.0),
        })
    }

    fn toy(d: [f64; 2]) -> StarEvenPencil {
        validate_pencil(vec![linalg::diag_real(&d), j2()], &Tolerances::default()).unwrap()
    }

    #[test]
    fn scalar_reduction_closed_form() {
        let tol = Tolerances::default();
        let p = toy([-1.0, 1.0]);
        let s = select_subspace(p.coeff(0), &tol).unwrap();
        assert_eq!(s.dim(), 1);
        for z in [-1.7, -0.3, 0.0, 0.25, 1.9] {
            let k = krein_matrix_at(&p, &s, z, &tol).unwrap();
            assert!((k.matrix[(0, 0)].re - (z + z * z * z)).abs() < 1e-13);
            let d = krein_matrix_derivative(&p, &s, z, &tol).unwrap();
            assert!((d[(0, 0)].re - (1.0 + 3.0 * z * z)).abs() < 1e-13);
        }
        let poles = locate_poles(&p, &s, -10.0, 10.0, &tol).unwrap();
        assert!(poles.is_empty());
    }

    #[test]
    fn derivative_at_zero_is_minus_a0() {
        let tol = Tolerances::default();
        let a0 = Mat::from_fn(3, 3, |i, j| c(if i == j { [-2.0, 0.5, 3.0][i] } else { 0.3 }, 0.0));
        let a1 = Mat::from_fn(3, 3, |i, j| c(0.0, (i + 2 * j) as f64 * 0.1 + if i == j { 0.2 } else { 0.0 }));
        let a1 = linalg::axpy(a1.as_ref(), c(-1.0, 0.0), a1.adjoint().to_owned().as_ref());
        let p = validate_pencil(vec![a0, a1, linalg::identity(3)], &tol).unwrap();
        let s = select_subspace(p.coeff(0), &tol).unwrap();
        let d = krein_matrix_derivative(&p, &s, 0.0, &tol).unwrap();
        let a0s = linalg::congruence(s.basis.as_ref(), p.coeff(0));
        assert!(linalg::max_abs((d + a0s).as_ref()) < 1e-13);
    }

    #[test]
    fn zeros_of_negative_pair() {
        let tol = Tolerances::default();
        let p = toy([-1.0, -2.0]);
        let s = select_subspace(p.coeff(0), &tol).unwrap();
        assert_eq!(s.dim(), 2);
        let grid: Vec<f64> = (0..=400).map(|k| -3.0 + 6.0 * k as f64 / 400.0 + 1e-3).collect();
        let mut curves = trace_branches(&p, &s, &grid, &tol).unwrap();
        locate_zeros(&mut curves, &p, &s, &tol).unwrap();
        let zs: Vec<f64> = curves.zeros.iter().map(|z| z.z).collect();
        assert_eq!(zs.len(), 2, "{zs:?}");
        assert!((zs[0] + 2f64.sqrt()).abs() < 1e-12 && (zs[1] - 2f64.sqrt()).abs() < 1e-12);
        assert!(curves.zeros.iter().all(|z| z.signature == Signature::Negative));
        let rep = polynomial_spectrum(&p, &tol).unwrap();
        assert!(zs.iter().all(|&z| matches_spectrum(z, &rep, 1e-6)));
    }

    #[test]
    fn interaction_scalar_is_real_pair() {
        let tol = Tolerances::default();
        let l = interaction_eigenvalues(
            linalg::diag_real(&[-0.01]).as_ref(),
            linalg::identity(1).as_ref(),
            &tol,
        )
        .unwrap();
        assert_eq!(l.len(), 2);
        assert!((l[0].re.abs() - 0.1).abs() < 1e-15 && l[0].im == 0.0);
        let l = interaction_eigenvalues(
            linalg::diag_real(&[0.01]).as_ref(),
            linalg::identity(1).as_ref(),
            &tol,
        )
        .unwrap();
        assert!((l[0].im.abs() - 0.1).abs() < 1e-15 && l[0].re == 0.0);
        let z = interaction_eigenvalues(
            linalg::diag_real(&[0.0, 0.0]).as_ref(),
            linalg::identity(2).as_ref(),
            &tol,
        )
        .unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn small_z_model_matches_to_third_order() {
        let tol = Tolerances::default();
        let a0 = linalg::diag_real(&[1e-3, -2e-3, 1.0, -0.7, 2.0]);
        let a1 = Mat::from_fn(5, 5, |i, j| {
            c(((i * 3 + j * 5) % 7) as f64 * 0.1, ((i + j) % 3) as f64 * 0.2)
        });
        let a1 = linalg::axpy(a1.as_ref(), c(-1.0, 0.0), a1.adjoint().to_owned().as_ref());
        let a2 = linalg::diag_real(&[1.0, 1.5, 2.0, 0.5, 1.0]);
        let p = validate_pencil(vec![a0, a1, a2], &tol).unwrap();
        let s = select_small_subspace(p.coeff(0), 2).unwrap();
        let ex = small_z_reduction(&p, &s, &tol).unwrap();
        let err = |z: f64| {
            let k = krein_matrix_at(&p, &s, z, &tol).unwrap().matrix;
            let lhs = linalg::scale(k.as_ref(), c(-1.0 / z, 0.0));
            linalg::max_abs((lhs - ex.model(z)).as_ref())
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        let slope = (e1 / e2).log2();
        assert!(slope > 2.7, "slope {slope}");
    }
}
