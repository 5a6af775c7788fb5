//! Star-even pencils `P(λ) = Σ λ^j A_j` of degree one or two.
//!
//! Even coefficients are Hermitian and odd ones skew-Hermitian, so that
//! `P(λ)ᴴ = P(-conj(λ))` and the spectrum is symmetric about the imaginary axis.

use faer::{c64, Mat, MatRef};
use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result, SymmetryDeviation};
use crate::linalg::{self, CMat, I};
use crate::tol::Tolerances;

#[derive(Debug, Clone)]
pub struct StarEvenPencil {
    coeffs: Vec<CMat>,
}

/// Checks the alternating Hermitian/skew-Hermitian structure and invertibility of
/// the leading coefficient. Coefficients within tolerance are projected onto the
/// exact structure.
pub fn validate_pencil(coeffs: Vec<CMat>, tol: &Tolerances) -> Result<StarEvenPencil> {
    let degree = coeffs.len().saturating_sub(1);
    if !(1..=2).contains(&degree) {
        return Err(Error::UnsupportedDegree { degree });
    }
    let n = coeffs[0].nrows();
    for (j, a) in coeffs.iter().enumerate() {
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                detail: format!("coefficient {j} is {}x{}, expected {n}x{n}", a.nrows(), a.ncols()),
            });
        }
    }
    if n == 0 {
        return Err(Error::DimensionMismatch { detail: "empty coefficients".into() });
    }
    let scale = coeffs.iter().map(|a| linalg::max_abs(a.as_ref())).fold(0.0, f64::max);
    let allowed = tol.sym * scale.max(f64::MIN_POSITIVE);
    let mut violations = Vec::new();
    for (j, a) in coeffs.iter().enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let deviation = linalg::hermitian_defect(a.as_ref(), sign);
        if deviation > allowed {
            violations.push(SymmetryDeviation { coefficient: j, deviation, allowed });
        }
    }
    if !violations.is_empty() {
        return Err(Error::SymmetryViolation { violations });
    }
    let sv = linalg::singular_values(coeffs[degree].as_ref())?;
    let (smax, smin) = (sv[0], *sv.last().unwrap());
    if smin <= tol.rank * smax || smax == 0.0 {
        return Err(Error::SingularLeadingCoefficient { sigma_min: smin, sigma_max: smax });
    }
    let coeffs = coeffs
        .into_iter()
        .enumerate()
        .map(|(j, a)| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            Mat::from_fn(n, n, |r, c| (a[(r, c)] + a[(c, r)].conj() * sign) * 0.5)
        })
        .collect();
    Ok(StarEvenPencil { coeffs })
}

impl StarEvenPencil {
    pub fn new(coeffs: Vec<CMat>, tol: &Tolerances) -> Result<Self> {
        validate_pencil(coeffs, tol)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn coeff(&self, j: usize) -> MatRef<'_, c64> {
        self.coeffs[j].as_ref()
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|a| {
            (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].im == 0.0))
        })
    }

    /// `Σ λ^j A_j`.
    pub fn evaluate(&self, lambda: c64) -> CMat {
        let n = self.dim();
        let mut out = Mat::<c64>::zeros(n, n);
        let mut pow = c64::new(1.0, 0.0);
        for a in &self.coeffs {
            out = linalg::axpy(out.as_ref(), pow, a.as_ref());
            pow *= lambda;
        }
        out
    }

    /// `Σ_{j≥1} j λ^{j-1} A_j`.
    pub fn evaluate_derivative(&self, lambda: c64) -> CMat {
        let n = self.dim();
        let mut out = Mat::<c64>::zeros(n, n);
        let mut pow = c64::new(1.0, 0.0);
        for (j, a) in self.coeffs.iter().enumerate().skip(1) {
            out = linalg::axpy(out.as_ref(), pow * j as f64, a.as_ref());
            pow *= lambda;
        }
        out
    }

    /// `P(iz)`, Hermitian for real `z`.
    pub fn at_imaginary(&self, z: f64) -> CMat {
        linalg::hermitian_part(self.evaluate(c64::new(0.0, z)).as_ref())
    }

    /// `i P'(iz)`, Hermitian for real `z`.
    pub fn derivative_at_imaginary(&self, z: f64) -> CMat {
        let d = self.evaluate_derivative(c64::new(0.0, z));
        linalg::hermitian_part(linalg::scale(d.as_ref(), I).as_ref())
    }

    /// The Krein form `-z0 · i P'(i z0)`.
    pub fn krein_form(&self, z0: f64) -> CMat {
        let d = self.derivative_at_imaginary(z0);
        linalg::scale(d.as_ref(), c64::new(-z0, 0.0))
    }

    /// `Σ |λ|^j ‖A_j‖_F`, the natural scale for residuals at `λ`.
    pub fn scale_at(&self, lambda: c64) -> f64 {
        let r = lambda.norm();
        self.coeffs.iter().enumerate().map(|(j, a)| r.powi(j as i32) * a.norm_l2()).sum()
    }

    /// Congruence `Bᴴ A_j B` applied to every coefficient.
    pub fn project(&self, basis: MatRef<'_, c64>) -> Vec<CMat> {
        self.coeffs.iter().map(|a| linalg::congruence(basis, a.as_ref())).collect()
    }

    /// First companion linearisation.
    pub fn companion(&self) -> CMat {
        companion_of(&self.coeffs)
    }

    fn companion_eigen(&self) -> Result<(Vec<c64>, CMat)> {
        let c = self.companion();
        if self.is_real() {
            let re = Mat::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)].re);
            linalg::eig_real(re.as_ref())
        } else {
            linalg::eig(c.as_ref())
        }
    }

    /// Eigenvalues only (no eigenvectors, multiplicities or indices).
    pub fn eigenvalues(&self) -> Result<Vec<c64>> {
        let c = self.companion();
        if self.is_real() {
            let re = Mat::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)].re);
            re.as_ref().eigenvalues().map_err(|e| Error::LinearizationFailure {
                detail: format!("eigensolver: {e:?}"),
            })
        } else {
            linalg::eigvals(c.as_ref())
        }
    }

    pub fn to_json(&self) -> PencilJson {
        let n = self.dim();
        PencilJson {
            degree: self.degree(),
            dimension: n,
            coefficients: self
                .coeffs
                .iter()
                .map(|a| {
                    let mut flat = Vec::with_capacity(n * n);
                    for i in 0..n {
                        for j in 0..n {
                            flat.push([a[(i, j)].re, a[(i, j)].im]);
                        }
                    }
                    flat
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &PencilJson, tol: &Tolerances) -> Result<Self> {
        let n = doc.dimension;
        if doc.coefficients.len() != doc.degree + 1 {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "degree {} needs {} coefficients, got {}",
                    doc.degree,
                    doc.degree + 1,
                    doc.coefficients.len()
                ),
            });
        }
        let mut coeffs = Vec::new();
        for (j, flat) in doc.coefficients.iter().enumerate() {
            if flat.len() != n * n {
                return Err(Error::DimensionMismatch {
                    detail: format!("coefficient {j} has {} entries, expected {}", flat.len(), n * n),
                });
            }
            coeffs.push(Mat::from_fn(n, n, |r, c| {
                let [re, im] = flat[r * n + c];
                c64::new(re, im)
            }));
        }
        validate_pencil(coeffs, tol)
    }
}

fn companion_of(coeffs: &[CMat]) -> CMat {
    let degree = coeffs.len() - 1;
    let n = coeffs[0].nrows();
    let lead = coeffs[degree].as_ref();
    match degree {
        1 => {
            let x = linalg::solve(lead, coeffs[0].as_ref());
            linalg::scale(x.as_ref(), c64::new(-1.0, 0.0))
        }
        _ => {
            let x0 = linalg::solve(lead, coeffs[0].as_ref());
            let x1 = linalg::solve(lead, coeffs[1].as_ref());
            Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
                (true, true) => c64::new(0.0, 0.0),
                (true, false) => {
                    if j - n == i {
                        c64::new(1.0, 0.0)
                    } else {
                        c64::new(0.0, 0.0)
                    }
                }
                (false, true) => -x0[(i - n, j)],
                (false, false) => -x1[(i - n, j - n)],
            })
        }
    }
}

fn well_conditioned(a: MatRef<'_, c64>) -> Result<bool> {
    let sv = linalg::singular_values(a)?;
    Ok(sv[0] > 0.0 && *sv.last().unwrap() > 1e-8 * sv[0])
}

/// Finite eigenvalues of an arbitrary matrix polynomial of degree one or two.
///
/// A singular leading coefficient is handled through the substitution
/// `λ = σ + 1/μ`; eigenvalues at infinity (`μ = 0`) are discarded.
pub fn matrix_polynomial_eigenvalues(coeffs: &[CMat]) -> Result<Vec<c64>> {
    let degree = coeffs.len().saturating_sub(1);
    if !(1..=2).contains(&degree) {
        return Err(Error::UnsupportedDegree { degree });
    }
    if coeffs[0].nrows() == 0 {
        return Ok(Vec::new());
    }
    if well_conditioned(coeffs[degree].as_ref())? {
        return linalg::eigvals(companion_of(coeffs).as_ref());
    }
    let scale = coeffs.iter().map(|a| a.norm_l2()).fold(0.0, f64::max).max(1.0);
    let base = c64::new(0.731, 0.219);
    for s in [1.0, 0.37, 3.1, 0.11, 9.7] {
        let sigma = base * s;
        let shifted: Vec<CMat> = match degree {
            1 => vec![
                coeffs[1].clone(),
                linalg::axpy(coeffs[0].as_ref(), sigma, coeffs[1].as_ref()),
            ],
            _ => {
                let lead = linalg::axpy(
                    linalg::axpy(coeffs[0].as_ref(), sigma, coeffs[1].as_ref()).as_ref(),
                    sigma * sigma,
                    coeffs[2].as_ref(),
                );
                let mid = linalg::axpy(coeffs[1].as_ref(), sigma * 2.0, coeffs[2].as_ref());
                vec![coeffs[2].clone(), mid, lead]
            }
        };
        if !well_conditioned(shifted[degree].as_ref())? {
            continue;
        }
        let mu = linalg::eigvals(companion_of(&shifted).as_ref())?;
        let mmax = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
        return Ok(mu
            .into_iter()
            .filter(|m| m.norm() > 1e-12 * mmax.max(1.0 / scale))
            .map(|m| sigma + c64::new(1.0, 0.0) / m)
            .collect());
    }
    Err(Error::LinearizationFailure { detail: "no regular shift found".into() })
}

/// On-disk pencil format: row-major `[re, im]` entries per coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilJson {
    pub degree: usize,
    pub dimension: usize,
    pub coefficients: Vec<Vec<[f64; 2]>>,
}

pub(crate) fn ser_c64<S: Serializer>(z: &c64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct PolyEigenvalue {
    #[serde(serialize_with = "ser_c64")]
    pub lambda: c64,
    /// Orthonormal basis of the computed eigenspace (N × geometric multiplicity).
    #[serde(skip)]
    pub eigenvectors: CMat,
    pub algebraic_multiplicity: usize,
    pub geometric_multiplicity: usize,
    pub krein_index: Option<usize>,
    pub residual: f64,
}

impl PolyEigenvalue {
    pub fn is_imaginary(&self) -> bool {
        self.lambda.re == 0.0
    }

    pub fn is_semi_simple(&self) -> bool {
        self.algebraic_multiplicity == self.geometric_multiplicity
    }
}

/// Index census `k_r + k_c + k_i^-` over a filtered part of the spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub k_r: usize,
    pub k_c: usize,
    pub k_i_minus: usize,
    pub k_ham: usize,
    /// Imaginary eigenvalues that could not be indexed (Jordan chains).
    pub unindexed: Vec<[f64; 2]>,
    /// Eigenvalues dropped by the caller's filter.
    pub excluded: usize,
    /// Eigenvalues treated as belonging to the kernel.
    pub kernel: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<PolyEigenvalue>,
    pub k_r: usize,
    pub k_c: usize,
    pub k_i_minus: usize,
    pub k_ham_from_census: usize,
    #[serde(skip)]
    pair_tol: f64,
}

impl SpectrumReport {
    /// Census with eigenvalues of modulus at most `kernel_tol` treated as kernel and
    /// those matching `exclude` dropped.
    pub fn census_with(&self, kernel_tol: f64, exclude: impl Fn(&PolyEigenvalue) -> bool) -> Census {
        let mut c = Census {
            k_r: 0,
            k_c: 0,
            k_i_minus: 0,
            k_ham: 0,
            unindexed: Vec::new(),
            excluded: 0,
            kernel: 0,
        };
        for e in &self.eigenvalues {
            let lam = e.lambda;
            if lam.norm() <= kernel_tol {
                c.kernel += e.algebraic_multiplicity;
                continue;
            }
            if exclude(e) {
                c.excluded += e.algebraic_multiplicity;
                continue;
            }
            if lam.re > 0.0 {
                if lam.im.abs() <= self.pair_tol * lam.norm().max(1.0) {
                    c.k_r += e.algebraic_multiplicity;
                } else {
                    c.k_c += e.algebraic_multiplicity;
                }
            } else if lam.re == 0.0 {
                match e.krein_index {
                    Some(k) => c.k_i_minus += k,
                    None => c.unindexed.push([lam.re, lam.im]),
                }
            }
        }
        c.k_ham = c.k_r + c.k_c + c.k_i_minus;
        c
    }

    pub fn census(&self) -> Census {
        self.census_with(self.pair_tol, |_| false)
    }

    /// Largest distance from an eigenvalue `λ` to the nearest `-conj(λ)`, relative to `max(1, |λ|)`.
    pub fn pairing_defect(&self) -> f64 {
        let pts: Vec<c64> = self
            .eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.lambda, e.algebraic_multiplicity))
            .collect();
        pts.iter()
            .map(|&l| {
                let target = -l.conj();
                pts.iter().map(|&m| (m - target).norm()).fold(f64::INFINITY, f64::min)
                    / l.norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    pub fn lambdas(&self) -> Vec<c64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.lambda, e.algebraic_multiplicity))
            .collect()
    }
}

fn snap(lambda: c64, tol: &Tolerances) -> c64 {
    if lambda.re.abs() < tol.pair * lambda.norm().max(1.0) {
        c64::new(0.0, lambda.im)
    } else {
        lambda
    }
}

/// Single-linkage groups of eigenvalues within `rel · max(1, |λ_i|, |λ_j|)` of each other.
fn clusters(vals: &[c64], rel: f64) -> Vec<Vec<usize>> {
    let n = vals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            let radius = rel * vals[i].norm().max(vals[j].norm()).max(1.0);
            if (vals[i] - vals[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

fn residual(p: &StarEvenPencil, lambda: c64, vecs: MatRef<'_, c64>) -> f64 {
    let pl = p.evaluate(lambda);
    let scale = p.scale_at(lambda).max(f64::MIN_POSITIVE);
    (0..vecs.ncols())
        .map(|j| {
            let v = linalg::column(vecs, j);
            linalg::norm2(&linalg::matvec(pl.as_ref(), &v)) / (linalg::norm2(&v) * scale)
        })
        .fold(0.0, f64::max)
}

/// All `nN` eigenvalues through the companion linearisation, grouped into clusters
/// with multiplicities, eigenspaces and (for imaginary semi-simple eigenvalues)
/// negative Krein indices.
pub fn polynomial_spectrum(p: &StarEvenPencil, tol: &Tolerances) -> Result<SpectrumReport> {
    let n = p.dim();
    let (raw, vecs) = p.companion_eigen()?;
    if raw.iter().any(|l| !l.re.is_finite() || !l.im.is_finite()) {
        return Err(Error::LinearizationFailure { detail: "non-finite eigenvalue".into() });
    }
    let vals: Vec<c64> = raw.iter().map(|&l| snap(l, tol)).collect();
    let top = |k: usize| -> Vec<c64> {
        let mut v: Vec<c64> = (0..n).map(|i| vecs[(i, k)]).collect();
        let nv = linalg::norm2(&v);
        if nv > 0.0 {
            v.iter_mut().for_each(|x| *x /= nv);
        }
        v
    };
    let mut out = Vec::new();
    for group in clusters(&vals, tol.cluster) {
        let singleton = |k: usize| -> PolyEigenvalue {
            let v = linalg::from_columns(n, &[top(k)]);
            PolyEigenvalue {
                lambda: vals[k],
                residual: residual(p, vals[k], v.as_ref()),
                eigenvectors: v,
                algebraic_multiplicity: 1,
                geometric_multiplicity: 1,
                krein_index: None,
            }
        };
        if group.len() == 1 {
            out.push(singleton(group[0]));
            continue;
        }
        let mean = group.iter().map(|&k| raw[k]).sum::<c64>() / group.len() as f64;
        let centre = snap(mean, tol);
        let basis = linalg::null_space(p.evaluate(centre).as_ref(), tol.rank)?;
        let g = basis.ncols().min(group.len());
        if g == 0 {
            out.extend(group.iter().map(|&k| singleton(k)));
            continue;
        }
        let basis = Mat::from_fn(n, g, |i, j| basis[(i, j)]);
        out.push(PolyEigenvalue {
            lambda: centre,
            residual: residual(p, centre, basis.as_ref()),
            eigenvectors: basis,
            algebraic_multiplicity: group.len(),
            geometric_multiplicity: g,
            krein_index: None,
        });
    }
    let zero_tol = tol.pair;
    for e in out.iter_mut() {
        if e.is_imaginary() && e.lambda.norm() > zero_tol && e.is_semi_simple() {
            e.krein_index = Some(krein_index_of(p, e, tol)?);
        }
    }
    out.sort_by(|a, b| {
        a.lambda.im.total_cmp(&b.lambda.im).then(a.lambda.re.total_cmp(&b.lambda.re))
    });
    let mut report = SpectrumReport {
        eigenvalues: out,
        k_r: 0,
        k_c: 0,
        k_i_minus: 0,
        k_ham_from_census: 0,
        pair_tol: tol.pair,
    };
    let c = report.census();
    report.k_r = c.k_r;
    report.k_c = c.k_c;
    report.k_i_minus = c.k_i_minus;
    report.k_ham_from_census = c.k_ham;
    Ok(report)
}

fn check_imaginary(eig: &PolyEigenvalue, tol: &Tolerances) -> Result<f64> {
    let l = eig.lambda;
    if l.re.abs() > tol.pair * l.norm().max(1.0) || l.norm() <= tol.pair {
        return Err(Error::NotImaginary { re: l.re, im: l.im });
    }
    if !eig.is_semi_simple() {
        return Err(Error::NotSemiSimple {
            algebraic: eig.algebraic_multiplicity,
            geometric: eig.geometric_multiplicity,
        });
    }
    Ok(l.im)
}

/// Negative Krein index `n(-λ0 [i P'(iλ0)]|_E)` of an imaginary eigenvalue `iλ0`.
pub fn krein_index_of(p: &StarEvenPencil, eig: &PolyEigenvalue, tol: &Tolerances) -> Result<usize> {
    let z0 = check_imaginary(eig, tol)?;
    let h = linalg::congruence(eig.eigenvectors.as_ref(), p.krein_form(z0).as_ref());
    Ok(linalg::count_negative(&linalg::eigvalsh(h.as_ref())?, 0.0))
}

/// Equivalent index from `A_0|_E` (degree one) or `(A_0 + λ0² A_2)|_E` (degree two).
pub fn krein_index_alternative(
    p: &StarEvenPencil,
    eig: &PolyEigenvalue,
    tol: &Tolerances,
) -> Result<usize> {
    let z0 = check_imaginary(eig, tol)?;
    let form = if p.degree() == 1 {
        p.coeff(0).to_owned()
    } else {
        linalg::axpy(p.coeff(0), c64::new(z0 * z0, 0.0), p.coeff(2))
    };
    let h = linalg::congruence(eig.eigenvectors.as_ref(), form.as_ref());
    Ok(linalg::count_negative(&linalg::eigvalsh(h.as_ref())?, 0.0))
}

fn random_structured<R: Rng>(rng: &mut R, n: usize, hermitian: bool) -> CMat {
    let mut a = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if i == j {
                a[(i, i)] = if hermitian { c64::new(v.re, 0.0) } else { c64::new(0.0, v.im) };
            } else {
                a[(i, j)] = v;
                a[(j, i)] = if hermitian { v.conj() } else { -v.conj() };
            }
        }
    }
    a
}

/// Random star-even pencil with entries uniform in the unit square.
pub fn random_pencil<R: Rng>(rng: &mut R, degree: usize, n: usize) -> Result<StarEvenPencil> {
    let coeffs = (0..=degree).map(|j| random_structured(rng, n, j % 2 == 0)).collect();
    validate_pencil(coeffs, &Tolerances::default())
}
