//! Fifth-order KdV: dispersion relation, collision prediction, small periodic waves
//! by Fourier-Galerkin Newton iteration, Bloch pencils and instability scans.
//!
//! In Fourier space the steady problem reads `D(k) U_k + [f(U)]_k = 0` with
//! `D(k) = (2/15) ℓ⁴ k⁴ + b ℓ² k² - c_0` and `f(u) = (3/2) u² + (1/2) u_x² + u u_xx`.

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krein::{self, KreinCurveSet, Subspace};
use crate::linalg::{self, CMat};
use crate::pencil::{validate_pencil, StarEvenPencil};
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kdv5Params {
    pub b: f64,
    pub modes: usize,
}

impl Default for Kdv5Params {
    fn default() -> Self {
        Kdv5Params { b: -8.0 / 15.0, modes: 32 }
    }
}

impl Kdv5Params {
    pub fn new(b: f64, modes: usize) -> Result<Self> {
        if modes < 2 {
            return Err(Error::OutOfRange { what: "modes".into(), value: modes as f64 });
        }
        let p = Kdv5Params { b, modes };
        p.check_resonance()?;
        Ok(p)
    }

    pub fn c0(&self) -> f64 {
        2.0 / 15.0 + self.b
    }

    /// `D(k) = (2/15) ℓ⁴ k⁴ + b ℓ² k² - c_0` at real wavenumber `k`.
    pub fn symbol(&self, k: f64, ell: f64) -> f64 {
        let q = ell * ell * k * k;
        2.0 / 15.0 * q * q + self.b * q - self.c0()
    }

    fn symbol_dell(&self, k: f64, ell: f64) -> f64 {
        let k2 = k * k;
        8.0 / 15.0 * ell.powi(3) * k2 * k2 + 2.0 * self.b * ell * k2
    }

    pub fn check_resonance(&self) -> Result<()> {
        for k in 0..=self.modes as i64 {
            if k != 1 && self.symbol(k as f64, 1.0).abs() < 1e-10 {
                return Err(Error::ResonanceDetected { mode: k });
            }
        }
        Ok(())
    }
}

/// `d(n, μ)` at the unperturbed scaling `ℓ = 1`.
pub fn dispersion(n: i64, mu: f64, params: &Kdv5Params) -> f64 {
    params.symbol(n as f64 + mu, 1.0)
}

/// `z_n(μ) = -(n+μ) d(n,μ)` at scaling `ell`.
pub fn curve(n: i64, mu: f64, ell: f64, params: &Kdv5Params) -> f64 {
    let k = n as f64 + mu;
    -k * params.symbol(k, ell)
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub mu: f64,
    pub n: i64,
    pub z: f64,
    pub d: f64,
    pub negative_signature: bool,
}

pub fn dispersion_curves(
    mu_grid: &[f64],
    n_range: std::ops::RangeInclusive<i64>,
    params: &Kdv5Params,
) -> Vec<CurvePoint> {
    let mut out = Vec::new();
    for n in n_range {
        for &mu in mu_grid {
            let d = dispersion(n, mu, params);
            out.push(CurvePoint { mu, n, z: curve(n, mu, 1.0, params), d, negative_signature: d < 0.0 });
        }
    }
    out
}

pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("mu,n,z,d,signature\n");
    for p in points {
        s.push_str(&format!(
            "{:.12e},{},{:.12e},{:.12e},{}\n",
            p.mu,
            p.n,
            p.z,
            p.d,
            if p.negative_signature { -1 } else { 1 }
        ));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Collision {
    pub mu: f64,
    /// Curve with negative signature (`d < 0`) at the crossing.
    pub n_negative: i64,
    pub n_positive: i64,
    pub z: f64,
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Crossings of a negative-signature curve with a positive-signature curve for
/// `μ` in `mu_range`, using scaling `ell`.
pub fn predict_collisions(
    params: &Kdv5Params,
    ell: f64,
    n_range: std::ops::RangeInclusive<i64>,
    mu_range: (f64, f64),
) -> Vec<Collision> {
    let ns: Vec<i64> = n_range.collect();
    let samples = 4000;
    let (lo, hi) = mu_range;
    let grid: Vec<f64> = (0..=samples).map(|k| lo + (hi - lo) * k as f64 / samples as f64).collect();
    let mut out = Vec::new();
    for (ia, &na) in ns.iter().enumerate() {
        for &nb in &ns[ia + 1..] {
            let g = |mu: f64| curve(na, mu, ell, params) - curve(nb, mu, ell, params);
            for w in grid.windows(2) {
                let (ga, gb) = (g(w[0]), g(w[1]));
                if ga == 0.0 || ga.signum() == gb.signum() {
                    continue;
                }
                let mu = bisect(g, w[0], w[1], 1e-14);
                let (da, db) = (params.symbol(na as f64 + mu, ell), params.symbol(nb as f64 + mu, ell));
                if da * db >= 0.0 || da.abs() < 1e-9 || db.abs() < 1e-9 {
                    continue;
                }
                let (n_negative, n_positive) = if da < 0.0 { (na, nb) } else { (nb, na) };
                out.push(Collision { mu, n_negative, n_positive, z: curve(na, mu, ell, params) });
            }
        }
    }
    out.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    out
}

/// Root of `d(-2, μ)`, where the negative index of `A_0` changes.
pub fn index_change_mu(params: &Kdv5Params) -> f64 {
    bisect(|mu| dispersion(-2, mu, params), 1e-6, 0.5, 1e-15)
}

/// Real even `2π`-periodic wave `U(x) = Σ U_k e^{ikx}` with `U_k = U_{-k}` real.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicWave {
    pub params: Kdv5Params,
    /// `U_0, U_1, ..., U_M`.
    pub coeffs: Vec<f64>,
    /// Coefficient of `cos x`, i.e. `2 U_1`.
    pub epsilon: f64,
    pub ell: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl PeriodicWave {
    pub fn modes(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: i64) -> f64 {
        let k = k.unsigned_abs() as usize;
        if k < self.coeffs.len() {
            self.coeffs[k]
        } else {
            0.0
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs[0]
            + 2.0 * self.coeffs.iter().enumerate().skip(1).map(|(k, u)| u * (k as f64 * x).cos()).sum::<f64>()
    }
}

fn residual(params: &Kdv5Params, u: &[f64], ell: f64) -> Vec<f64> {
    let m = params.modes as i64;
    let uk = |k: i64| if k.abs() <= m { u[k.unsigned_abs() as usize] } else { 0.0 };
    let l2 = ell * ell;
    (0..=m)
        .map(|k| {
            let mut r = params.symbol(k as f64, ell) * uk(k);
            for p in -m..=m {
                let q = k - p;
                if q.abs() > m {
                    continue;
                }
                let (pf, qf) = (p as f64, q as f64);
                r += uk(p) * uk(q) * (1.5 - l2 * (0.5 * pf * qf + qf * qf));
            }
            r
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Newton iteration in `(U_0, U_2, ..., U_M, ℓ)` with `U_1 = epsilon / 2` fixed.
pub fn solve_periodic_wave(params: &Kdv5Params, epsilon: f64) -> Result<PeriodicWave> {
    params.check_resonance()?;
    let m = params.modes;
    let mut u = vec![0.0; m + 1];
    let mut ell = 1.0;
    if epsilon == 0.0 {
        return Ok(PeriodicWave { params: *params, coeffs: u, epsilon, ell, residual_norm: 0.0, iterations: 0 });
    }
    u[1] = 0.5 * epsilon;
    let tol_newton = 1e-12 * epsilon.abs();
    let mi = m as i64;
    let mut res = residual(params, &u, ell);
    for it in 0..60 {
        let rn = max_abs(&res);
        if rn <= tol_newton {
            return Ok(PeriodicWave { params: *params, coeffs: u, epsilon, ell, residual_norm: rn, iterations: it });
        }
        let uk = |k: i64| if k.abs() <= mi { u[k.unsigned_abs() as usize] } else { 0.0 };
        let l2 = ell * ell;
        // columns: U_0, U_2..U_M, ℓ
        let jac = Mat::<f64>::from_fn(m + 1, m + 1, |row, col| {
            let k = row as i64;
            if col == m {
                let (kf, mut s) = (k as f64, 0.0);
                for p in -mi..=mi {
                    let q = k - p;
                    if q.abs() > mi {
                        continue;
                    }
                    let (pf, qf) = (p as f64, q as f64);
                    s += uk(p) * uk(q) * (-2.0 * ell * (0.5 * pf * qf + qf * qf));
                }
                return params.symbol_dell(kf, ell) * uk(k) + s;
            }
            let j = if col == 0 { 0 } else { col as i64 + 1 };
            let entry = |j: i64| {
                let p = k - j;
                let mut v = if p == 0 { params.symbol(k as f64, ell) } else { 0.0 };
                if p.abs() <= mi {
                    let (pf, jf) = (p as f64, j as f64);
                    v += uk(p) * (3.0 - l2 * (pf * jf + pf * pf + jf * jf));
                }
                v
            };
            if j == 0 {
                entry(0)
            } else {
                entry(j) + entry(-j)
            }
        });
        let rhs = Mat::<f64>::from_fn(m + 1, 1, |i, _| -res[i]);
        let dx = linalg::solve_real(jac.as_ref(), rhs.as_ref());
        let mut step = 1.0;
        loop {
            let mut trial = u.clone();
            trial[0] += step * dx[(0, 0)];
            for k in 2..=m {
                trial[k] += step * dx[(k - 1, 0)];
            }
            let tell = ell + step * dx[(m, 0)];
            let tres = residual(params, &trial, tell);
            if max_abs(&tres) < rn || step < 1e-4 {
                u = trial;
                ell = tell;
                res = tres;
                break;
            }
            step *= 0.5;
        }
        if !res.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    Err(Error::NewtonDivergence { residual: max_abs(&res), iterations: 60 })
}

#[derive(Debug, Clone)]
pub struct BlochPencil {
    pub mu: f64,
    pub pencil: StarEvenPencil,
}

/// Galerkin matrices of `A_0 = L_μ - c_0 + f'(U)` and `A_1 = (∂_y + iμ)⁻¹`.
pub fn bloch_pencil(wave: &PeriodicWave, mu: f64, tol: &Tolerances) -> Result<BlochPencil> {
    if !(mu > 0.0 && mu <= 0.5) {
        return Err(Error::OutOfRange { what: "mu".into(), value: mu });
    }
    let m = wave.modes() as i64;
    let dim = (2 * m + 1) as usize;
    let (ell, p) = (wave.ell, &wave.params);
    let l2 = ell * ell;
    let a0 = Mat::from_fn(dim, dim, |r, c| {
        let (k, j) = (r as i64 - m, c as i64 - m);
        let q = k - j;
        let jm = j as f64 + mu;
        let mut v = if q == 0 { p.symbol(k as f64 + mu, ell) } else { 0.0 };
        if q.abs() <= m {
            let qf = q as f64;
            v += wave.coeff(q) * (3.0 - l2 * (qf * jm + qf * qf + jm * jm));
        }
        c64::new(v, 0.0)
    });
    let a1 = linalg::diag(
        &(0..dim).map(|r| c64::new(0.0, -1.0 / (r as f64 - m as f64 + mu))).collect::<Vec<_>>(),
    );
    Ok(BlochPencil { mu, pencil: validate_pencil(vec![a0, a1], tol)? })
}

/// Closed-form eigenvalues `λ_n = -i(n+μ) d(n,μ)` of the unperturbed pencil.
pub fn trivial_eigenvalues(mu: f64, params: &Kdv5Params) -> Vec<c64> {
    let m = params.modes as i64;
    (-m..=m).map(|n| c64::new(0.0, curve(n, mu, 1.0, params))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub mu: f64,
    pub max_re: f64,
    /// Eigenvalue attaining `max_re`, as `[re, im]`.
    pub extremal: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct Bubble {
    pub first_unstable: f64,
    pub last_unstable: f64,
    /// Bracket formed by the neighbouring stable grid points.
    pub enclosing: [f64; 2],
    pub max_re: f64,
    pub mu_at_max: f64,
    pub im_at_max: f64,
}

impl Bubble {
    pub fn centre(&self) -> f64 {
        0.5 * (self.enclosing[0] + self.enclosing[1])
    }

    pub fn width(&self) -> f64 {
        self.enclosing[1] - self.enclosing[0]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlochScan {
    pub points: Vec<ScanPoint>,
    pub bubbles: Vec<Bubble>,
    pub tol_unstable: f64,
}

impl BlochScan {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mu,max_re,re,im\n");
        for p in &self.points {
            s.push_str(&format!("{:.12e},{:.6e},{:.12e},{:.12e}\n", p.mu, p.max_re, p.extremal[0], p.extremal[1]));
        }
        s
    }
}

/// Largest real part of the Bloch spectrum at every `μ` of `mu_grid` (sorted),
/// grouped into bubbles where it exceeds `tol_unstable`.
pub fn bloch_scan(wave: &PeriodicWave, mu_grid: &[f64], tol_unstable: f64, tol: &Tolerances) -> Result<BlochScan> {
    let mut grid = mu_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let points: Vec<ScanPoint> = grid
        .par_iter()
        .map(|&mu| {
            let bp = bloch_pencil(wave, mu, tol)?;
            let ev = bp.pencil.eigenvalues()?;
            let e = ev.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re)).unwrap();
            Ok(ScanPoint { mu, max_re: e.re.max(0.0), extremal: [e.re, e.im] })
        })
        .collect::<Result<_>>()?;
    let mut bubbles = Vec::new();
    let mut k = 0;
    while k < points.len() {
        if points[k].max_re <= tol_unstable {
            k += 1;
            continue;
        }
        let start = k;
        while k < points.len() && points[k].max_re > tol_unstable {
            k += 1;
        }
        let run = &points[start..k];
        let best = run.iter().max_by(|a, b| a.max_re.total_cmp(&b.max_re)).unwrap();
        bubbles.push(Bubble {
            first_unstable: run[0].mu,
            last_unstable: run[run.len() - 1].mu,
            enclosing: [
                if start > 0 { points[start - 1].mu } else { run[0].mu },
                if k < points.len() { points[k].mu } else { run[run.len() - 1].mu },
            ],
            max_re: best.max_re,
            mu_at_max: best.mu,
            im_at_max: best.extremal[1],
        });
    }
    Ok(BlochScan { points, bubbles, tol_unstable })
}

/// Uniform grid of `n` points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Negative index of `A_0(μ)`, bisected on `[lo, hi]` to a bracket of width `width`
/// around the point where it changes.
pub fn bracket_index_change(wave: &PeriodicWave, lo: f64, hi: f64, width: f64, tol: &Tolerances) -> Result<(f64, f64)> {
    let count = |mu: f64| -> Result<usize> {
        let bp = bloch_pencil(wave, mu, tol)?;
        Ok(crate::hki::negative_index(bp.pencil.coeff(0), 0.0)?.count)
    };
    let (mut a, mut b) = (lo, hi);
    let ca = count(a)?;
    if count(b)? == ca {
        return Err(Error::InvalidInput { detail: "index does not change on the interval".into() });
    }
    while b - a > width {
        let m = 0.5 * (a + b);
        if count(m)? == ca {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((a, b))
}

#[derive(Debug, Clone)]
pub struct KdvKrein {
    pub subspace: Subspace,
    pub curves: KreinCurveSet,
}

/// Krein eigenvalue branches, zeros and poles of the Bloch pencil at `mu` on `z_grid`
/// (refined around poles), with `S` the negative space of `A_0(μ)`.
pub fn kdv5_krein_curves(wave: &PeriodicWave, mu: f64, z_grid: &[f64], tol: &Tolerances) -> Result<KdvKrein> {
    let bp = bloch_pencil(wave, mu, tol)?;
    let s = krein::select_subspace(bp.pencil.coeff(0), tol)?;
    let curves = krein::krein_curves(&bp.pencil, &s, z_grid, tol)?;
    Ok(KdvKrein { subspace: s, curves })
}

/// `A_0` of the Bloch pencil as a dense complex matrix (for diagnostics).
pub fn bloch_a0(wave: &PeriodicWave, mu: f64, tol: &Tolerances) -> Result<CMat> {
    Ok(bloch_pencil(wave, mu, tol)?.pencil.coeff(0).to_owned())
}
