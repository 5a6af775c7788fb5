//! Suspension bridge travelling waves: primary pulses and multi-pulses of
//! `u'''' + c² u'' + eᵘ - 1 = 0`, the spectra of their linearisation, and the
//! small-eigenvalue Krein matrix.

use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hki::{self, CensusCheck, IndexReport};
use crate::krein::{self, SmallZExpansion, Subspace};
use crate::linalg::{self, CMat};
use crate::pencil::{polynomial_spectrum, validate_pencil, Census, PolyEigenvalue, SpectrumReport, StarEvenPencil};
use crate::tol::Tolerances;

pub const DEFAULT_POINTS: usize = 512;
/// `e^{-TAIL} ≈ 1e-10`: tails are cut `TAIL/α` from the outermost peak.
pub const TAIL: f64 = 23.03;
pub const RESIDUAL_MAX: f64 = 1e-10;
pub const BAND_MARGIN: f64 = 0.98;
const NEWTON_TOL: f64 = 1e-11;
const NEWTON_MAX_ITER: usize = 80;
/// Ansatz amplitudes, tried outward from -3.
const AMPLITUDES: [f64; 8] = [-3.0, -3.5, -2.5, -4.0, -2.0, -4.5, -1.5, -5.0];

const W1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const W2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const W4: [f64; 7] = [-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0];

/// Uniform periodic grid `x_i = -L + i h`, `h = 2L/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeGrid {
    pub n: usize,
    pub half_length: f64,
}

impl BridgeGrid {
    pub fn new(n: usize, half_length: f64) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::OutOfRange { what: "grid points N (even, at least 16)".into(), value: n as f64 });
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::OutOfRange { what: "half-length L".into(), value: half_length });
        }
        Ok(Self { n, half_length })
    }

    /// Smallest even grid with spacing `h` and half-length at least `half_length`.
    pub fn with_spacing(h: f64, half_length: f64) -> Result<Self> {
        let mut n = (2.0 * half_length / h - 1e-9).ceil() as usize;
        n += n % 2;
        Self::new(n, n as f64 * h / 2.0)
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_length + self.h() * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    fn mirror(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    fn apply(&self, u: &[f64], w: &[f64], scale: f64) -> Vec<f64> {
        let n = self.n as isize;
        let r = (w.len() / 2) as isize;
        (0..n)
            .map(|i| {
                let s: f64 = w.iter().enumerate().map(|(k, wk)| wk * u[(i + k as isize - r).rem_euclid(n) as usize]).sum();
                s * scale
            })
            .collect()
    }

    fn matrix(&self, w: &[f64], scale: f64) -> Mat<f64> {
        let n = self.n as isize;
        let r = (w.len() / 2) as isize;
        let mut m = Mat::<f64>::zeros(self.n, self.n);
        for i in 0..n {
            for (k, wk) in w.iter().enumerate() {
                let j = (i + k as isize - r).rem_euclid(n) as usize;
                m[(i as usize, j)] += wk * scale;
            }
        }
        m
    }

    pub fn d1(&self, u: &[f64]) -> Vec<f64> {
        self.apply(u, &W1, 1.0 / (12.0 * self.h()))
    }

    pub fn d2(&self, u: &[f64]) -> Vec<f64> {
        self.apply(u, &W2, 1.0 / (12.0 * self.h().powi(2)))
    }

    pub fn d4(&self, u: &[f64]) -> Vec<f64> {
        self.apply(u, &W4, 1.0 / (6.0 * self.h().powi(4)))
    }

    pub fn d1_matrix(&self) -> Mat<f64> {
        self.matrix(&W1, 1.0 / (12.0 * self.h()))
    }

    pub fn d2_matrix(&self) -> Mat<f64> {
        self.matrix(&W2, 1.0 / (12.0 * self.h().powi(2)))
    }

    pub fn d4_matrix(&self) -> Mat<f64> {
        self.matrix(&W4, 1.0 / (6.0 * self.h().powi(4)))
    }

    /// Quadrature `h Σ uᵢ vᵢ`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.h() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Decay and oscillation rates of `μ⁴ + c²μ² + 1 = 0`, roots `±α ± iβ`.
pub fn linear_rates(c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0 && c < 2f64.sqrt()) {
        return Err(Error::OutOfRange { what: "wave speed c (0 < c < √2)".into(), value: c });
    }
    Ok(((2.0 - c * c).sqrt() / 2.0, (2.0 + c * c).sqrt() / 2.0))
}

/// Left edge of the essential spectrum of `A_0`.
pub fn a0_band_edge(c: f64) -> f64 {
    1.0 - c.powi(4) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EssentialBand {
    pub c: f64,
    /// Essential spectrum of the quadratic pencil is `{ir : |r| ≥ rho}`.
    pub rho: f64,
    pub r_min: f64,
}

impl EssentialBand {
    pub fn contains(&self, lambda: c64) -> bool {
        lambda.im.abs() >= BAND_MARGIN * self.rho && lambda.re.abs() <= 1e-6 * lambda.norm().max(1.0)
    }
}

/// `ρ = min_r (c r + √(1 + r⁴))` by golden section on `[-10, 0]`.
pub fn essential_band(c: f64) -> Result<EssentialBand> {
    linear_rates(c)?;
    let f = |r: f64| c * r + (1.0 + r.powi(4)).sqrt();
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-10.0f64, 0.0f64);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-12 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let r = 0.5 * (a + b);
    Ok(EssentialBand { c, rho: f(r), r_min: r })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PulseKind {
    Primary,
    Multi { m: u32, ks: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseProfile {
    pub grid: BridgeGrid,
    pub c: f64,
    pub u: Vec<f64>,
    pub residual_norm: f64,
    pub alpha: f64,
    pub beta: f64,
    pub peaks: Vec<f64>,
    pub kind: PulseKind,
    pub iterations: usize,
}

impl PulseProfile {
    pub fn ux_norm2(&self) -> f64 {
        let ux = self.grid.d1(&self.u);
        self.grid.inner(&ux, &ux)
    }

    pub fn momentum(&self) -> f64 {
        self.c * self.ux_norm2()
    }

    pub fn min(&self) -> f64 {
        self.u.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Peak-to-peak distances.
    pub fn distances(&self) -> Vec<f64> {
        self.peaks.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Largest `|u(x) - u(-x)|` on the grid.
    pub fn asymmetry(&self) -> f64 {
        (0..self.grid.n).map(|i| (self.u[i] - self.u[self.grid.mirror(i)]).abs()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput { detail: format!("profile json: {e}") })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,u\n");
        for (i, u) in self.u.iter().enumerate() {
            s.push_str(&format!("{:e},{:e}\n", self.grid.x(i), u));
        }
        s
    }
}

/// Trigonometric interpolant of a periodic sample, zero outside the period.
pub struct TrigInterpolant {
    grid: BridgeGrid,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TrigInterpolant {
    pub fn new(grid: BridgeGrid, u: &[f64]) -> Self {
        let n = grid.n;
        let half = n / 2;
        let mut re = vec![0.0; half + 1];
        let mut im = vec![0.0; half + 1];
        for k in 0..=half {
            let (mut a, mut b) = (0.0, 0.0);
            for (i, ui) in u.iter().enumerate() {
                let th = 2.0 * PI * (k * i % n) as f64 / n as f64;
                a += ui * th.cos();
                b -= ui * th.sin();
            }
            re[k] = a / n as f64;
            im[k] = b / n as f64;
        }
        Self { grid, re, im }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let l = self.grid.half_length;
        if x.abs() >= l {
            return 0.0;
        }
        let n = self.grid.n;
        let half = n / 2;
        let t = (x + l) / self.grid.h();
        let w = 2.0 * PI * t / n as f64;
        let mut s = self.re[0];
        for k in 1..half {
            let th = w * k as f64;
            s += 2.0 * (self.re[k] * th.cos() - self.im[k] * th.sin());
        }
        s + self.re[half] * (PI * t).cos()
    }
}

fn exp_capped(u: f64) -> f64 {
    u.min(50.0).exp()
}

/// `D4 u + c² D2 u + eᵘ - 1`.
pub fn residual(grid: &BridgeGrid, c: f64, u: &[f64]) -> Vec<f64> {
    let a = grid.d4(u);
    let b = grid.d2(u);
    (0..grid.n).map(|i| a[i] + c * c * b[i] + exp_capped(u[i]) - 1.0).collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Newton<'a> {
    grid: &'a BridgeGrid,
    c: f64,
    base: Mat<f64>,
}

impl<'a> Newton<'a> {
    fn new(grid: &'a BridgeGrid, c: f64) -> Self {
        let base = grid.d4_matrix() + grid.d2_matrix() * faer::Scale(c * c);
        Self { grid, c, base }
    }

    /// Bordered step: `J d + φ σ = -F`, `φᵀ d = 0` with `φ = D1 u` fixing the translate.
    fn step(&self, u: &[f64], f: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n;
        let phi = self.grid.d1(u);
        let b = Mat::from_fn(n + 1, n + 1, |i, j| {
            if i < n && j < n {
                self.base[(i, j)] + if i == j { exp_capped(u[i]) } else { 0.0 }
            } else if i < n {
                phi[i]
            } else if j < n {
                phi[j]
            } else {
                0.0
            }
        });
        let rhs = Mat::from_fn(n + 1, 1, |i, _| if i < n { -f[i] } else { 0.0 });
        let x = linalg::solve_real(b.as_ref(), rhs.as_ref());
        let d: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NewtonDivergence { residual: sup(f), iterations: 0 });
        }
        Ok(d)
    }

    fn solve(&self, mut u: Vec<f64>, max_iter: usize) -> Result<(Vec<f64>, f64, usize)> {
        let mut r = f64::INFINITY;
        for it in 0..max_iter {
            let f = residual(self.grid, self.c, &u);
            r = sup(&f);
            if r < NEWTON_TOL {
                return Ok((u, r, it));
            }
            let d = self.step(&u, &f).map_err(|_| Error::NewtonDivergence { residual: r, iterations: it })?;
            let f0 = l2(&f);
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let rt = l2(&residual(self.grid, self.c, &trial));
                if rt < (1.0 - 1e-4 * t) * f0 || t < 1e-4 {
                    u = trial;
                    break;
                }
                t *= 0.5;
            }
        }
        let f = residual(self.grid, self.c, &u);
        r = r.min(sup(&f));
        if r < NEWTON_TOL {
            return Ok((u, r, max_iter));
        }
        Err(Error::NewtonDivergence { residual: r, iterations: max_iter })
    }
}

/// Local minima below `threshold`, refined by a parabola through three samples.
pub fn find_peaks(grid: &BridgeGrid, u: &[f64], threshold: f64) -> Vec<f64> {
    let n = grid.n;
    let h = grid.h();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b, c) = (u[(i + n - 1) % n], u[i], u[(i + 1) % n]);
        if b < threshold && b < a && b <= c {
            let den = a - 2.0 * b + c;
            let off = if den > 0.0 { 0.5 * (a - c) / den } else { 0.0 };
            out.push(grid.x(i) + off * h);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn symmetrize(grid: &BridgeGrid, u: &[f64]) -> Vec<f64> {
    (0..grid.n).map(|i| 0.5 * (u[i] + u[grid.mirror(i)])).collect()
}

fn recentre(grid: &BridgeGrid, u: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let imin = (0..n).min_by(|&a, &b| u[a].total_cmp(&u[b])).unwrap();
    let shift = (imin + n - n / 2) % n;
    (0..n).map(|i| u[(i + shift) % n]).collect()
}

/// Converged, recentred and even primary pulse from a starting profile.
fn finish_primary(newton: &Newton<'_>, u: Vec<f64>, iterations: usize) -> Result<PulseProfile> {
    let grid = newton.grid;
    let sup_norm = sup(&u);
    if sup_norm < 1e-6 {
        return Err(Error::WrongBranch { sup_norm });
    }
    let u = symmetrize(grid, &recentre(grid, &u));
    let (u, _, extra) = newton.solve(u, NEWTON_MAX_ITER)?;
    let u = symmetrize(grid, &u);
    let res = sup(&residual(grid, newton.c, &u));
    let umin = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let peaks = find_peaks(grid, &u, 0.5 * umin);
    if peaks.len() != 1 {
        return Err(Error::PulseCollapse { found: peaks.len(), expected: 1 });
    }
    let (alpha, beta) = linear_rates(newton.c)?;
    Ok(PulseProfile {
        grid: *grid,
        c: newton.c,
        u,
        residual_norm: res,
        alpha,
        beta,
        peaks,
        kind: PulseKind::Primary,
        iterations: iterations + extra,
    })
}

fn ansatz(grid: &BridgeGrid, c: f64, a: f64) -> Result<Vec<f64>> {
    let (alpha, beta) = linear_rates(c)?;
    Ok(grid.points().iter().map(|&x| a * (-alpha * x.abs()).exp() * (beta * x).cos()).collect())
}

fn primary_from_ansatz(grid: &BridgeGrid, c: f64) -> Result<PulseProfile> {
    let newton = Newton::new(grid, c);
    let mut last = Error::NewtonDivergence { residual: f64::INFINITY, iterations: 0 };
    for a in AMPLITUDES {
        let attempt = newton
            .solve(ansatz(grid, c, a)?, NEWTON_MAX_ITER)
            .and_then(|(u, _, it)| finish_primary(&newton, u, it));
        match attempt {
            Ok(p) => return Ok(p),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Continues a converged pulse to speed `c`.
pub fn continue_pulse(from: &PulseProfile, c: f64) -> Result<PulseProfile> {
    linear_rates(c)?;
    let steps = ((c - from.c).abs() / 0.01).ceil().max(1.0) as usize;
    let mut u = from.u.clone();
    let mut total = 0;
    for s in 1..=steps {
        let cs = from.c + (c - from.c) * s as f64 / steps as f64;
        let (v, _, it) = Newton::new(&from.grid, cs).solve(u, NEWTON_MAX_ITER)?;
        u = v;
        total += it;
    }
    finish_primary(&Newton::new(&from.grid, c), u, total)
}

/// Primary pulse at speed `c`: Newton from `a e^{-α|x|} cos(βx)` with `a` chosen by a
/// coarse residual scan, falling back to continuation from `c = 1.3`.
pub fn solve_primary_pulse(c: f64, grid: &BridgeGrid) -> Result<PulseProfile> {
    linear_rates(c)?;
    match primary_from_ansatz(grid, c) {
        Ok(p) => Ok(p),
        Err(e) if (c - 1.3).abs() > 1e-12 => {
            let anchor = primary_from_ansatz(grid, 1.3).map_err(|_| e)?;
            continue_pulse(&anchor, c)
        }
        Err(e) => Err(e),
    }
}

/// Grid of `n` points on which the primary pulse tails fall below `1e-10`.
pub fn primary_grid(c: f64, n: usize) -> Result<BridgeGrid> {
    let (alpha, _) = linear_rates(c)?;
    BridgeGrid::new(n, TAIL / alpha)
}

#[derive(Debug, Clone, Serialize)]
pub struct PulseFamily {
    pub c_grid: Vec<f64>,
    #[serde(skip)]
    pub profiles: Vec<PulseProfile>,
    /// `c ‖∂ₓU‖²`.
    pub momentum: Vec<f64>,
    /// `d''(c) = -∂_c(c ‖∂ₓU‖²)` on interior points.
    pub d2: Vec<Option<f64>>,
}

impl PulseFamily {
    /// Interior member nearest the middle of the range.
    pub fn reference(&self) -> Option<usize> {
        let n = self.c_grid.len();
        if n < 3 {
            return None;
        }
        Some((n / 2).clamp(1, n - 2))
    }

    pub fn d2_at(&self, i: usize) -> Option<f64> {
        self.d2.get(i).copied().flatten()
    }

    /// `∂_c U` at an interior member by centred differences.
    pub fn dc_profile(&self, i: usize) -> Option<Vec<f64>> {
        if i == 0 || i + 1 >= self.profiles.len() {
            return None;
        }
        let (a, b) = (&self.profiles[i - 1], &self.profiles[i + 1]);
        let dc = self.c_grid[i + 1] - self.c_grid[i - 1];
        Some(a.u.iter().zip(&b.u).map(|(x, y)| (y - x) / dc).collect())
    }

    /// Largest second difference of the momentum relative to its size.
    pub fn momentum_jump(&self) -> f64 {
        let m = &self.momentum;
        let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        m.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs() / scale).fold(0.0, f64::max)
    }
}

/// Continuation in `c` along an increasing grid, previous profile as next guess.
pub fn build_family(c_grid: &[f64], grid: &BridgeGrid) -> Result<PulseFamily> {
    if c_grid.is_empty() || c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput { detail: "c grid must be non-empty and increasing".into() });
    }
    let mut profiles: Vec<PulseProfile> = Vec::with_capacity(c_grid.len());
    for &c in c_grid {
        let p = match profiles.last() {
            Some(prev) => continue_pulse(prev, c).or_else(|_| solve_primary_pulse(c, grid))?,
            None => solve_primary_pulse(c, grid)?,
        };
        profiles.push(p);
    }
    let momentum: Vec<f64> = profiles.iter().map(|p| p.momentum()).collect();
    let n = c_grid.len();
    let d2 = (0..n)
        .map(|i| {
            (i > 0 && i + 1 < n)
                .then(|| -(momentum[i + 1] - momentum[i - 1]) / (c_grid[i + 1] - c_grid[i - 1]))
        })
        .collect();
    Ok(PulseFamily { c_grid: c_grid.to_vec(), profiles, momentum, d2 })
}

/// Half peak distance `X = (π/β) 2m + k π/(2β) + X̃`.
pub fn separation(m: u32, k: u32, beta: f64, x_tilde: f64) -> f64 {
    PI / beta * (2 * m) as f64 + k as f64 * PI / (2.0 * beta) + x_tilde
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipulseOptions {
    pub points: usize,
    pub m_floor: u32,
}

impl Default for MultipulseOptions {
    fn default() -> Self {
        Self { points: DEFAULT_POINTS, m_floor: 1 }
    }
}

fn train_grid(alpha: f64, extent: f64, points: usize) -> Result<BridgeGrid> {
    BridgeGrid::new(points, TAIL / alpha + 0.5 * extent)
}

fn train_guess(grid: &BridgeGrid, primary: &TrigInterpolant, centres: &[f64]) -> Vec<f64> {
    grid.points().iter().map(|&x| centres.iter().map(|p| primary.eval(x - p)).sum()).collect()
}

fn centres(xs: &[f64]) -> Vec<f64> {
    let extent: f64 = xs.iter().map(|x| 2.0 * x).sum();
    let mut out = vec![-0.5 * extent];
    for x in xs {
        out.push(out.last().unwrap() + 2.0 * x);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub x_tilde: f64,
    /// `(X̃, |first Newton correction|)` over the scan.
    pub scan: Vec<[f64; 2]>,
    /// Local minima of the scan with the sign of the small `A_0` eigenvalue there.
    pub minima: Vec<[f64; 2]>,
}

const CALIBRATION_M: u32 = 1;
const CALIBRATION_SAMPLES: usize = 64;

/// Calibrates `X̃` on the double pulse with `m = 1`, `k = 0`: scans `X̃ ∈ [0, π/β)` for
/// the smallest first Newton correction, converges each local minimum, keeps the one
/// whose small `A_0` eigenvalue is positive and re-reads `X̃` from its peak distance.
pub fn calibrate_offset(primary: &PulseProfile, points: usize) -> Result<Calibration> {
    let (c, alpha, beta) = (primary.c, primary.alpha, primary.beta);
    let interp = TrigInterpolant::new(primary.grid, &primary.u);
    let period = PI / beta;
    let setup = |xt: f64| -> Result<(BridgeGrid, Vec<f64>)> {
        let x = separation(CALIBRATION_M, 0, beta, xt);
        let grid = train_grid(alpha, 2.0 * x, points)?;
        let g = train_guess(&grid, &interp, &centres(&[x]));
        Ok((grid, g))
    };
    let mut scan = Vec::with_capacity(CALIBRATION_SAMPLES);
    for s in 0..CALIBRATION_SAMPLES {
        let xt = period * s as f64 / CALIBRATION_SAMPLES as f64;
        let (grid, g) = setup(xt)?;
        let newton = Newton::new(&grid, c);
        let f = residual(&grid, c, &g);
        let d = newton.step(&g, &f)?;
        scan.push([xt, l2(&d) * grid.h().sqrt()]);
    }
    let k = scan.len();
    let mut local: Vec<usize> = (0..k)
        .filter(|&i| scan[i][1] < scan[(i + k - 1) % k][1] && scan[i][1] <= scan[(i + 1) % k][1])
        .collect();
    local.sort_by(|&a, &b| scan[a][1].total_cmp(&scan[b][1]));
    let mut minima = Vec::new();
    for i in local {
        let (grid, g) = setup(scan[i][0])?;
        let Ok((u, _, _)) = Newton::new(&grid, c).solve(g, NEWTON_MAX_ITER) else { continue };
        let peaks = find_peaks(&grid, &u, 0.5 * primary.min());
        if peaks.len() != 2 {
            continue;
        }
        let prof = PulseProfile {
            grid,
            c,
            u,
            residual_norm: 0.0,
            alpha,
            beta,
            peaks: peaks.clone(),
            kind: PulseKind::Multi { m: CALIBRATION_M, ks: vec![0] },
            iterations: 0,
        };
        let spec = a0_spectrum(&prof)?;
        let nu = spec.small.first().copied().unwrap_or(0.0);
        minima.push([scan[i][0], nu]);
        if nu > 0.0 {
            let x_meas = 0.5 * (peaks[1] - peaks[0]);
            let x_tilde = x_meas - separation(CALIBRATION_M, 0, beta, 0.0);
            return Ok(Calibration { x_tilde, scan, minima });
        }
    }
    Err(Error::InvalidInput { detail: format!("offset calibration failed at c = {c}: no double pulse with a positive small eigenvalue") })
}

/// `n`-pulse with half distances `X_j = (π/β) 2m + k_j π/(2β) + X̃`, Newton-refined from
/// a sum of translated primaries.
pub fn construct_multipulse(
    primary: &PulseProfile,
    m: u32,
    ks: &[u32],
    x_tilde: f64,
    opts: &MultipulseOptions,
) -> Result<PulseProfile> {
    if ks.is_empty() {
        return Ok(primary.clone());
    }
    if m < opts.m_floor {
        return Err(Error::OutOfRange { what: format!("m (floor {})", opts.m_floor), value: m as f64 });
    }
    if !ks.iter().any(|&k| k <= 1) {
        return Err(Error::InvalidInput { detail: "at least one k_j must be 0 or 1".into() });
    }
    let (c, alpha, beta) = (primary.c, primary.alpha, primary.beta);
    let xs: Vec<f64> = ks.iter().map(|&k| separation(m, k, beta, x_tilde)).collect();
    let extent: f64 = xs.iter().map(|x| 2.0 * x).sum();
    let grid = train_grid(alpha, extent, opts.points)?;
    let interp = TrigInterpolant::new(primary.grid, &primary.u);
    let train = Train { grid, c, interp: &interp, newton: Newton::new(&grid, c) };
    let (u, res, iterations) = train.solve(xs)?;
    let peaks = find_peaks(&grid, &u, 0.5 * primary.min());
    if peaks.len() != ks.len() + 1 {
        return Err(Error::PulseCollapse { found: peaks.len(), expected: ks.len() + 1 });
    }
    Ok(PulseProfile {
        grid,
        c,
        u,
        residual_norm: res,
        alpha,
        beta,
        peaks,
        kind: PulseKind::Multi { m, ks: ks.to_vec() },
        iterations,
    })
}

/// Pulse train solver: each translate is pinned by `⟨ψ_j, u - g⟩ = 0` with a multiplier
/// `σ_j` (so `F(u) + Σ σ_j ψ_j = 0`), and the separations are moved until the
/// multipliers agree. The pinned system stays well conditioned when the interaction
/// eigenvalue is tiny, unlike plain Newton.
struct Train<'a> {
    grid: BridgeGrid,
    c: f64,
    interp: &'a TrigInterpolant,
    newton: Newton<'a>,
}

impl Train<'_> {
    fn translates(&self, centres: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let xs = self.grid.points();
        let mut g = vec![0.0; self.grid.n];
        let mut psi = Vec::with_capacity(centres.len());
        for p in centres {
            let t: Vec<f64> = xs.iter().map(|x| self.interp.eval(x - p)).collect();
            g.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
            psi.push(self.grid.d1(&t));
        }
        (g, psi)
    }

    fn pinned(&self, centres: &[f64], start: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.grid.n;
        let k = centres.len();
        let (g, psi) = self.translates(centres);
        let mut u = start.map(|s| s.to_vec()).unwrap_or_else(|| g.clone());
        let mut sigma = vec![0.0; k];
        let eval = |u: &[f64], sigma: &[f64]| -> Vec<f64> {
            let mut f = residual(&self.grid, self.c, u);
            for (s, p) in sigma.iter().zip(&psi) {
                f.iter_mut().zip(p).for_each(|(a, b)| *a += s * b);
            }
            f.extend(psi.iter().map(|p| p.iter().zip(u.iter().zip(&g)).map(|(a, (v, w))| a * (v - w)).sum::<f64>()));
            f
        };
        let mut best = f64::INFINITY;
        for _ in 0..40 {
            let f = eval(&u, &sigma);
            let r = sup(&f);
            if r < 1e-13 || (r < 1e-9 && r >= 0.5 * best) {
                return Ok((u, sigma));
            }
            best = best.min(r);
            let b = Mat::from_fn(n + k, n + k, |i, j| match (i < n, j < n) {
                (true, true) => self.newton.base[(i, j)] + if i == j { exp_capped(u[i]) } else { 0.0 },
                (true, false) => psi[j - n][i],
                (false, true) => psi[i - n][j],
                (false, false) => 0.0,
            });
            let rhs = Mat::from_fn(n + k, 1, |i, _| -f[i]);
            let x = linalg::solve_real(b.as_ref(), rhs.as_ref());
            if (0..n + k).any(|i| !x[(i, 0)].is_finite()) {
                return Err(Error::NewtonDivergence { residual: r, iterations: 0 });
            }
            let f0 = l2(&f);
            let mut t = 1.0;
            loop {
                let tu: Vec<f64> = (0..n).map(|i| u[i] + t * x[(i, 0)]).collect();
                let ts: Vec<f64> = (0..k).map(|j| sigma[j] + t * x[(n + j, 0)]).collect();
                if l2(&eval(&tu, &ts)) < (1.0 - 1e-4 * t) * f0 || t < 1e-4 {
                    u = tu;
                    sigma = ts;
                    break;
                }
                t *= 0.5;
            }
        }
        let r = sup(&eval(&u, &sigma));
        if r < 1e-9 {
            return Ok((u, sigma));
        }
        Err(Error::NewtonDivergence { residual: r, iterations: 40 })
    }

    fn imbalance(sigma: &[f64]) -> Vec<f64> {
        sigma.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Returns the converged profile, its residual and the outer iteration count.
    fn solve(&self, mut xs: Vec<f64>) -> Result<(Vec<f64>, f64, usize)> {
        let q = xs.len();
        let step_cap = PI / (4.0 * self.interp_beta());
        let (mut u, mut sigma) = self.pinned(&centres(&xs), None)?;
        let mut outer = 0;
        for it in 0..30 {
            outer = it;
            let f = Self::imbalance(&sigma);
            let fmax = sup(&f);
            if fmax < 1e-13 {
                break;
            }
            let eta = 1e-3;
            let mut jac = Mat::<f64>::zeros(q, q);
            for j in 0..q {
                let mut xp = xs.clone();
                xp[j] += eta;
                let (_, sp) = self.pinned(&centres(&xp), Some(&u))?;
                let fp = Self::imbalance(&sp);
                for i in 0..q {
                    jac[(i, j)] = (fp[i] - f[i]) / eta;
                }
            }
            let rhs = Mat::from_fn(q, 1, |i, _| -f[i]);
            let dx = linalg::solve_real(jac.as_ref(), rhs.as_ref());
            let mut dmax = (0..q).map(|i| dx[(i, 0)].abs()).fold(0.0, f64::max);
            if !dmax.is_finite() {
                return Err(Error::NewtonDivergence { residual: fmax, iterations: it });
            }
            let shrink = if dmax > step_cap { step_cap / dmax } else { 1.0 };
            for i in 0..q {
                xs[i] += shrink * dx[(i, 0)];
            }
            dmax *= shrink;
            let (nu, ns) = self.pinned(&centres(&xs), Some(&u))?;
            u = nu;
            sigma = ns;
            if dmax < 1e-10 {
                break;
            }
        }
        let res = sup(&residual(&self.grid, self.c, &u));
        if res < NEWTON_TOL {
            return Ok((u, res, outer));
        }
        match self.newton.solve(u.clone(), 8) {
            Ok((v, r, _)) => Ok((v, r, outer)),
            Err(_) if res <= RESIDUAL_MAX => Ok((u, res, outer)),
            Err(_) => Err(Error::NewtonDivergence { residual: res, iterations: outer }),
        }
    }

    fn interp_beta(&self) -> f64 {
        (2.0 + self.c * self.c).sqrt() / 2.0
    }
}

pub fn a0_matrix(profile: &PulseProfile) -> Mat<f64> {
    let g = &profile.grid;
    let mut a = g.d4_matrix() + g.d2_matrix() * faer::Scale(profile.c * profile.c);
    for i in 0..g.n {
        a[(i, i)] += profile.u[i].exp();
    }
    a
}

#[derive(Debug, Clone, Serialize)]
pub struct A0Spectrum {
    /// All eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalue of the translation mode `∂ₓU`.
    pub kernel: f64,
    /// Other eigenvalues with `|ν| < delta_report`, by increasing modulus.
    pub small: Vec<f64>,
    /// Negative eigenvalues outside the small window.
    pub large_negative: usize,
    pub delta_report: f64,
    /// Smallest eigenvalue above the small window.
    pub band_edge: f64,
    pub band_edge_analytic: f64,
    #[serde(skip)]
    pub vectors: Mat<f64>,
    #[serde(skip)]
    kernel_index: usize,
    #[serde(skip)]
    small_index: Vec<usize>,
}

impl A0Spectrum {
    /// `n(A_0)`: every negative eigenvalue except the translation mode.
    pub fn negative_count(&self) -> usize {
        self.large_negative + self.small.iter().filter(|v| **v < 0.0).count()
    }

    pub fn kernel_index(&self) -> usize {
        self.kernel_index
    }

    pub fn small_indices(&self) -> &[usize] {
        &self.small_index
    }
}

/// Small-eigenvalue window `10 e^{-2α X_min}` (capped at 0.1), or `1e-3` for a primary pulse.
pub fn delta_report(profile: &PulseProfile) -> f64 {
    let d = profile.distances();
    if d.is_empty() {
        return 1e-3;
    }
    let xmin = 0.5 * d.iter().cloned().fold(f64::INFINITY, f64::min);
    (10.0 * (-2.0 * profile.alpha * xmin).exp()).min(0.1)
}

pub fn a0_spectrum(profile: &PulseProfile) -> Result<A0Spectrum> {
    let g = &profile.grid;
    let (vals, vecs) = linalg::eigh_real(a0_matrix(profile).as_ref())?;
    let phi = g.d1(&profile.u);
    let pn = l2(&phi).max(f64::MIN_POSITIVE);
    let overlap = |k: usize| (0..g.n).map(|i| vecs[(i, k)] * phi[i]).sum::<f64>().abs() / pn;
    let kernel_index = (0..vals.len()).max_by(|&a, &b| overlap(a).total_cmp(&overlap(b))).unwrap();
    let delta = delta_report(profile);
    let mut small_index: Vec<usize> = (0..vals.len()).filter(|&k| k != kernel_index && vals[k].abs() < delta).collect();
    small_index.sort_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs()));
    let large_negative = (0..vals.len()).filter(|&k| k != kernel_index && vals[k] <= -delta).count();
    let band_edge = vals.iter().cloned().find(|&v| v >= delta).unwrap_or(f64::NAN);
    Ok(A0Spectrum {
        kernel: vals[kernel_index],
        small: small_index.iter().map(|&k| vals[k]).collect(),
        large_negative,
        delta_report: delta,
        band_edge,
        band_edge_analytic: a0_band_edge(profile.c),
        eigenvalues: vals,
        vectors: vecs,
        kernel_index,
        small_index,
    })
}

/// `P(λ) = I λ² - 2c D1 λ + A_0(U)`.
pub fn bridge_pencil(profile: &PulseProfile, tol: &Tolerances) -> Result<StarEvenPencil> {
    let a0 = linalg::to_complex(a0_matrix(profile).as_ref());
    let a1 = linalg::to_complex((profile.grid.d1_matrix() * faer::Scale(-2.0 * profile.c)).as_ref());
    validate_pencil(vec![a0, a1, linalg::identity(profile.grid.n)], tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct BridgeSpectrum {
    pub c: f64,
    pub band: EssentialBand,
    pub kernel_tol: f64,
    pub report: SpectrumReport,
    /// Census over point spectrum: band and kernel eigenvalues removed.
    pub census: Census,
}

impl BridgeSpectrum {
    pub fn is_band(&self, e: &PolyEigenvalue) -> bool {
        self.band.contains(e.lambda)
    }

    pub fn is_kernel(&self, e: &PolyEigenvalue) -> bool {
        e.lambda.norm() <= self.kernel_tol
    }

    /// Point eigenvalues outside the band and the kernel, by increasing modulus.
    pub fn point_spectrum(&self) -> Vec<&PolyEigenvalue> {
        let mut v: Vec<&PolyEigenvalue> =
            self.report.eigenvalues.iter().filter(|e| !self.is_band(e) && !self.is_kernel(e)).collect();
        v.sort_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm()));
        v
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im,multiplicity,krein_index,class\n");
        for e in &self.report.eigenvalues {
            let class = if self.is_kernel(e) {
                "kernel"
            } else if self.is_band(e) {
                "band"
            } else {
                "point"
            };
            let idx = e.krein_index.map(|k| k.to_string()).unwrap_or_default();
            s.push_str(&format!("{:e},{:e},{},{},{}\n", e.lambda.re, e.lambda.im, e.algebraic_multiplicity, idx, class));
        }
        s
    }
}

/// Companion solve of the quadratic pencil with the essential band and the kernel
/// removed from the census.
pub fn quadratic_spectrum(profile: &PulseProfile, tol: &Tolerances) -> Result<BridgeSpectrum> {
    let p = bridge_pencil(profile, tol)?;
    let report = polynomial_spectrum(&p, tol)?;
    let band = essential_band(profile.c)?;
    let census = report.census_with(tol.kernel, |e| band.contains(e.lambda));
    Ok(BridgeSpectrum { c: profile.c, band, kernel_tol: tol.kernel, report, census })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteractionPrediction {
    pub nu: f64,
    /// `λ⁺`; the pair is `±λ⁺`.
    #[serde(serialize_with = "crate::pencil::ser_c64")]
    pub lambda: c64,
    /// `Some(true)` for an imaginary pair of negative signature.
    pub negative_signature: Option<bool>,
}

/// `λ = ±i ‖∂ₓU‖ √(|ν|/d'')` for `ν < 0`, `±‖∂ₓU‖ √(ν/d'')` for `ν > 0`.
pub fn interaction_prediction(ux_norm2: f64, d2: f64, nus: &[f64]) -> Result<Vec<InteractionPrediction>> {
    if !(d2 > 0.0) {
        return Err(Error::NegativeD2 { d2 });
    }
    Ok(nus
        .iter()
        .map(|&nu| {
            let r = (ux_norm2 * nu.abs() / d2).sqrt();
            if nu < 0.0 {
                InteractionPrediction { nu, lambda: c64::new(0.0, r), negative_signature: Some(true) }
            } else {
                InteractionPrediction { nu, lambda: c64::new(r, 0.0), negative_signature: None }
            }
        })
        .collect())
}

/// Prediction from the reference member of a family.
pub fn family_prediction(family: &PulseFamily, nus: &[f64]) -> Result<Vec<InteractionPrediction>> {
    let i = family.reference().ok_or_else(|| Error::InvalidInput { detail: "family needs three members".into() })?;
    let d2 = family.d2_at(i).unwrap_or(f64::NAN);
    interaction_prediction(family.profiles[i].ux_norm2(), d2, nus)
}

/// Primary family `c - dc, c, c + dc` on a grid with the multi-pulse spacing.
pub fn family_for(profile: &PulseProfile, dc: f64) -> Result<PulseFamily> {
    let grid = BridgeGrid::with_spacing(profile.grid.h(), TAIL / profile.alpha)?;
    build_family(&[profile.c - dc, profile.c, profile.c + dc], &grid)
}

/// Hamiltonian-Krein index from `A_0`, `A_1`, `A_2 = I` compared with the census.
///
/// The kernel cut sits halfway (geometrically) between the translation eigenvalue and
/// the smallest interaction eigenvalue, so tiny `ν` are not mistaken for kernel.
pub fn bridge_index(profile: &PulseProfile, spectrum: &BridgeSpectrum, tol: &Tolerances) -> Result<(IndexReport, CensusCheck)> {
    let a0s = a0_spectrum(profile)?;
    let norm = a0s.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut local = tol.clone();
    let upper = a0s.small.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())).min(tol.zero * norm);
    let lower = a0s.kernel.abs().max(f64::MIN_POSITIVE);
    if upper > lower {
        local.zero = (upper * lower).sqrt() / norm;
    }
    let p = bridge_pencil(profile, tol)?;
    let mut rep = hki::hki_quadratic(p.coeff(0), p.coeff(1), p.coeff(2), &local)?;
    let check = hki::census_check_with(&mut rep, &spectrum.census);
    Ok((rep, check))
}

#[derive(Debug, Clone, Serialize)]
pub struct KreinDiagonalReport {
    pub x_min: f64,
    pub samples: Vec<f64>,
    /// Fitted coefficients `C_k` of `-K(z)/z ≈ Σ C_k zᵏ`, `k = 0..4`, as `[re, im]` rows.
    #[serde(skip)]
    pub coefficients: Vec<CMat>,
    pub nu: Vec<f64>,
    pub fitted_nu: Vec<f64>,
    /// Largest off-diagonal over smallest diagonal modulus of the fitted matrix at `z_ref`.
    pub offdiag_ratio: f64,
    pub z_ref: f64,
    pub k1_norm: f64,
    pub c2_diagonal: Vec<f64>,
    pub d2: f64,
    pub c2_rel_error: f64,
    /// Diagonal of the coupling part of `K_2` from the exact reduction.
    pub coupling_exact: Vec<f64>,
    /// `-2c ⟨∂ₓ²U, ∂_cU⟩` from the primary family.
    pub coupling_lemma: f64,
    pub ux_uc_inner: f64,
    pub ibp_defect: f64,
}

fn fit_polynomial(zs: &[f64], values: &[f64], degree: usize, scale: f64) -> Vec<f64> {
    let k = degree + 1;
    let v = Mat::from_fn(zs.len(), k, |i, j| (zs[i] / scale).powi(j as i32));
    let rhs = Mat::from_fn(zs.len(), 1, |i, _| values[i]);
    let vt = v.transpose();
    let ata = vt * v.as_ref();
    let atb = vt * rhs.as_ref();
    let x = linalg::solve_real(ata.as_ref(), atb.as_ref());
    (0..k).map(|j| x[(j, 0)] / scale.powi(j as i32)).collect()
}

/// Samples `-K_S(z)/z` at `z = ±0.04·2^{-k}`, `k = 0..5`, with `S` spanned by the `n`
/// smallest eigenvectors of `A_0` scaled to `⟨s_i, s_j⟩ = ‖∂ₓU‖² δ_ij`, and fits a
/// quartic entrywise.
pub fn verify_krein_diagonal(profile: &PulseProfile, family: &PulseFamily, tol: &Tolerances) -> Result<KreinDiagonalReport> {
    let n = profile.peaks.len();
    let i = family.reference().ok_or_else(|| Error::InvalidInput { detail: "family needs three members".into() })?;
    let prim = &family.profiles[i];
    if (prim.grid.h() - profile.grid.h()).abs() > 1e-12 * profile.grid.h() {
        return Err(Error::InvalidInput { detail: "family and profile grid spacings differ".into() });
    }
    let d2 = family.d2_at(i).ok_or(Error::NegativeD2 { d2: f64::NAN })?;
    let ux2 = prim.ux_norm2();
    let p = bridge_pencil(profile, tol)?;
    let s: Subspace = krein::select_small_subspace(p.coeff(0), n)?;
    let samples: Vec<f64> =
        (0..6).flat_map(|k| [0.04 * 0.5f64.powi(k), -0.04 * 0.5f64.powi(k)]).collect();
    let mut mats = Vec::with_capacity(samples.len());
    for &z in &samples {
        let k = krein::krein_matrix_at(&p, &s, z, tol)?.matrix;
        mats.push(linalg::scale(k.as_ref(), c64::new(-ux2 / z, 0.0)));
    }
    let mut coefficients = vec![Mat::<c64>::zeros(n, n); 5];
    for a in 0..n {
        for b in 0..n {
            let re: Vec<f64> = mats.iter().map(|m| m[(a, b)].re).collect();
            let im: Vec<f64> = mats.iter().map(|m| m[(a, b)].im).collect();
            let (cr, ci) = (fit_polynomial(&samples, &re, 4, 0.04), fit_polynomial(&samples, &im, 4, 0.04));
            for k in 0..5 {
                coefficients[k][(a, b)] = c64::new(cr[k], ci[k]);
            }
        }
    }
    let z_ref = 0.04f64;
    let at = |a: usize, b: usize| -> c64 { (0..5).map(|k| coefficients[k][(a, b)] * z_ref.powi(k as i32)).sum() };
    let mut off = 0.0f64;
    let mut diag = f64::INFINITY;
    for a in 0..n {
        diag = diag.min(at(a, a).norm());
        for b in 0..n {
            if a != b {
                off = off.max(at(a, b).norm());
            }
        }
    }
    let c2_diagonal: Vec<f64> = (0..n).map(|a| coefficients[2][(a, a)].re).collect();
    let c2_rel_error = c2_diagonal.iter().map(|v| (v - d2).abs() / d2).fold(0.0, f64::max);
    let expansion: SmallZExpansion = krein::small_z_reduction(&p, &s, tol)?;
    let coupling_exact = (0..n).map(|a| ux2 * (expansion.k2[(a, a)].re - 1.0)).collect();
    let g = &prim.grid;
    let uc = family.dc_profile(i).expect("interior member");
    let ux = g.d1(&prim.u);
    let uxx = g.d2(&prim.u);
    let uxc = g.d1(&uc);
    let dmom = (family.momentum[i + 1] - family.momentum[i - 1]) / (family.c_grid[i + 1] - family.c_grid[i - 1]);
    let distances = profile.distances();
    Ok(KreinDiagonalReport {
        x_min: 0.5 * distances.iter().cloned().fold(f64::INFINITY, f64::min),
        samples,
        nu: s.source_eigenvalues.clone(),
        fitted_nu: (0..n).map(|a| coefficients[0][(a, a)].re / ux2).collect(),
        offdiag_ratio: off / diag,
        z_ref,
        k1_norm: linalg::max_abs(coefficients[1].as_ref()),
        c2_diagonal,
        d2,
        c2_rel_error,
        coupling_exact,
        coupling_lemma: -2.0 * prim.c * g.inner(&uxx, &uc),
        ux_uc_inner: g.inner(&ux, &uc),
        ibp_defect: ux2 + 2.0 * prim.c * g.inner(&uxc, &ux) - dmom,
        coefficients,
    })
}

/// A multi-pulse together with the primary family on the same grid spacing.
#[derive(Debug, Clone)]
pub struct MultipulseCase {
    pub profile: PulseProfile,
    pub family: PulseFamily,
    pub x_tilde: f64,
}

pub const FAMILY_DC: f64 = 0.01;

/// Solves the primary pulse, calibrates `X̃` unless given, builds the multi-pulse and
/// the matching primary family.
pub fn multipulse_case(
    c: f64,
    m: u32,
    ks: &[u32],
    x_tilde: Option<f64>,
    opts: &MultipulseOptions,
) -> Result<MultipulseCase> {
    let primary = solve_primary_pulse(c, &primary_grid(c, opts.points)?)?;
    let x_tilde = match x_tilde {
        Some(v) => v,
        None => calibrate_offset(&primary, opts.points)?.x_tilde,
    };
    let profile = construct_multipulse(&primary, m, ks, x_tilde, opts)?;
    let family = family_for(&profile, FAMILY_DC)?;
    Ok(MultipulseCase { profile, family, x_tilde })
}
