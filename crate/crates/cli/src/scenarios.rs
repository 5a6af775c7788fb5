use std::path::PathBuf;

use clap::Args;
use krein_core::bridge::{
    a0_spectrum, calibrate_offset, construct_multipulse, essential_band, family_for, family_prediction, linear_rates,
    primary_grid, quadratic_spectrum, solve_primary_pulse, verify_krein_diagonal, bridge_index, BridgeSpectrum,
    Calibration, MultipulseOptions, PulseProfile, DEFAULT_POINTS, FAMILY_DC,
};
use krein_core::hki::{census_check, hki_linear, hki_quadratic};
use krein_core::kdv5::{
    bloch_scan, bracket_index_change, curves_csv, dispersion_curves, index_change_mu, kdv5_krein_curves, linspace,
    predict_collisions, solve_periodic_wave, Kdv5Params,
};
use krein_core::krein::{krein_curves, select_subspace, KreinCurveSet, Signature};
use krein_core::pencil::{random_pencil, PencilJson};
use krein_core::{polynomial_spectrum, Error, Result, StarEvenPencil, Tolerances};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::svg::{self, Marker, Panel, Series, Shape, Stroke};

pub struct Artifact {
    pub file: String,
    pub description: String,
    pub contents: String,
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
}

impl Outcome {
    fn new() -> Self {
        Self { artifacts: Vec::new(), summary: Value::Null }
    }

    fn add(&mut self, file: impl Into<String>, description: &str, contents: String) {
        self.artifacts.push(Artifact { file: file.into(), description: description.into(), contents });
    }

    fn add_json<T: Serialize>(&mut self, file: impl Into<String>, description: &str, value: &T) {
        self.add(file, description, to_json(value));
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn invalid(detail: impl Into<String>) -> Error {
    Error::InvalidInput { detail: detail.into() }
}

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return 1.0;
    }
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * q).round() as usize]
}

/// Krein eigenvalue branches, solid where increasing and dashed where decreasing, with
/// poles as vertical guides and zeros marked by signature.
fn krein_panel(curves: &KreinCurveSet, title: &str, r_clip: Option<f64>) -> Panel {
    let mut panel = Panel::new(title, "z", "r(z)");
    panel.x_range = Some((curves.grid[0], curves.grid[curves.grid.len() - 1]));
    let clip = r_clip.unwrap_or_else(|| {
        let mags: Vec<f64> = curves.branches.iter().flatten().flatten().map(|r| r.abs()).collect();
        1.5 * quantile(mags, 0.9).max(1e-12)
    });
    panel.y_range = Some((-clip, clip));
    for (b, branch) in curves.branches.iter().enumerate() {
        let mut pts: Vec<(f64, Option<f64>)> = Vec::with_capacity(branch.len());
        for (k, (&z, &r)) in curves.grid.iter().zip(branch).enumerate() {
            if k > 0 && curves.poles.iter().any(|p| !p.removable && p.z > curves.grid[k - 1] && p.z < z) {
                pts.push((z, None));
            }
            pts.push((z, r));
        }
        let style = |k: usize| match (pts[k].1, pts[k + 1].1) {
            (Some(a), Some(c)) if c < a => Stroke::Dashed,
            _ => Stroke::Solid,
        };
        panel.series.extend(svg::styled_runs(&pts, style, COLORS[b % COLORS.len()]));
    }
    for p in &curves.poles {
        let color = if p.removable { "#bbbbbb" } else { "#555555" };
        panel.markers.push(Marker { x: p.z, y: 0.0, shape: Shape::VLine, color });
    }
    for z in &curves.zeros {
        let (shape, color) = match z.signature {
            Signature::Negative => (Shape::Dot, "#000000"),
            Signature::Positive => (Shape::Ring, "#000000"),
            Signature::Degenerate => (Shape::Cross, "#ff7f0e"),
        };
        panel.markers.push(Marker { x: z.z, y: 0.0, shape, color });
    }
    panel
}

fn count_signatures(curves: &KreinCurveSet) -> Value {
    let n = |s: Signature| curves.zeros.iter().filter(|z| z.signature == s).count();
    json!({
        "zeros": curves.zeros.len(),
        "negative": n(Signature::Negative),
        "positive": n(Signature::Positive),
        "degenerate": n(Signature::Degenerate),
        "poles": curves.poles.len(),
    })
}

#[derive(Args, Debug, Serialize)]
#[group(skip)]
pub struct CoreDemo {
    /// Pencil JSON file; a random pencil is drawn from the seed when absent
    #[arg(long)]
    pub pencil: Option<PathBuf>,
    /// Degree of the random pencil (1 or 2)
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    /// Dimension of the random pencil
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    /// Krein curves are traced on [-z_max, z_max]; defaults to 1.2 times the largest imaginary eigenvalue
    #[arg(long)]
    pub z_max: Option<f64>,
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
}

fn load_pencil(args: &CoreDemo, seed: u64, tol: &Tolerances) -> Result<StarEvenPencil> {
    match &args.pencil {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            let doc: PencilJson = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            StarEvenPencil::from_json(&doc, tol)
        }
        None => {
            if !(1..=2).contains(&args.degree) {
                return Err(Error::UnsupportedDegree { degree: args.degree });
            }
            random_pencil(&mut StdRng::seed_from_u64(seed), args.degree, args.dim)
        }
    }
}

pub fn core_demo(args: &CoreDemo, seed: u64, tol: &Tolerances) -> Result<Outcome> {
    let mut out = Outcome::new();
    let p = load_pencil(args, seed, tol)?;
    let spec = polynomial_spectrum(&p, tol)?;
    let mut rep = match p.degree() {
        1 => hki_linear(p.coeff(0), p.coeff(1), tol)?,
        2 => hki_quadratic(p.coeff(0), p.coeff(1), p.coeff(2), tol)?,
        d => return Err(Error::UnsupportedDegree { degree: d }),
    };
    let check = census_check(&mut rep, &spec);
    out.add_json("pencil.json", "input pencil", &p.to_json());
    out.add_json("spectrum.json", "polynomial eigenvalues with Krein indices and census", &spec);
    out.add_json("index.json", "Hamiltonian-Krein index formula and census comparison", &json!({ "report": rep, "check": check }));

    let mut scatter = Panel::new("spectrum", "Re λ", "Im λ");
    for e in &spec.eigenvalues {
        let (shape, color) = match e.krein_index {
            Some(1) => (Shape::Dot, "#d62728"),
            Some(_) => (Shape::Ring, "#1f77b4"),
            None => (Shape::Cross, "#555555"),
        };
        scatter.markers.push(Marker { x: e.lambda.re, y: e.lambda.im, shape, color });
    }

    let mut summary = json!({
        "dimension": p.dim(),
        "degree": p.degree(),
        "k_r": spec.k_r,
        "k_c": spec.k_c,
        "k_i_minus": spec.k_i_minus,
        "k_ham_formula": check.formula,
        "agrees": check.agrees,
        "pairing_defect": spec.pairing_defect(),
    });
    let mut panels = vec![scatter];
    match select_subspace(p.coeff(0), tol) {
        Ok(s) => {
            let z_max = args.z_max.unwrap_or_else(|| {
                let m = spec.eigenvalues.iter().filter(|e| e.is_imaginary()).map(|e| e.lambda.im.abs()).fold(0.0, f64::max);
                1.2 * m.max(1.0)
            });
            if !(z_max > 0.0) || args.points < 2 {
                return Err(Error::OutOfRange { what: "z_max".into(), value: z_max });
            }
            let curves = krein_curves(&p, &s, &linspace(-z_max, z_max, args.points), tol)?;
            out.add("krein.csv", "Krein eigenvalue branches on the z grid", curves.to_csv());
            out.add_json("krein.json", "Krein zeros, poles and branches", &curves.to_json());
            summary["krein"] = count_signatures(&curves);
            panels.push(krein_panel(&curves, "Krein eigenvalues", None));
        }
        Err(Error::EmptySubspace) => summary["krein"] = json!("A_0 is positive definite; no Krein matrix"),
        Err(e) => return Err(e),
    }
    out.add("core.svg", "spectrum scatter and Krein eigenvalue curves", svg::render(&panels, 2));
    out.summary = summary;
    Ok(out)
}

#[derive(Args, Debug, Serialize)]
#[group(skip)]
pub struct Kdv5Dispersion {
    /// Coefficient of the third-order term
    #[arg(long, default_value_t = -8.0 / 15.0, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 501)]
    pub points: usize,
    #[arg(long, default_value_t = -4, allow_negative_numbers = true)]
    pub n_min: i64,
    #[arg(long, default_value_t = 4)]
    pub n_max: i64,
    /// Plot window for the curves
    #[arg(long, default_value_t = 2.0)]
    pub z_max: f64,
}

pub fn kdv5_dispersion(args: &Kdv5Dispersion, tol: &Tolerances) -> Result<Outcome> {
    let mut out = Outcome::new();
    let params = Kdv5Params::new(args.b, Kdv5Params::default().modes)?;
    if !(args.mu_min < args.mu_max) || args.points < 2 || args.n_min > args.n_max {
        return Err(invalid("need mu_min < mu_max, points >= 2 and n_min <= n_max"));
    }
    let grid = linspace(args.mu_min, args.mu_max, args.points);
    let pts = dispersion_curves(&grid, args.n_min..=args.n_max, &params);
    let collisions = predict_collisions(&params, 1.0, args.n_min..=args.n_max, (args.mu_min.max(1e-6), args.mu_max));
    let wave = solve_periodic_wave(&params, 0.0)?;
    let mu_star = index_change_mu(&params);
    let bracket = bracket_index_change(&wave, (mu_star - 0.02).max(1e-6), (mu_star + 0.02).min(0.5), 1e-6, tol).ok();
    out.add("dispersion.csv", "collision curves z_n(mu) with the sign of d_n(mu)", curves_csv(&pts));
    out.add_json(
        "collisions.json",
        "predicted collisions of opposite-signature curves and the index change of A_0",
        &json!({ "collisions": collisions, "index_change_mu": mu_star, "index_change_bracket": bracket }),
    );

    let mut panel = Panel::new("collision curves (dashed: negative signature)", "μ", "z");
    panel.x_range = Some((args.mu_min, args.mu_max));
    panel.y_range = Some((-args.z_max, args.z_max));
    for (i, n) in (args.n_min..=args.n_max).enumerate() {
        let curve: Vec<(f64, Option<f64>)> = pts.iter().filter(|p| p.n == n).map(|p| (p.mu, Some(p.z))).collect();
        let signs: Vec<bool> = pts.iter().filter(|p| p.n == n).map(|p| p.negative_signature).collect();
        let style = |k: usize| if signs[k] && signs[k + 1] { Stroke::Dashed } else { Stroke::Solid };
        panel.series.extend(svg::styled_runs(&curve, style, COLORS[i % COLORS.len()]));
    }
    for c in &collisions {
        panel.markers.push(Marker { x: c.mu, y: c.z, shape: Shape::Cross, color: "#000000" });
    }
    panel.markers.push(Marker { x: mu_star, y: 0.0, shape: Shape::VLine, color: "#555555" });
    out.add("dispersion.svg", "collision curves with predicted collisions", svg::render(&[panel], 1));
    out.summary = json!({
        "collisions": collisions.len(),
        "collision_mu": collisions.iter().map(|c| c.mu).collect::<Vec<_>>(),
        "index_change_mu": mu_star,
        "index_change_bracket": bracket,
    });
    Ok(out)
}

#[derive(Args, Debug, Serialize)]
#[group(skip)]
pub struct WaveArgs {
    #[arg(long, default_value_t = -8.0 / 15.0, allow_negative_numbers = true)]
    pub b: f64,
    /// Fourier truncation M
    #[arg(long, default_value_t = 32)]
    pub modes: usize,
    /// Amplitude of the cos x mode
    #[arg(long, default_value_t = 0.023)]
    pub eps: f64,
}

impl WaveArgs {
    fn params(&self) -> Result<Kdv5Params> {
        Kdv5Params::new(self.b, self.modes)
    }
}

#[derive(Args, Debug, Serialize)]
#[group(skip)]
pub struct Kdv5Wave {
    #[command(flatten)]
    pub wave: WaveArgs,
    /// Samples on [0, 2π) for the profile
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
}

pub fn kdv5_wave(args: &Kdv5Wave) -> Result<Outcome> {
    let mut out = Outcome::new();
    let wave = solve_periodic_wave(&args.wave.params()?, args.wave.eps)?;
    let n = args.samples.max(2);
    let xs: Vec<f64> = (0..n).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect();
    let mut csv = String::from("x,u\n");
    for &x in &xs {
        csv.push_str(&format!("{:.12e},{:.12e}\n", x, wave.eval(x)));
    }
    out.add_json("wave.json", "Fourier coefficients of the periodic wave (checkpoint)", &wave);
    out.add("wave.csv", "wave profile on [0, 2π)", csv);
    let mut panel = Panel::new(&format!("periodic wave, ε = {}", args.wave.eps), "x", "U(x)");
    panel.series.push(Series { points: xs.iter().map(|&x| (x, wave.eval(x))).collect(), stroke: Stroke::Solid, color: COLORS[0] });
    out.add("wave.svg", "wave profile", svg::render(&[panel], 1));
    out.summary = json!({ "ell": wave.ell, "residual_norm": wave.residual_norm, "iterations": wave.iterations });
    Ok(out)
}

#[derive(Args, Debug, Serialize)]
#[group(skip)]
pub struct Kdv5Scan {
    #[command(flatten)]
    pub wave: WaveArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub mu_max: f64,
    /// Uniform grid points on [mu_min, mu_max]
    #[arg(long, default_value_t = 100)]
    pub coarse: usize,
    /// Half-width of the refinement window around each predicted collision
    #[arg(long, default_value_t = 5e-3)]
    pub window: f64,
    /// Points per refinement window
    #[arg(long, default_value_t = 100)]
    pub window_points: usize,
    /// Threshold on max Re λ for instability
    #[arg(long, default_value_t = 1e-6)]
    pub tol_unstable: f64,
}

pub fn kdv5_scan(args: &Kdv5Scan, tol: &Tolerances) -> Result<Outcome> {
    let mut out = Outcome::new();
    let params = args.wave.params()?;
    let wave = solve_periodic_wave(&params, args.wave.eps)?;
    let predicted = predict_collisions(&params, wave.ell, -6..=6, (args.mu_min, args.mu_max));
    let mut grid = linspace(args.mu_min, args.mu_max, args.coarse);
    if args.window_points > 0 {
        for c in &predicted {
            grid.extend(linspace(c.mu - args.window, c.mu + args.window, args.window_points));
        }
    }
    grid.retain(|mu| *mu >= args.mu_min && *mu <= args.mu_max);
    let scan = bloch_scan(&wave, &grid, args.tol_unstable, tol)?;
    out.add("scan.csv", "largest real part of the Bloch spectrum per mu", scan.to_csv());
    let bubbles: Vec<Value> = scan
        .bubbles
        .iter()
        .map(|b| json!({ "bubble": b, "centre": b.centre(), "width": b.width() }))
        .collect();
    out.add_json(
        "bubbles.json",
        "instability bubbles and predicted collisions",
        &json!({ "ell": wave.ell, "predicted": predicted, "bubbles": bubbles, "tol_unstable": scan.tol_unstable }),
    );

    let mut pts: Vec<(f64, f64)> = scan.points.iter().map(|p| (p.mu, p.max_re)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut panel = Panel::new(&format!("Bloch scan, ε = {}", args.wave.eps), "μ", "max Re λ");
    panel.x_range = Some((args.mu_min, args.mu_max));
    panel.series.push(Series { points: pts, stroke: Stroke::Solid, color: COLORS[0] });
    for c in &predicted {
        panel.markers.push(Marker { x: c.mu, y: 0.0, shape: Shape::VLine, color: "#999999" });
    }
    for b in &scan.bubbles {
        panel.markers.push(Marker { x: b.mu_at_max, y: b.max_re, shape: Shape::Dot, color: COLORS[1] });
    }
    out.add("scan.svg", "max Re λ against mu with predicted collisions", svg::render(&[panel], 1));
    out.summary = json!({
        "points": scan.points.len(),
        "bubbles": scan.bubbles.iter().map(|b| json!({
            "enclosing": b.enclosing, "width": b.width(), "max_re": b.max_re, "im_at_max": b.im_at_max,
        })).collect::<Vec<_>>(),
        "predicted_mu": predicted.iter().map(|c| c.mu).collect::<Vec<_>>(),
    });
    Ok(out)
}

#[derive(Args, Debug, Serialize)]
#[group(skip)]
pub struct Kdv5Krein {
    #[arg(long, default_value_t = -8.0 / 15.0, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, default_value_t = 32)]
    pub modes: usize,
    /// Comma-separated wave amplitudes
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.023])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 0.3589)]
    pub mu: f64,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    pub z_min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub z_max: f64,
    #[arg(long, default_value_t = 1201)]
    pub points: usize,
    #[arg(long, default_value_t = -0.14, allow_negative_numbers = true)]
    pub zoom_min: f64,
    #[arg(long, default_value_t = -0.09, allow_negative_numbers = true)]
    pub zoom_max: f64,
    #[arg(long, default_value_t = 1001)]
    pub zoom_points: usize,
    /// Clip |r| in the full-window panels
    #[arg(long)]
    pub r_clip: Option<f64>,
}

pub fn kdv5_krein(args: &Kdv5Krein, tol: &Tolerances) -> Result<Outcome> {
    let mut out = Outcome::new();
    let params = Kdv5Params::new(args.b, args.modes)?;
    if args.eps.is_empty() || !(args.z_min < args.z_max) || !(args.zoom_min < args.zoom_max) {
        return Err(invalid("need at least one eps and increasing z windows"));
    }
    let full = linspace(args.z_min, args.z_max, args.points.max(2));
    let zoom = linspace(args.zoom_min, args.zoom_max, args.zoom_points.max(2));
    let mut panels = Vec::new();
    let mut ladder = Vec::new();
    for &eps in &args.eps {
        let wave = solve_periodic_wave(&params, eps)?;
        let kf = kdv5_krein_curves(&wave, args.mu, &full, tol)?;
        let kz = kdv5_krein_curves(&wave, args.mu, &zoom, tol)?;
        out.add(format!("krein_eps{eps}.csv"), "Krein eigenvalue branches, full window", kf.curves.to_csv());
        out.add_json(format!("krein_eps{eps}.json"), "Krein zeros, poles and branches, full window", &kf.curves.to_json());
        out.add(format!("krein_zoom_eps{eps}.csv"), "Krein eigenvalue branches, zoom window", kz.curves.to_csv());
        out.add_json(format!("krein_zoom_eps{eps}.json"), "Krein zeros, poles and branches, zoom window", &kz.curves.to_json());
        ladder.push(json!({
            "eps": eps,
            "subspace_dim": kf.subspace.dim(),
            "full": count_signatures(&kf.curves),
            "zoom": count_signatures(&kz.curves),
            "zoom_zeros": kz.curves.zeros.iter().map(|z| json!({ "z": z.z, "signature": z.signature })).collect::<Vec<_>>(),
        }));
        panels.push(krein_panel(&kf.curves, &format!("ε = {eps}, μ = {}", args.mu), args.r_clip));
        panels.push(krein_panel(&kz.curves, &format!("ε = {eps}, zoom"), None));
    }
    out.add_json("ladder.json", "zero counts and signatures per eps", &ladder);
    out.add("krein.svg", "Krein eigenvalue curves per eps: full window and zoom", svg::render(&panels, 2));
    out.summary = json!({
        "mu": args.mu,
        "zoom_zero_counts": ladder.iter().map(|l| l["zoom"]["zeros"].clone()).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn profile_panel(p: &PulseProfile, title: &str) -> Panel {
    let mut panel = Panel::new(title, "x", "U(x)");
    panel.series.push(Series {
        points: (0..p.grid.n).map(|k| (p.grid.x(k), p.u[k])).collect(),
        stroke: Stroke::Solid,
        color: COLORS[0],
    });
    for &x in &p.peaks {
        panel.markers.push(Marker { x, y: 0.0, shape: Shape::VLine, color: "#999999" });
    }
    panel
}

#[derive(Args, Debug, Serialize)]
#[group(skip)]
pub struct BridgePulse {
    /// Wave speed, 0 < c < √2
    #[arg(long, default_value_t = 1.3)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub points: usize,
}

pub fn bridge_pulse(args: &BridgePulse) -> Result<Outcome> {
    let mut out = Outcome::new();
    let p = solve_primary_pulse(args.c, &primary_grid(args.c, args.points)?)?;
    let s = a0_spectrum(&p)?;
    let band = essential_band(args.c)?;
    let (alpha, beta) = linear_rates(args.c)?;
    out.add("pulse.json", "primary pulse profile (checkpoint)", p.to_json() + "\n");
    out.add("pulse.csv", "primary pulse on the grid", p.to_csv());
    out.add_json(
        "a0.json",
        "A_0 spectrum, band edge and essential band of the quadratic pencil",
        &json!({ "a0": s, "band": band, "alpha": alpha, "beta": beta }),
    );
    out.add("pulse.svg", "primary pulse profile", svg::render(&[profile_panel(&p, &format!("primary pulse, c = {}", args.c))], 1));
    out.summary = json!({
        "min": p.min(),
        "residual_norm": p.residual_norm,
        "band_edge": s.band_edge,
        "band_edge_analytic": s.band_edge_analytic,
        "rho": band.rho,
        "negative_count": s.negative_count(),
    });
    Ok(out)
}

#[derive(Args, Debug, Serialize)]
#[group(skip)]
pub struct MultipulseArgs {
    #[arg(long, default_value_t = 1.2)]
    pub c: f64,
    /// Comma-separated distance levels m
    #[arg(long, value_delimiter = ',', default_values_t = [1u32])]
    pub m: Vec<u32>,
    /// Comma-separated offsets k_j, one per gap (0 or 1)
    #[arg(long, value_delimiter = ',', default_values_t = [0u32])]
    pub k: Vec<u32>,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub points: usize,
    /// Phase offset X̃; calibrated on the m = 1 double pulse when absent
    #[arg(long)]
    pub x_tilde: Option<f64>,
}

struct Trains {
    calibration: Option<Calibration>,
    x_tilde: f64,
    profiles: Vec<(u32, PulseProfile)>,
}

fn build_trains(args: &MultipulseArgs) -> Result<Trains> {
    if args.m.is_empty() {
        return Err(invalid("need at least one m"));
    }
    let opts = MultipulseOptions { points: args.points, ..Default::default() };
    let primary = solve_primary_pulse(args.c, &primary_grid(args.c, args.points)?)?;
    let (calibration, x_tilde) = match args.x_tilde {
        Some(v) => (None, v),
        None => {
            let cal = calibrate_offset(&primary, args.points)?;
            let x = cal.x_tilde;
            (Some(cal), x)
        }
    };
    let mut profiles = Vec::new();
    for &m in &args.m {
        profiles.push((m, construct_multipulse(&primary, m, &args.k, x_tilde, &opts)?));
    }
    Ok(Trains { calibration, x_tilde, profiles })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn bridge_multipulse(args: &MultipulseArgs) -> Result<Outcome> {
    let mut out = Outcome::new();
    let trains = build_trains(args)?;
    if let Some(cal) = &trains.calibration {
        out.add_json("calibration.json", "X̃ calibration scan", cal);
    }
    let mut rows = Vec::new();
    let mut panels = Vec::new();
    for (m, p) in &trains.profiles {
        let s = a0_spectrum(p)?;
        let family = family_for(p, FAMILY_DC)?;
        let pred = family_prediction(&family, &s.small)?;
        out.add(format!("multipulse_m{m}.json"), "multi-pulse profile (checkpoint)", p.to_json() + "\n");
        out.add(format!("multipulse_m{m}.csv"), "multi-pulse on the grid", p.to_csv());
        panels.push(profile_panel(p, &format!("m = {m}, k = {:?}", args.k)));
        rows.push(json!({
            "m": m,
            "distances": p.distances(),
            "residual_norm": p.residual_norm,
            "kernel": s.kernel,
            "small": s.small,
            "delta_report": s.delta_report,
            "negative_count": s.negative_count(),
            "d2": family.reference().and_then(|i| family.d2_at(i)),
            "predictions": pred,
        }));
    }
    let mut summary = json!({ "x_tilde": trains.x_tilde, "cases": rows });
    let firsts: Vec<(f64, f64)> = trains
        .profiles
        .iter()
        .zip(&rows)
        .filter_map(|((m, _), r)| r["small"][0].as_f64().map(|v| (*m as f64, v.abs().ln())))
        .collect();
    if firsts.len() >= 2 {
        let (alpha, beta) = linear_rates(args.c)?;
        let (xs, ys): (Vec<f64>, Vec<f64>) = firsts.into_iter().unzip();
        summary["log_nu_slope"] = json!(least_squares_slope(&xs, &ys));
        summary["log_nu_slope_expected"] = json!(-4.0 * alpha * std::f64::consts::PI / beta);
    }
    out.add_json("a0_small.json", "small A_0 eigenvalues and interaction predictions per m", &summary);
    out.add("multipulse.svg", "multi-pulse profiles", svg::render(&panels, 1));
    out.summary = summary;
    Ok(out)
}

fn spectrum_csv(s: &BridgeSpectrum) -> String {
    let mut csv = String::from("re,im,multiplicity,krein_index,negative_signature,class\n");
    for e in &s.report.eigenvalues {
        let class = if s.is_kernel(e) {
            "kernel"
        } else if s.is_band(e) {
            "band"
        } else {
            "point"
        };
        let idx = e.krein_index.map(|k| k.to_string()).unwrap_or_default();
        let neg = u8::from(e.krein_index == Some(1));
        csv.push_str(&format!(
            "{:e},{:e},{},{},{},{}\n",
            e.lambda.re, e.lambda.im, e.algebraic_multiplicity, idx, neg, class
        ));
    }
    csv
}

fn spectrum_panel(s: &BridgeSpectrum, title: &str, window: Option<f64>) -> Panel {
    let mut panel = Panel::new(title, "Re λ", "Im λ");
    if let Some(w) = window {
        panel.x_range = Some((-w, w));
        panel.y_range = Some((-w, w));
    }
    for e in &s.report.eigenvalues {
        let (shape, color) = if s.is_band(e) || s.is_kernel(e) {
            (Shape::Dot, "#bbbbbb")
        } else if e.krein_index == Some(1) {
            (Shape::Ring, "#d62728")
        } else {
            (Shape::Dot, "#1f77b4")
        };
        panel.markers.push(Marker { x: e.lambda.re, y: e.lambda.im, shape, color });
    }
    for y in [s.band.rho, -s.band.rho] {
        panel.markers.push(Marker { x: 0.0, y, shape: Shape::Cross, color: "#000000" });
    }
    panel
}

#[derive(Args, Debug, Serialize)]
#[group(skip)]
pub struct BridgeSpectrumArgs {
    #[command(flatten)]
    pub train: MultipulseArgs,
    /// Half-width of the zoom panel around the origin; defaults to twice the largest point eigenvalue
    #[arg(long)]
    pub window: Option<f64>,
}

pub fn bridge_spectrum(args: &BridgeSpectrumArgs, tol: &Tolerances) -> Result<Outcome> {
    let mut out = Outcome::new();
    let trains = build_trains(&args.train)?;
    let mut panels = Vec::new();
    let mut rows = Vec::new();
    for (m, p) in &trains.profiles {
        let spec = quadratic_spectrum(p, tol)?;
        let (rep, check) = bridge_index(p, &spec, tol)?;
        let s = a0_spectrum(p)?;
        let family = family_for(p, FAMILY_DC)?;
        let pred = family_prediction(&family, &s.small)?;
        let point: Vec<[f64; 2]> = spec.point_spectrum().iter().map(|e| [e.lambda.re, e.lambda.im]).collect();
        out.add(format!("spectrum_m{m}.csv"), "quadratic pencil spectrum with Krein indices", spectrum_csv(&spec));
        let row = json!({
            "m": m,
            "band": spec.band,
            "census": spec.census,
            "index": rep,
            "check": check,
            "point_spectrum": point,
            "predictions": pred,
        });
        out.add_json(format!("index_m{m}.json"), "census, index formula and predicted interaction eigenvalues", &row);
        let window = args.window.unwrap_or_else(|| {
            2.0 * point.iter().map(|l| l[0].hypot(l[1])).fold(0.0, f64::max).max(pred.iter().map(|q| q.lambda.norm()).fold(1e-3, f64::max))
        });
        panels.push(spectrum_panel(&spec, &format!("m = {m}: spectrum"), None));
        panels.push(spectrum_panel(&spec, &format!("m = {m}: near the origin"), Some(window)));
        rows.push(json!({
            "m": m,
            "point_spectrum": point,
            "predictions": pred.iter().map(|q| [q.lambda.re, q.lambda.im]).collect::<Vec<_>>(),
            "k_ham_formula": check.formula,
            "agrees": check.agrees,
        }));
    }
    out.add("spectrum.svg", "spectrum scatter with band edge crosses", svg::render(&panels, 2));
    out.summary = json!({ "x_tilde": trains.x_tilde, "cases": rows });
    Ok(out)
}

#[derive(Args, Debug, Serialize)]
#[group(skip)]
pub struct BridgeKrein {
    #[arg(long, default_value_t = 1.2)]
    pub c: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 3])]
    pub m: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = [0u32])]
    pub k: Vec<u32>,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub points: usize,
    #[arg(long)]
    pub x_tilde: Option<f64>,
}

pub fn bridge_krein(args: &BridgeKrein, tol: &Tolerances) -> Result<Outcome> {
    let mut out = Outcome::new();
    let trains = build_trains(&MultipulseArgs {
        c: args.c,
        m: args.m.clone(),
        k: args.k.clone(),
        points: args.points,
        x_tilde: args.x_tilde,
    })?;
    let mut reports = Vec::new();
    let mut ratio = Vec::new();
    for (m, p) in &trains.profiles {
        let family = family_for(p, FAMILY_DC)?;
        let r = verify_krein_diagonal(p, &family, tol)?;
        ratio.push((*m as f64, r.offdiag_ratio.log10()));
        reports.push(json!({ "m": m, "report": r }));
    }
    out.add_json("krein_diagonal.json", "fitted small-z Krein matrix diagnostics per m", &reports);
    let mut panel = Panel::new("off-diagonal ratio of the Krein matrix", "m", "log10 ratio");
    panel.series.push(Series { points: ratio.clone(), stroke: Stroke::Solid, color: COLORS[0] });
    for &(x, y) in &ratio {
        panel.markers.push(Marker { x, y, shape: Shape::Dot, color: COLORS[0] });
    }
    out.add("krein_diagonal.svg", "off-diagonal ratio against m", svg::render(&[panel], 1));
    out.summary = json!({
        "x_tilde": trains.x_tilde,
        "offdiag_ratio": reports.iter().map(|r| r["report"]["offdiag_ratio"].clone()).collect::<Vec<_>>(),
        "c2_rel_error": reports.iter().map(|r| r["report"]["c2_rel_error"].clone()).collect::<Vec<_>>(),
    });
    Ok(out)
}
