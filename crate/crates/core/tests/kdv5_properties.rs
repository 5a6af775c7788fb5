use faer::c64;
use krein_core::hki::{census_check, hki_linear};
use krein_core::kdv5::{
    bloch_pencil, curve, dispersion, kdv5_krein_curves, linspace, predict_collisions, solve_periodic_wave,
    trivial_eigenvalues, Kdv5Params,
};
use krein_core::krein::Signature;
use krein_core::{linalg, polynomial_spectrum, Error, Tolerances};
use proptest::prelude::*;

fn nearest(v: &[c64], x: c64) -> f64 {
    v.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dispersion_is_the_quartic_symbol(n in -40i64..40, mu in 0.0f64..1.0) {
        let p = Kdv5Params::default();
        let k = n as f64 + mu;
        let expect = 2.0 / 15.0 * k.powi(4) - 8.0 / 15.0 * k * k + 0.4;
        prop_assert!((dispersion(n, mu, &p) - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        prop_assert!((curve(-n, -mu, 1.0, &p) + curve(n, mu, 1.0, &p)).abs() <= 1e-9 * expect.abs().max(1.0));
    }

    #[test]
    fn trivial_bloch_spectrum_is_closed_form(mu in 0.01f64..0.5) {
        let tol = Tolerances::default();
        let wave = solve_periodic_wave(&Kdv5Params::default(), 0.0).unwrap();
        let spec = polynomial_spectrum(&bloch_pencil(&wave, mu, &tol).unwrap().pencil, &tol).unwrap();
        let got = spec.lambdas();
        for l in trivial_eigenvalues(mu, &wave.params) {
            prop_assert!(nearest(&got, l) <= 1e-10 * l.norm().max(1.0));
        }
    }

    #[test]
    fn bloch_spectrum_is_hamiltonian_and_index_matches(mu in 0.02f64..0.5, eps in 0.0f64..0.03) {
        let tol = Tolerances::default();
        let wave = solve_periodic_wave(&Kdv5Params::default(), eps).unwrap();
        let bp = bloch_pencil(&wave, mu, &tol).unwrap();
        let spec = polynomial_spectrum(&bp.pencil, &tol).unwrap();
        prop_assert!(spec.pairing_defect() < 1e-8);
        // near the index change of A_0 a small eigenvalue falls under the relative kernel cut
        let a0 = bp.pencil.coeff(0);
        let smallest = linalg::eigh(a0).unwrap().0.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        prop_assume!(smallest > 10.0 * tol.zero * linalg::spectral_norm_hermitian(a0).unwrap());
        let mut rep = hki_linear(bp.pencil.coeff(0), bp.pencil.coeff(1), &tol).unwrap();
        prop_assert_eq!(rep.kernel_dim, 0);
        let check = census_check(&mut rep, &spec);
        prop_assert!(check.agrees, "formula {} census {:?}", check.formula, check.census);
    }
}

#[test]
fn trivial_krein_zeros_sit_on_negative_dispersion_points() {
    let tol = Tolerances::default();
    let p = Kdv5Params::default();
    let wave = solve_periodic_wave(&p, 0.0).unwrap();
    for mu in [0.1, 0.3, 0.45] {
        let kk = kdv5_krein_curves(&wave, mu, &linspace(-3.0, 3.0, 1201), &tol).unwrap();
        let negative: Vec<i64> = (-32..=32).filter(|&n| dispersion(n, mu, &p) < 0.0).collect();
        let expected: Vec<(f64, f64)> = negative
            .iter()
            .map(|&n| (curve(n, mu, 1.0, &p), dispersion(n, mu, &p)))
            .filter(|(z, _)| z.abs() < 3.0 && z.abs() > 1e-9)
            .collect();
        assert_eq!(kk.curves.zeros.len(), expected.len(), "mu {mu}");
        for (z, d) in expected {
            let hit = kk.curves.zeros.iter().find(|q| (q.z + z).abs() < 1e-8 || (q.z - z).abs() < 1e-8);
            let hit = hit.unwrap_or_else(|| panic!("no zero at {z} for mu {mu}"));
            assert!((hit.slope - d).abs() < 1e-8, "slope {} vs {}", hit.slope, d);
            assert_eq!(hit.signature, Signature::Negative);
        }
    }
}

#[test]
fn collisions_follow_sign_convention() {
    let p = Kdv5Params::default();
    for c in predict_collisions(&p, 1.0, -6..=6, (1e-3, 0.5)) {
        assert!(dispersion(c.n_negative, c.mu, &p) < 0.0);
        assert!(dispersion(c.n_positive, c.mu, &p) > 0.0);
        let gap = curve(c.n_negative, c.mu, 1.0, &p) - curve(c.n_positive, c.mu, 1.0, &p);
        assert!(gap.abs() < 1e-10);
    }
}

#[test]
fn wave_is_even_converged_and_pinned() {
    let p = Kdv5Params::default();
    let wave = solve_periodic_wave(&p, 2.3e-2).unwrap();
    assert!(wave.residual_norm <= 1e-12 * 2.3e-2);
    assert!((wave.coeff(1) - 1.15e-2).abs() < 1e-15);
    for x in [0.3, 1.1, 2.9] {
        assert!((wave.eval(x) - wave.eval(-x)).abs() < 1e-15);
    }
    assert!((wave.ell - 0.9975047382116743).abs() < 1e-10);
    let json = serde_json::to_string(&wave).unwrap();
    let back: krein_core::kdv5::PeriodicWave = serde_json::from_str(&json).unwrap();
    assert_eq!(back.coeffs, wave.coeffs);
    assert_eq!(back.ell, wave.ell);
}

#[test]
fn truncation_does_not_move_the_bubble() {
    let tol = Tolerances::default();
    let max_re = |modes: usize| {
        let p = Kdv5Params::new(-8.0 / 15.0, modes).unwrap();
        let wave = solve_periodic_wave(&p, 2.3e-2).unwrap();
        let bp = bloch_pencil(&wave, 0.3590, &tol).unwrap();
        bp.pencil.eigenvalues().unwrap().iter().fold(0.0f64, |m, l| m.max(l.re))
    };
    let (a, b) = (max_re(32), max_re(48));
    assert!(a > 1e-4);
    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
}

#[test]
fn rejects_out_of_range_mu() {
    let tol = Tolerances::default();
    let wave = solve_periodic_wave(&Kdv5Params::default(), 0.0).unwrap();
    assert!(matches!(bloch_pencil(&wave, 0.0, &tol), Err(Error::OutOfRange { .. })));
    assert!(matches!(bloch_pencil(&wave, 0.6, &tol), Err(Error::OutOfRange { .. })));
}
