use faer::c64;
use krein_core::kdv5::linspace;
use krein_core::krein::{
    krein_curves, krein_matrix_at, krein_matrix_derivative, locate_poles, matches_spectrum, select_subspace,
    small_z_reduction, Signature, Subspace,
};
use krein_core::linalg;
use krein_core::pencil::random_pencil;
use krein_core::{polynomial_spectrum, Error, StarEvenPencil, Tolerances};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Random pencil whose `A_0` has a negative direction.
fn draw(seed: u64, degree: usize, n: usize) -> (StarEvenPencil, Subspace) {
    let tol = Tolerances::default();
    let mut rng = StdRng::seed_from_u64(seed);
    loop {
        let p = random_pencil(&mut rng, degree, n).unwrap();
        match select_subspace(p.coeff(0), &tol) {
            Ok(s) => return (p, s),
            Err(Error::EmptySubspace) => continue,
            Err(e) => panic!("{e}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn krein_matrix_is_hermitian(seed in any::<u64>(), degree in 1usize..=2, n in 1usize..=6, z in -3.0f64..3.0) {
        let tol = Tolerances::default();
        let (p, s) = draw(seed, degree, n);
        if let Ok(k) = krein_matrix_at(&p, &s, z, &tol) {
            let scale = linalg::max_abs(k.matrix.as_ref()).max(1.0);
            prop_assert!(linalg::hermitian_defect(k.matrix.as_ref(), 1.0) <= 1e-12 * scale);
        }
    }

    #[test]
    fn derivative_matches_central_differences(
        seed in any::<u64>(), degree in 1usize..=2, n in 1usize..=6, z in -3.0f64..3.0,
    ) {
        let tol = Tolerances::default();
        let (p, s) = draw(seed, degree, n);
        let h = 1e-5 * z.abs().max(1.0);
        let eval = |z: f64| krein_matrix_at(&p, &s, z, &tol).map(|k| k.matrix);
        let (Ok(d), Ok(kp), Ok(km), Ok(k0)) =
            (krein_matrix_derivative(&p, &s, z, &tol), eval(z + h), eval(z - h), eval(z))
        else {
            return Ok(());
        };
        let (Ok(kp2), Ok(km2)) = (eval(z + 0.5 * h), eval(z - 0.5 * h)) else { return Ok(()) };
        let coarse = linalg::scale((kp - km).as_ref(), c64::new(0.5 / h, 0.0));
        let fine = linalg::scale((kp2 - km2).as_ref(), c64::new(1.0 / h, 0.0));
        let fine = linalg::scale(fine.as_ref(), c64::new(4.0 / 3.0, 0.0));
        let fd = linalg::axpy(fine.as_ref(), c64::new(-1.0 / 3.0, 0.0), coarse.as_ref());
        let norm = linalg::max_abs(d.as_ref());
        let poles = locate_poles(&p, &s, z - 0.05, z + 0.05, &tol).unwrap();
        // finite differences are meaningless next to a pole
        prop_assume!(poles.is_empty() && linalg::max_abs(k0.as_ref()) < 1e3);
        prop_assert!(linalg::max_abs((fd - &d).as_ref()) <= 1e-5 * norm.max(1.0));
    }

    #[test]
    fn zeros_are_eigenvalues_with_matching_signature(seed in any::<u64>(), degree in 1usize..=2, n in 1usize..=5) {
        let tol = Tolerances::default();
        let (p, s) = draw(seed, degree, n);
        let spec = polynomial_spectrum(&p, &tol).unwrap();
        let reach = spec.lambdas().iter().fold(1.0f64, |m, l| m.max(l.norm())) * 1.2;
        let mut grid = linspace(-reach, reach, 2001);
        grid.extend(linspace(-4.0, 4.0, 4001));
        grid.sort_by(f64::total_cmp);
        let curves = krein_curves(&p, &s, &grid, &tol).unwrap();
        for zero in &curves.zeros {
            prop_assert!(matches_spectrum(zero.z, &spec, 1e-8), "zero at {} not in spectrum", zero.z);
            let e = spec
                .eigenvalues
                .iter()
                .min_by(|a, b| (a.lambda - c64::new(0.0, zero.z)).norm().total_cmp(&(b.lambda - c64::new(0.0, zero.z)).norm()))
                .unwrap();
            let expect = if e.krein_index == Some(1) { Signature::Negative } else { Signature::Positive };
            prop_assert_eq!(zero.signature, expect, "zero {:?} eigenvalue {:?}", zero, e);
        }
        let poles: Vec<f64> = curves.poles.iter().map(|q| q.z).collect();
        for e in spec.eigenvalues.iter().filter(|e| e.is_imaginary() && e.lambda.im != 0.0) {
            let z = e.lambda.im;
            if poles.iter().any(|q| (q - z).abs() < 1e-6) {
                continue;
            }
            prop_assert!(curves.zeros.iter().any(|q| (q.z - z).abs() <= 1e-8 * z.abs().max(1.0)), "eigenvalue {} missed", z);
        }
    }

    #[test]
    fn small_z_coefficients_match_even_and_odd_parts(seed in any::<u64>(), degree in 1usize..=2, n in 1usize..=6) {
        let tol = Tolerances::default();
        let (p, s) = draw(seed, degree, n);
        let Ok(e) = small_z_reduction(&p, &s, &tol) else { return Ok(()) };
        prop_assume!(s.complement_eigenvalues.iter().all(|v| v.abs() > 0.1));
        let f = |z: f64| {
            let k = krein_matrix_at(&p, &s, z, &tol).unwrap().matrix;
            linalg::scale(k.as_ref(), c64::new(-1.0 / z, 0.0))
        };
        let parts = |z: f64| {
            let (a, b) = (f(z), f(-z));
            let even = linalg::scale((&a + &b).as_ref(), c64::new(0.5, 0.0));
            let odd = linalg::scale((a - b).as_ref(), c64::new(0.5 / z, 0.0));
            (even, odd)
        };
        let size = |m: &linalg::CMat| linalg::max_abs(m.as_ref()).max(1.0);
        let (even, odd) = parts(1e-4);
        prop_assert!(linalg::max_abs((&even - &e.m0).as_ref()) <= 1e-6 * size(&e.m0));
        prop_assert!(linalg::max_abs((&odd - &e.k1).as_ref()) <= 1e-5 * size(&e.k1));
        let (even, _) = parts(1e-3);
        let k2 = linalg::scale((&e.m0 - even).as_ref(), c64::new(1e6, 0.0));
        prop_assert!(linalg::max_abs((&k2 - &e.k2).as_ref()) <= 1e-3 * size(&e.k2));
    }
}

#[test]
fn two_by_two_example_has_closed_form_zeros() {
    // A_0 = diag(-1, -2), A_1 = J: det K_S(z) = z² (2 - z²)
    let tol = Tolerances::default();
    let j = faer::Mat::from_fn(2, 2, |i, k| match (i, k) {
        (0, 1) => c64::new(1.0, 0.0),
        (1, 0) => c64::new(-1.0, 0.0),
        _ => c64::new(0.0, 0.0),
    });
    let p = krein_core::validate_pencil(vec![linalg::diag_real(&[-1.0, -2.0]), j], &tol).unwrap();
    let s = select_subspace(p.coeff(0), &tol).unwrap();
    assert_eq!(s.dim(), 2);
    for z in [-1.1, -0.3, 0.4, 0.9, 1.3] {
        let k = krein_matrix_at(&p, &s, z, &tol).unwrap().matrix;
        let det = (k[(0, 0)] * k[(1, 1)] - k[(0, 1)] * k[(1, 0)]).re;
        assert!((det - z * z * (2.0 - z * z)).abs() < 1e-13);
    }
    let curves = krein_curves(&p, &s, &linspace(-2.0, 2.0, 401), &tol).unwrap();
    let mut zs: Vec<f64> = curves.zeros.iter().map(|z| z.z).collect();
    zs.sort_by(f64::total_cmp);
    assert_eq!(zs.len(), 2);
    assert!((zs[0] + 2f64.sqrt()).abs() < 1e-10 && (zs[1] - 2f64.sqrt()).abs() < 1e-10);
    assert!(curves.zeros.iter().all(|z| z.signature == Signature::Negative));
}
