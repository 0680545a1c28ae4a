mod common;

use calgeom::convexity::{
    analytic_free_dimension, boundary_check, boundary_check_at, composition_trace_residual, dist_sq_free_test, ellipticity_check, free_dimension,
    is_free_subspace, log_delta_strictness, mollifying_laplacian, rho_bar_construction, second_fundamental_trace, BoundaryVerdict, DefiningFunction,
    EllipticStatus, FreeStatus,
};
use calgeom::linalg::{frobenius_dot, gaussian_matrix, null_space, qr_positive, random_symmetric, rng_for};
use calgeom::psh::{classify, min_trace_over_g, TraceOptions};
use calgeom::{Calibration, Error, Matrix, OrientedPlane, ScalarField, SearchOptions, Vector, VerdictKind};
use proptest::prelude::*;
use std::f64::consts::PI;

fn torus(big: f64, small: f64) -> DefiningFunction {
    DefiningFunction::parse(&format!("x2^2 + (sqrt(x1^2 + x3^2) - {big})^2 - {small}^2")).unwrap()
}

fn torus_points(big: f64, small: f64) -> Vec<Vector> {
    let mut out = Vec::new();
    for i in 0..20 {
        let theta = 2.0 * PI * i as f64 / 20.0;
        for j in 0..10 {
            let psi = 2.0 * PI * j as f64 / 10.0;
            let radial = big + small * theta.cos();
            out.push(Vector::from_vec(vec![radial * psi.sin(), small * theta.sin(), radial * psi.cos()]));
        }
    }
    out
}

fn unit_sphere() -> DefiningFunction {
    DefiningFunction::parse("0.5*(x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + x6^2 - 1)").unwrap()
}

fn on_sphere(n: usize, seed: u64) -> Vector {
    let v = common::random_point(n, seed, 3);
    &v / v.norm()
}

fn tangential_plane(normal: &Vector, p: usize, seed: u64) -> OrientedPlane {
    let n = normal.len();
    let u = normal / normal.norm();
    let g = gaussian_matrix(n, p, &mut rng_for(seed, 9));
    let projected = &g - &u * (u.transpose() * &g);
    OrientedPlane::from_columns(&projected).unwrap()
}

fn opts() -> TraceOptions {
    TraceOptions::with_starts(32, 0)
}

#[test]
fn wide_torus_is_convex_everywhere() {
    let cal = Calibration::from_spec("axis_volume:xy").unwrap();
    let points = torus_points(2.2, 1.0);
    assert_eq!(points.len(), 200);
    let report = boundary_check(&cal, &torus(2.2, 1.0), &points, 1e-8, &opts()).unwrap();
    assert!(report.iter().all(|r| r.verdict.is_convex()));
    let checked = report.iter().filter(|r| r.min_trace.is_some()).count();
    assert!(checked >= 4, "only {checked} points carry a tangential φ-plane");
}

#[test]
fn narrow_torus_fails_at_inner_equator() {
    let cal = Calibration::from_spec("axis_volume:xy").unwrap();
    let points = torus_points(1.8, 1.0);
    let report = boundary_check(&cal, &torus(1.8, 1.0), &points, 1e-8, &opts()).unwrap();
    let bad: Vec<_> = report.iter().filter(|r| r.verdict == BoundaryVerdict::Nonconvex).collect();
    assert!(!bad.is_empty());
    for r in bad {
        assert!((r.x[2] - 0.8).abs() < 1e-12 || (r.x[2] + 0.8).abs() < 1e-12, "{:?}", r.x);
        // 2 − 2r/(R − r) on the inner equator
        assert!((r.min_trace.as_ref().unwrap().value - (2.0 - 2.0 / 0.8)).abs() < 1e-9);
    }
}

#[test]
fn torus_threshold_is_two_r() {
    let cal = Calibration::from_spec("axis_volume:xy").unwrap();
    for (big, convex) in [(1.95, false), (2.05, true), (3.0, true), (1.5, false)] {
        let x = Vector::from_vec(vec![0.0, 0.0, big - 1.0]);
        let r = boundary_check_at(&cal, &torus(big, 1.0), &x, 1e-8, &opts()).unwrap();
        assert_eq!(r.verdict.is_convex(), convex, "R = {big}");
    }
}

#[test]
fn sphere_is_strictly_convex_for_every_calibration() {
    for cal in common::catalog() {
        let n = cal.dim();
        let expr = format!("0.5*({} - 1)", (1..=n).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join(" + "));
        let rho = DefiningFunction::parse(&expr).unwrap();
        let x = on_sphere(n, 11);
        let r = boundary_check_at(&cal, &rho, &x, 1e-8, &opts()).unwrap_or_else(|e| panic!("{}: {e}", cal.spec()));
        match r.min_trace {
            Some(m) => {
                assert_eq!(r.verdict, BoundaryVerdict::Strict, "{}", cal.spec());
                assert!((m.value - cal.degree() as f64).abs() < 1e-6, "{}: {}", cal.spec(), m.value);
            }
            None => assert!(r.diagnostic.is_some()),
        }
    }
}

#[test]
fn boundary_preconditions() {
    let cal = Calibration::from_spec("kahler:2").unwrap();
    let rho = DefiningFunction::parse("0.5*(x1^2 + x2^2 + x3^2 + x4^2 - 1)").unwrap();
    let inside = Vector::from_vec(vec![0.1, 0.2, 0.0, 0.0]);
    assert!(matches!(boundary_check_at(&cal, &rho, &inside, 1e-8, &opts()), Err(Error::NotOnBoundary(_))));
    let cone = DefiningFunction::parse("x1^2 + x2^2 - x3^2 - x4^2").unwrap();
    assert!(boundary_check_at(&cal, &cone, &Vector::zeros(4), 1e-8, &opts()).is_err());
    let projected = rho.project(&Vector::from_vec(vec![0.3, -1.2, 0.5, 0.1])).unwrap();
    assert!((projected.norm() - 1.0).abs() < 1e-10);
}

#[test]
fn defining_function_rescaling_matches_verdicts_on_torus() {
    let cal = Calibration::from_spec("axis_volume:xy").unwrap();
    for big in [1.8, 2.2] {
        let rho = torus(big, 1.0);
        let scaled = DefiningFunction::new(
            ScalarField::product(ScalarField::parse("1 + (x1^2 + x2^2 + x3^2)/4").unwrap(), rho.rho.clone()),
            "scaled torus",
        );
        for x in torus_points(big, 1.0) {
            let a = boundary_check_at(&cal, &rho, &x, 1e-8, &opts()).unwrap();
            let b = boundary_check_at(&cal, &scaled, &x, 1e-8, &opts()).unwrap();
            assert_eq!(a.verdict, b.verdict);
            if let (Some(ma), Some(mb)) = (a.min_trace, b.min_trace) {
                let u = 1.0 + x.norm_squared() / 4.0;
                assert!((mb.value - u * ma.value).abs() <= 1e-8);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rescaled_defining_function_scales_tangential_traces(seed in 0u64..10_000, p in 1usize..5) {
        let rho = DefiningFunction::parse("x1^2 + 2*x2^2 + x3^2*x4 + 0.5*x5^2 + x6^4 - 1").unwrap();
        let u = ScalarField::parse("1 + (x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + x6^2)/4").unwrap();
        let x = rho.project(&common::random_point(6, seed, 1)).unwrap();
        let grad = rho.rho.jet(&x).unwrap().gradient;
        let xi = tangential_plane(&grad, p, seed);
        let plain = xi.trace_on(&rho.rho.hessian(&x).unwrap()).unwrap();
        let product = ScalarField::product(u.clone(), rho.rho.clone());
        let lhs = xi.trace_on(&product.hessian(&x).unwrap()).unwrap();
        let uval = u.value(&x).unwrap();
        prop_assert!((lhs - uval * plain).abs() <= 1e-8 * (1.0 + plain.abs()));
    }

    #[test]
    fn composition_identity_holds_on_any_plane(seed in 0u64..10_000, p in 1usize..6) {
        let rho = ScalarField::parse(&common::random_polynomial(6, seed)).unwrap();
        let psi = ScalarField::parse("exp(0.3*x1) + x1^3 - sin(x1)").unwrap();
        let x = common::random_point(6, seed, 2);
        let xi = OrientedPlane::sample_uniform(6, p, &mut rng_for(seed, 4));
        let r = composition_trace_residual(&psi, &rho, &x, &xi).unwrap();
        let scale = 1.0 + ScalarField::compose(psi.clone(), vec![rho.clone()]).hessian(&x).unwrap().norm();
        prop_assert!(r.abs() <= 1e-8 * scale, "residual {}", r);
    }
}

#[test]
fn log_distance_closed_form_matches_direct_hessian() {
    for spec in ["kahler:2", "special_lagrangian:3", "associative"] {
        let cal = Calibration::from_spec(spec).unwrap();
        let n = cal.dim();
        let expr = format!("{} - 2", (1..=n).map(|i| format!("{}*x{i}^2", 1.0 + 0.25 * i as f64)).collect::<Vec<_>>().join(" + "));
        let rho = DefiningFunction::parse(&expr).unwrap();
        for s in 0..20 {
            let x = on_sphere(n, 100 + s) * 0.6;
            let r = log_delta_strictness(&cal, &rho, &x, &opts()).unwrap();
            assert!(r.relative_residual <= 1e-8, "{spec}: {}", r.relative_residual);
            assert!((r.min_trace.value - r.direct_min).abs() <= 1e-6 * (1.0 + r.direct_min.abs()));
        }
    }
}

#[test]
fn log_distance_near_strict_and_failing_boundaries() {
    let cal = Calibration::from_spec("special_lagrangian:3").unwrap();
    let x = on_sphere(6, 5) * 0.95f64.sqrt();
    let r = log_delta_strictness(&cal, &unit_sphere(), &x, &opts()).unwrap();
    assert!((r.delta - 0.025).abs() < 1e-12);
    assert!(r.min_trace.value > 0.0);

    let flat = Calibration::from_spec("axis_volume:xy").unwrap();
    let rho = torus(1.8, 1.0);
    let x = Vector::from_vec(vec![0.0, 0.0, 1.8 - 0.999f64.sqrt()]);
    let r = log_delta_strictness(&flat, &rho, &x, &opts()).unwrap();
    assert!((r.delta - 1e-3).abs() < 1e-12);
    assert!(r.min_trace.value < 0.0);

    let outside = Vector::from_vec(vec![0.0, 0.0, 0.5]);
    assert!(matches!(log_delta_strictness(&flat, &rho, &outside, &opts()), Err(Error::NotInterior(_))));
}

#[test]
fn rho_bar_search() {
    let cal = Calibration::from_spec("kahler:3").unwrap();
    let pts: Vec<Vector> = (0..10).map(|s| on_sphere(6, 200 + s)).collect();
    let r = rho_bar_construction(&cal, &unit_sphere(), &pts, 1e6, 1e-8, &opts()).unwrap();
    assert_eq!(r.a, 0.0);

    let flat = Calibration::from_spec("axis_volume:xy").unwrap();
    let r = rho_bar_construction(&flat, &torus(2.5, 1.0), &torus_points(2.5, 1.0), 1e6, 1e-8, &opts()).unwrap();
    assert!(r.a.is_finite() && r.min_trace > 0.0);
    let field = calgeom::convexity::rho_bar(&torus(2.5, 1.0).rho, r.a);
    for x in torus_points(2.5, 1.0) {
        assert_eq!(classify(&flat, &field, &x, 1e-8, &opts()).unwrap().kind, VerdictKind::StrictlyPsh);
    }

    let err = rho_bar_construction(&flat, &torus(1.8, 1.0), &torus_points(1.8, 1.0), 1e6, 1e-8, &opts()).unwrap_err();
    assert!(matches!(err, Error::BudgetExhausted(_)));
}

#[test]
fn second_fundamental_form_traces() {
    let rho = unit_sphere();
    for p in 1..6 {
        let x = on_sphere(6, p as u64);
        let xi = tangential_plane(&x, p, 7);
        assert!((second_fundamental_trace(&rho, &x, &xi).unwrap() + p as f64).abs() < 1e-10);
    }
    let off = OrientedPlane::axis(6, &[0, 1]);
    let x = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert!(matches!(second_fundamental_trace(&rho, &x, &off), Err(Error::NotTangential(_))));

    let cylinder = DefiningFunction::parse("x1^2 + x2^2 - 1").unwrap();
    let x = Vector::from_vec(vec![0.6, 0.8, 3.0]);
    let axis = OrientedPlane::axis(3, &[2]);
    assert!(second_fundamental_trace(&cylinder, &x, &axis).unwrap().abs() < 1e-12);

    let xy = OrientedPlane::axis(3, &[0, 1]);
    for big in [1.7, 1.9, 2.1, 2.6] {
        let x = Vector::from_vec(vec![0.0, 0.0, big - 1.0]);
        let t = second_fundamental_trace(&torus(big, 1.0), &x, &xy).unwrap();
        // |∇ρ| = 2r on the torus; tr Hess ρ = 2 − 2r/(R − r) on the inner equator
        let expected = -(2.0 - 2.0 / (big - 1.0)) / 2.0;
        assert!((t - expected).abs() < 1e-10);
        assert_eq!(t > 0.0, big < 2.0);
    }
}

#[test]
fn free_subspace_examples() {
    let search = SearchOptions::with_starts(32, 0);
    let e = |n: usize, idx: &[usize]| Matrix::from_columns(&idx.iter().map(|&i| Vector::from_fn(n, |r, _| (r == i) as u8 as f64)).collect::<Vec<_>>());

    let kahler = Calibration::from_spec("kahler:2").unwrap();
    assert_eq!(is_free_subspace(&kahler, &e(4, &[0, 2]), &search).unwrap().status, FreeStatus::Free);
    for s in 0..10 {
        let w = gaussian_matrix(4, 3, &mut rng_for(300, s));
        let t = is_free_subspace(&kahler, &w, &search).unwrap();
        assert_eq!(t.status, FreeStatus::NotFree);
        let witness = t.witness.unwrap();
        let q = qr_positive(&w).unwrap().0;
        let outside = witness.frame() - &q * (q.transpose() * witness.frame());
        assert!(outside.norm() < 1e-9);
        assert!(kahler.is_calibrated(&witness, 1e-9));
    }

    let sl = Calibration::from_spec("special_lagrangian:3").unwrap();
    assert_eq!(is_free_subspace(&sl, &e(6, &[0, 1, 2, 3]), &search).unwrap().status, FreeStatus::Free);
    assert_eq!(is_free_subspace(&sl, &e(6, &[1, 3, 4, 5]), &search).unwrap().status, FreeStatus::NotFree);

    let assoc = Calibration::from_spec("associative").unwrap();
    let low = is_free_subspace(&assoc, &gaussian_matrix(7, 2, &mut rng_for(301, 0)), &search).unwrap();
    assert_eq!(low.status, FreeStatus::Free);
    assert_eq!(low.value, 0.0);
}

#[test]
fn free_dimensions_match_the_characterizations() {
    let search = SearchOptions::with_starts(24, 1);
    for spec in ["kahler:2", "special_lagrangian:3", "associative", "coassociative", "cayley", "quaternionic:2", "double_point:3", "axis_volume:xy", "anisotropic2:0.5"]
    {
        let cal = Calibration::from_spec(spec).unwrap();
        let r = free_dimension(&cal, 30, &search).unwrap();
        let analytic = analytic_free_dimension(&cal).unwrap();
        assert!(r.fd_monte_carlo <= analytic, "{spec}");
        assert_eq!(r.fd, analytic, "{spec}");
        assert_ne!(r.monotone_checked, Some(false), "{spec}");
        for c in &r.constructions {
            assert_eq!(c.test.status, c.expected, "{spec}: {}", c.description);
        }
    }
}

#[test]
fn power_form_free_dimension_fixtures() {
    let search = SearchOptions::with_starts(24, 2);
    for (spec, fixture) in [("kahler_power:3,2", 4), ("quaternionic_power:2,2", 7)] {
        let cal = Calibration::from_spec(spec).unwrap();
        let r = free_dimension(&cal, 30, &search).unwrap();
        assert_eq!(r.fd, fixture, "{spec}");
        assert!(r.fd_monte_carlo <= fixture);
    }
}

#[test]
fn kernel_of_a_strict_hessian_is_free() {
    let search = SearchOptions::with_starts(32, 3);
    let cases: Vec<(&str, Matrix)> = vec![
        ("kahler:2", Matrix::from_columns(&[Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]), Vector::from_vec(vec![0.0, 0.0, 1.0, 0.0])])),
        ("special_lagrangian:3", Matrix::identity(6, 4)),
        ("associative", gaussian_matrix(7, 2, &mut rng_for(302, 0))),
    ];
    for (spec, tangent) in cases {
        let cal = Calibration::from_spec(spec).unwrap();
        let n = cal.dim();
        let origin = common::random_point(n, 302, 1);
        let f = ScalarField::half_dist_sq(origin.clone(), &tangent).unwrap();
        let v = classify(&cal, &f, &origin, 1e-8, &opts()).unwrap();
        assert_eq!(v.kind, VerdictKind::StrictlyPsh, "{spec}");
        let kernel = null_space(&f.hessian(&origin).unwrap(), 1e-8);
        assert_eq!(kernel.ncols(), tangent.ncols());
        assert_eq!(is_free_subspace(&cal, &kernel, &search).unwrap().status, FreeStatus::Free, "{spec}");
    }
}

#[test]
fn half_distance_squared_to_affine_subspaces() {
    let line = Calibration::from_spec("axis_volume:xy").unwrap();
    let origin = Vector::from_vec(vec![0.0, 1.0, -2.0]);
    let r = dist_sq_free_test(&line, &origin, &Matrix::identity(3, 1), &Vector::from_vec(vec![4.0, 1.0, -2.0]), 1e-8, &opts()).unwrap();
    assert!(r.hessian_error <= 1e-12);
    let f = ScalarField::half_dist_sq(origin, &Matrix::identity(3, 1)).unwrap();
    let h = f.hessian(&Vector::from_vec(vec![0.3, 0.1, 0.7])).unwrap();
    assert!((h - Matrix::from_diagonal(&Vector::from_vec(vec![0.0, 1.0, 1.0]))).norm() <= 1e-12);

    let kahler = Calibration::from_spec("kahler:2").unwrap();
    let origin = Vector::from_vec(vec![0.5, -1.0, 2.0, 0.25]);
    let real = Matrix::from_columns(&[Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]), Vector::from_vec(vec![0.0, 0.0, 1.0, 0.0])]);
    let r = dist_sq_free_test(&kahler, &origin, &real, &origin, 1e-8, &opts()).unwrap();
    assert!(r.hessian_error <= 1e-12);
    assert_eq!(r.verdict.kind, VerdictKind::StrictlyPsh);

    let complex_line = Matrix::from_columns(&[Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]), Vector::from_vec(vec![0.0, 1.0, 0.0, 0.0])]);
    let r = dist_sq_free_test(&kahler, &origin, &complex_line, &origin, 1e-8, &opts()).unwrap();
    assert!(r.hessian_error <= 1e-12);
    assert_eq!(r.verdict.kind, VerdictKind::PshNotStrict);

    let off = &origin + Vector::from_vec(vec![0.0, 0.0, 1.0, 0.0]);
    assert!(dist_sq_free_test(&kahler, &origin, &complex_line, &off, 1e-8, &opts()).is_err());
}

#[test]
fn ellipticity_examples() {
    let an = Calibration::from_spec("anisotropic2:0.5").unwrap();
    let r = ellipticity_check(&an, &opts()).unwrap();
    assert_eq!(r.status, EllipticStatus::NotElliptic);
    assert!(r.worst_value < 1e-6);
    let plane = an.reference_plane().unwrap();
    assert!((plane.frame().transpose() * &r.worst_vector).norm() < 1e-9);

    let dp = Calibration::from_spec("double_point:3").unwrap();
    let r = ellipticity_check(&dp, &opts()).unwrap();
    assert_eq!(r.status, EllipticStatus::Elliptic);
    assert_eq!(r.planes.len(), 2);

    for spec in ["kahler:2", "special_lagrangian:3", "associative", "cayley", "quaternionic:2"] {
        let cal = Calibration::from_spec(spec).unwrap();
        assert_eq!(ellipticity_check(&cal, &opts()).unwrap().status, EllipticStatus::Elliptic, "{spec}");
    }
}

#[test]
fn mollifying_laplacians() {
    for spec in ["quaternionic:2", "double_point:3"] {
        let cal = Calibration::from_spec(spec).unwrap();
        let m = mollifying_laplacian(&cal, &opts()).unwrap();
        assert!(m.lambda_min >= 1e-3);
        assert!((&m.matrix - Matrix::identity(cal.dim(), cal.dim())).norm() <= 1e-12, "{spec}");
        assert!(m.planes.iter().all(|p| cal.is_calibrated(p, 1e-9)));
    }

    let cal = Calibration::from_spec("quaternionic:2").unwrap();
    let m = mollifying_laplacian(&cal, &opts()).unwrap();
    for s in 0..50 {
        let h = random_symmetric(8, &mut rng_for(303, s));
        let lowest = min_trace_over_g(&cal, &h, &opts()).unwrap().value;
        let shifted = &h - Matrix::identity(8, 8) * (lowest / cal.degree() as f64);
        let check = min_trace_over_g(&cal, &shifted, &opts()).unwrap().value;
        assert!(check >= -1e-9);
        assert!(frobenius_dot(&shifted, &m.matrix) >= -1e-8);
    }

    for spec in ["kahler:2", "associative", "cayley", "special_lagrangian:3"] {
        let cal = Calibration::from_spec(spec).unwrap();
        assert!(mollifying_laplacian(&cal, &opts()).unwrap().lambda_min >= 1e-3, "{spec}");
    }

    let an = Calibration::from_spec("anisotropic2:0.5").unwrap();
    assert!(matches!(mollifying_laplacian(&an, &opts()), Err(Error::NotElliptic(_))));
}
