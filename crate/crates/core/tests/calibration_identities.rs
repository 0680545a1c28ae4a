mod common;

use calgeom::calibrations::{comass, SearchOptions};
use calgeom::linalg::{gaussian_matrix, gaussian_vector, random_symmetric, rng_for, sym_product};
use calgeom::{Calibration, Matrix, OrientedPlane, Vector};
use common::{catalog, CATALOG};

fn apply_derivation(cal: &Calibration, a: &Matrix, frame: &Matrix) -> f64 {
    (0..frame.ncols())
        .map(|k| {
            let mut f = frame.clone();
            f.set_column(k, &(a * frame.column(k)));
            cal.form().evaluate(&f)
        })
        .sum()
}

#[test]
fn lambda_of_symmetric_matrix_is_plane_trace() {
    for cal in catalog() {
        let n = cal.dim();
        let mut worst: f64 = 0.0;
        for s in 0..1000u64 {
            let mut rng = rng_for(11, s);
            let a = random_symmetric(n, &mut rng);
            let xi = cal.sample_calibrated_plane(&mut rng).unwrap();
            let lhs = cal.lambda_map(&a).unwrap().evaluate(xi.frame());
            worst = worst.max((lhs - xi.trace_on(&a).unwrap()).abs());
        }
        assert!(worst <= 1e-9, "{}: {worst:e}", cal.spec());
    }
}

#[test]
fn general_derivation_identity_on_random_planes() {
    for cal in catalog() {
        let (n, p) = (cal.dim(), cal.degree());
        for s in 0..1000u64 {
            let mut rng = rng_for(12, s);
            let a = gaussian_matrix(n, n, &mut rng);
            let xi = OrientedPlane::sample_uniform(n, p, &mut rng);
            let pr = xi.projector();
            let tilde = (Matrix::identity(n, n) - &pr) * &a * &pr;
            let lhs = cal.lambda_map(&a).unwrap().evaluate(xi.frame());
            let rhs = xi.trace_on(&a).unwrap() * cal.value(&xi) + apply_derivation(&cal, &tilde, xi.frame());
            assert!((lhs - rhs).abs() <= 1e-9, "{}: {lhs} vs {rhs}", cal.spec());
        }
    }
}

#[test]
fn skew_matrices_and_cousins_vanish_on_calibrated_planes() {
    for cal in catalog() {
        let n = cal.dim();
        for s in 0..1000u64 {
            let mut rng = rng_for(13, s);
            let g = gaussian_matrix(n, n, &mut rng);
            let skew = (&g - g.transpose()) * 0.5;
            let xi = cal.sample_calibrated_plane(&mut rng).unwrap();
            assert!(cal.lambda_map(&skew).unwrap().evaluate(xi.frame()).abs() <= 1e-9, "{}", cal.spec());
            if s % 10 == 0 {
                assert!(cal.cousin_values(&xi).iter().all(|v| v.abs() <= 1e-9), "{}", cal.spec());
                assert!(cal.is_critical(&xi, 1e-9));
            }
        }
    }
}

#[test]
fn symmetric_product_traces_project_vectors() {
    for cal in catalog() {
        let n = cal.dim();
        for s in 0..200u64 {
            let mut rng = rng_for(14, s);
            let v = gaussian_vector(n, &mut rng);
            let w = gaussian_vector(n, &mut rng);
            let xi = cal.sample_calibrated_plane(&mut rng).unwrap();
            let pr = xi.projector();
            let lhs = cal.lambda_map(&sym_product(&v, &w)).unwrap().evaluate(xi.frame());
            assert!((lhs - (&pr * &v).dot(&(&pr * &w))).abs() <= 1e-9);
        }
    }
}

#[test]
fn adjoint_of_calibrated_plane_is_its_projector() {
    for cal in catalog() {
        for s in 0..5u64 {
            let xi = cal.sample_calibrated_plane(&mut rng_for(15, s)).unwrap();
            let m = cal.lambda_adjoint(&xi.simple_vector()).unwrap();
            assert!((m - xi.projector()).norm() <= 1e-9, "{}", cal.spec());
        }
    }
}

#[test]
fn adjoint_is_adjoint() {
    let cal = Calibration::from_spec("associative").unwrap();
    let mut rng = rng_for(16, 0);
    let xi = OrientedPlane::sample_uniform(7, 3, &mut rng).simple_vector();
    let a = gaussian_matrix(7, 7, &mut rng);
    let m = cal.lambda_adjoint(&xi).unwrap();
    let lhs = calgeom::linalg::frobenius_dot(&m, &a);
    assert!((lhs - xi.pairing(&cal.lambda_map(&a).unwrap()).unwrap()).abs() <= 1e-12);
}

#[test]
fn quaternionic_self_adjoint_is_scalar() {
    let cal = Calibration::from_spec("quaternionic:2").unwrap();
    let psi = cal.form();
    let m = cal.lambda_adjoint(psi).unwrap();
    let expected = 4.0 / 8.0 * psi.pairing(psi).unwrap();
    assert!((m - Matrix::identity(8, 8) * expected).norm() <= 1e-9);
}

#[test]
fn quaternionic_critical_value_one_third() {
    let cal = Calibration::from_spec("quaternionic:2").unwrap();
    let xi = OrientedPlane::axis(8, &[0, 1, 4, 5]);
    assert!((cal.value(&xi) - 1.0 / 3.0).abs() <= 1e-9);
    assert!(cal.is_critical(&xi, 1e-9));
    let m = cal.lambda_adjoint(&xi.simple_vector()).unwrap();
    assert!((m - xi.projector() * cal.value(&xi)).norm() <= 1e-8);
    let generic = OrientedPlane::sample_uniform(8, 4, &mut rng_for(17, 0));
    assert!(!cal.is_critical(&generic, 1e-7));
}

#[test]
fn proportional_adjoint_implies_critical() {
    // Critical planes are exactly those whose adjoint image is a multiple of the projector.
    let cal = Calibration::from_spec("quaternionic:2").unwrap();
    let candidates = [
        OrientedPlane::axis(8, &[0, 1, 4, 5]),
        OrientedPlane::axis(8, &[0, 1, 2, 3]),
        OrientedPlane::axis(8, &[0, 2, 4, 6]),
        OrientedPlane::sample_uniform(8, 4, &mut rng_for(18, 0)),
    ];
    for xi in candidates {
        let m = cal.lambda_adjoint(&xi.simple_vector()).unwrap();
        let c = calgeom::linalg::frobenius_dot(&m, &xi.projector()) / 4.0;
        if (&m - xi.projector() * c).norm() <= 1e-8 {
            assert!(cal.is_critical(&xi, 1e-7));
            assert!((c - cal.value(&xi)).abs() <= 1e-8);
        }
    }
}

#[test]
fn comass_of_every_catalog_entry_is_one() {
    for cal in catalog() {
        let r = comass(cal.form(), &SearchOptions::with_starts(64, 0));
        assert!(r.value >= 1.0 - 1e-6 && r.value <= 1.0 + 1e-9, "{}: {}", cal.spec(), r.value);
        assert!(cal.is_calibrated(&r.witness, 1e-6));
    }
}

#[test]
fn anisotropic_form_has_a_unique_calibrated_plane() {
    let cal = Calibration::from_spec("anisotropic2:0.5").unwrap();
    let r = comass(cal.form(), &SearchOptions::with_starts(64, 0));
    let target = OrientedPlane::axis(4, &[0, 1]).projector();
    assert!((r.witness.projector() - target).norm() <= 1e-5);
}

#[test]
fn samplers_land_in_g_phi() {
    for cal in catalog() {
        for s in 0..2000u64 {
            let xi = cal.sample_calibrated_plane(&mut rng_for(19, s)).unwrap();
            assert!(cal.is_calibrated(&xi, 1e-10), "{}", cal.spec());
        }
    }
    let dp = Calibration::from_spec("double_point:3").unwrap();
    let mut distinct: Vec<OrientedPlane> = Vec::new();
    for s in 0..200u64 {
        let xi = dp.sample_calibrated_plane(&mut rng_for(20, s)).unwrap();
        if !distinct.iter().any(|d| d.same_span(&xi)) {
            distinct.push(xi);
        }
    }
    assert_eq!(distinct.len(), 2);
    let k = Calibration::from_spec("kahler:2").unwrap();
    let xi = k.sample_calibrated_plane(&mut rng_for(21, 0)).unwrap();
    let j = &k.complex_structures()[0];
    assert!((xi.projector() * j * xi.frame() - j * xi.frame()).norm() <= 1e-10);
}

#[test]
fn orientation_matters() {
    let k = Calibration::from_spec("kahler:2").unwrap();
    let line = OrientedPlane::axis(4, &[0, 1]);
    assert!(k.is_calibrated(&line, 1e-12));
    assert!(!k.is_calibrated(&line.reversed(), 1e-12));
    let sl = Calibration::from_spec("special_lagrangian:3").unwrap();
    assert!(sl.is_calibrated(&OrientedPlane::axis(6, &[0, 2, 4]), 1e-12));
}

#[test]
fn complex_structures_are_compatible() {
    for spec in ["kahler:3", "quaternionic:2"] {
        let cal = Calibration::from_spec(spec).unwrap();
        let n = cal.dim();
        let s = cal.complex_structures();
        for a in s {
            assert!((a * a + Matrix::identity(n, n)).norm() <= 1e-12);
        }
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                assert!((&s[i] * &s[j] + &s[j] * &s[i]).norm() <= 1e-12);
            }
        }
    }
}

#[test]
fn richness_search() {
    let opts = SearchOptions::with_starts(16, 0);
    for spec in ["special_lagrangian:3", "associative"] {
        let cal = Calibration::from_spec(spec).unwrap();
        for s in 0..5u64 {
            let mut rng = rng_for(22, s);
            let pl = OrientedPlane::sample_uniform(cal.dim(), 2, &mut rng);
            let ell: Vector = pl.frame() * gaussian_vector(2, &mut rng);
            let r = cal.is_rich_at(pl.frame(), &ell, &opts).unwrap();
            assert!(r.rich, "{spec}: {}", r.value);
            assert!(cal.is_calibrated(&r.witness, 1e-6));
        }
    }
    let k = Calibration::from_spec("kahler:2").unwrap();
    let p = OrientedPlane::axis(4, &[0, 1]);
    let ell = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    let r = k.is_rich_at(p.frame(), &ell, &opts).unwrap();
    assert!(!r.rich);
    assert!(r.diagnostic.is_some());
}

#[test]
fn catalog_names_are_exact() {
    let names: Vec<&str> = calgeom::calibrations::CATALOG.iter().map(|e| e.name).collect();
    for spec in CATALOG {
        let name = spec.split(':').next().unwrap();
        assert!(names.contains(&name));
    }
    assert_eq!(names.len(), 11);
}
