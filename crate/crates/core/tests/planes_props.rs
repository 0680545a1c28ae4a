use calgeom::linalg::{gaussian_matrix, rng_for};
use calgeom::{Form, Matrix, OrientedPlane, TangentDirection};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_planes_are_unit_and_projectors_idempotent(seed in any::<u64>(), n in 1usize..8, p in 1usize..8) {
        prop_assume!(p <= n);
        let xi = OrientedPlane::sample_uniform(n, p, &mut rng_for(seed, 0));
        let f = xi.frame();
        prop_assert!((f.transpose() * f - Matrix::identity(p, p)).norm() <= 1e-10);
        prop_assert!((xi.simple_vector().norm() - 1.0).abs() <= 1e-10);
        let pr = xi.projector();
        prop_assert!((&pr * &pr - &pr).norm() <= 1e-12);
        prop_assert!((pr.trace() - p as f64).abs() <= 1e-12);
    }

    #[test]
    fn plane_trace_ignores_skew_part(seed in any::<u64>(), n in 2usize..7, p in 1usize..6) {
        prop_assume!(p <= n);
        let mut rng = rng_for(seed, 0);
        let xi = OrientedPlane::sample_uniform(n, p, &mut rng);
        let a = gaussian_matrix(n, n, &mut rng);
        let sym = (&a + a.transpose()) * 0.5;
        prop_assert!((xi.trace_on(&a).unwrap() - xi.trace_on(&sym).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn projector_pairing_is_nonnegative(seed in any::<u64>(), n in 2usize..7, p in 1usize..6, q in 1usize..6) {
        prop_assume!(p <= n && q <= n);
        let mut rng = rng_for(seed, 0);
        let xi = OrientedPlane::sample_uniform(n, p, &mut rng);
        let w = OrientedPlane::sample_uniform(n, q, &mut rng);
        let pair = calgeom::linalg::frobenius_dot(&w.projector(), &xi.projector());
        prop_assert!(pair >= -1e-12);
        let orth = OrientedPlane::from_columns(&xi.complement()).ok();
        if let Some(o) = orth {
            let pair = calgeom::linalg::frobenius_dot(&o.projector(), &xi.projector());
            prop_assert!(pair.abs() <= 1e-10);
            prop_assert!((o.projector() * xi.frame()).norm() <= 1e-10);
        }
    }

    #[test]
    fn cousins_are_orthonormal_and_orthogonal_to_the_plane(seed in any::<u64>(), n in 2usize..7, p in 1usize..6) {
        prop_assume!(p < n);
        let xi = OrientedPlane::sample_uniform(n, p, &mut rng_for(seed, 0));
        let cousins = xi.first_cousins();
        prop_assert_eq!(cousins.len(), p * (n - p));
        let sv = xi.simple_vector();
        for (i, a) in cousins.iter().enumerate() {
            prop_assert!(a.pairing(&sv).unwrap().abs() <= 1e-10);
            for (j, b) in cousins.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((a.pairing(b).unwrap() - expected).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn retraction_is_first_order_along_cousins(seed in any::<u64>(), n in 2usize..6, p in 1usize..5) {
        prop_assume!(p < n);
        let mut rng = rng_for(seed, 0);
        let xi = OrientedPlane::sample_uniform(n, p, &mut rng);
        let b = gaussian_matrix(n - p, p, &mut rng);
        let eps = 1e-5;
        let dir = TangentDirection::new(&xi, &b * eps).unwrap();
        let moved = xi.retract(&dir).unwrap().simple_vector();
        let cousins = xi.first_cousins();
        let mut predicted = xi.simple_vector();
        for bi in 0..n - p {
            for a in 0..p {
                predicted = predicted.add(&cousins[bi * p + a].scale(eps * b[(bi, a)])).unwrap();
            }
        }
        prop_assert!(moved.distance(&predicted).unwrap() <= 10.0 * eps * eps * (1.0 + b.norm_squared()));
    }

    #[test]
    fn retraction_is_lipschitz(seed in any::<u64>(), n in 2usize..6, p in 1usize..5, scale in 0.0f64..1.0) {
        prop_assume!(p < n);
        let mut rng = rng_for(seed, 0);
        let xi = OrientedPlane::sample_uniform(n, p, &mut rng);
        let g = gaussian_matrix(n - p, p, &mut rng);
        let b = &g * (scale / g.norm().max(1e-300));
        let moved = xi.retract(&TangentDirection::new(&xi, b.clone()).unwrap()).unwrap();
        let d = moved.simple_vector().distance(&xi.simple_vector()).unwrap();
        prop_assert!(d <= 2.0 * b.norm() + 1e-14);
    }
}

#[test]
fn first_cousin_list_matches_contract_then_wedge() {
    let xi = OrientedPlane::axis(3, &[0, 1]);
    let sv = xi.simple_vector();
    let e3 = calgeom::Vector::from_vec(vec![0.0, 0.0, 1.0]);
    let cousins = xi.first_cousins();
    for a in 0..2 {
        let mut ea = calgeom::Vector::zeros(3);
        ea[a] = 1.0;
        let direct = Form::one_form(&e3).wedge(&sv.contract(&ea).unwrap()).unwrap();
        assert!(cousins[a].distance(&direct).unwrap() <= 1e-14);
    }
    assert_eq!(OrientedPlane::axis(7, &[0, 1, 2]).first_cousins().len(), 12);
}

#[test]
fn mean_projector_is_isotropic() {
    let mut rng = rng_for(3, 0);
    let mut acc = Matrix::zeros(4, 4);
    let samples = 100_000;
    for _ in 0..samples {
        acc += OrientedPlane::sample_uniform(4, 2, &mut rng).projector();
    }
    acc /= samples as f64;
    assert!((acc - Matrix::identity(4, 4) * 0.5).amax() <= 0.01);
}

#[test]
fn fixed_seed_is_reproducible() {
    let a = OrientedPlane::sample_uniform(5, 2, &mut rng_for(42, 0));
    let b = OrientedPlane::sample_uniform(5, 2, &mut rng_for(42, 0));
    assert_eq!(a.frame(), b.frame());
}
