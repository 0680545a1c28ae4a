use std::hint::black_box;

use calgeom::calibrations::comass;
use calgeom::psh::{min_trace_over_g, TraceOptions};
use calgeom::{Calibration, Matrix, OrientedPlane, ScalarField, SearchOptions, Vector};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let a = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

fn form_evaluation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for spec in ["kahler:3", "associative", "cayley"] {
        let cal = Calibration::from_spec(spec).unwrap();
        let plane = OrientedPlane::sample_uniform(cal.dim(), cal.degree(), &mut rng);
        c.bench_function(&format!("evaluate/{spec}"), |b| b.iter(|| cal.form().evaluate(black_box(plane.frame()))));
        c.bench_function(&format!("evaluate_with_gradient/{spec}"), |b| {
            b.iter(|| cal.form().evaluate_with_gradient(black_box(plane.frame())))
        });
    }
}

fn comass_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("comass");
    group.sample_size(10);
    for spec in ["kahler:3", "associative"] {
        let cal = Calibration::from_spec(spec).unwrap();
        group.bench_function(spec, |b| b.iter(|| comass(cal.form(), &SearchOptions::with_starts(16, 0))));
    }
    group.finish();
}

fn min_trace(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut group = c.benchmark_group("min_trace");
    group.sample_size(10);
    for spec in ["kahler:3", "quaternionic:2", "special_lagrangian:3"] {
        let cal = Calibration::from_spec(spec).unwrap();
        let h = random_symmetric(cal.dim(), &mut rng);
        group.bench_function(format!("default/{spec}"), |b| b.iter(|| min_trace_over_g(&cal, black_box(&h), &TraceOptions::default())));
        group.bench_function(format!("structured/{spec}"), |b| {
            b.iter(|| min_trace_over_g(&cal, black_box(&h), &TraceOptions::structured(16, 0)))
        });
    }
    group.finish();
}

fn field_jets(c: &mut Criterion) {
    let f = ScalarField::parse("log(1 + x1^2 + x2^2) * exp(x3) - sqrt(x4^2 + x5^2 + x6^2 + 1)").unwrap();
    let x = Vector::from_vec(vec![0.3, -0.2, 0.1, 0.7, -0.4, 0.9]);
    c.bench_function("jet/six_variables", |b| b.iter(|| f.jet(black_box(&x))));
    c.bench_function("hessian/six_variables", |b| b.iter(|| f.hessian(black_box(&x))));
}

fn derivation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for spec in ["kahler:3", "cayley"] {
        let cal = Calibration::from_spec(spec).unwrap();
        let a = random_symmetric(cal.dim(), &mut rng);
        c.bench_function(&format!("lambda_map/{spec}"), |b| b.iter(|| cal.lambda_map(black_box(&a))));
    }
}

criterion_group!(benches, form_evaluation, comass_search, min_trace, field_jets, derivation);
criterion_main!(benches);
