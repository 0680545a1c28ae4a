#![allow(dead_code)]

use calgeom::linalg::rng_for;
use calgeom::{Calibration, Matrix, Vector};
use rand::Rng;

pub const CATALOG: [&str; 11] = [
    "kahler:2",
    "kahler_power:3,2",
    "special_lagrangian:3",
    "quaternionic:2",
    "quaternionic_power:2,2",
    "associative",
    "coassociative",
    "cayley",
    "double_point:3",
    "axis_volume:xy",
    "anisotropic2:0.5",
];

pub fn catalog() -> Vec<Calibration> {
    CATALOG.iter().map(|s| Calibration::from_spec(s).unwrap()).collect()
}

/// Random polynomial of degree ≤ 3 in `n` variables, as an expression string.
pub fn random_polynomial(n: usize, seed: u64) -> String {
    let mut rng = rng_for(seed, 0xF00D);
    let terms = rng.random_range(3..7);
    let mut out = Vec::new();
    for _ in 0..terms {
        let c: f64 = rng.random_range(-2.0..2.0);
        let deg = rng.random_range(0..4);
        let mut t = format!("{c:.6}");
        for _ in 0..deg {
            t.push_str(&format!("*x{}", rng.random_range(1..=n)));
        }
        out.push(t);
    }
    out.join(" + ")
}

pub fn random_point(n: usize, seed: u64, stream: u64) -> Vector {
    let mut rng = rng_for(seed, stream);
    calgeom::linalg::gaussian_vector(n, &mut rng)
}

pub fn random_sym(n: usize, seed: u64, stream: u64) -> Matrix {
    let mut rng = rng_for(seed, stream);
    calgeom::linalg::random_symmetric(n, &mut rng)
}
