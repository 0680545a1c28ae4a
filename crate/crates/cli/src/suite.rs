use calgeom::calibrations::CATALOG;
use calgeom::convexity::composition_trace_residual;
use calgeom::fields::{d_phi, dd_phi, hodge_identity_residual};
use calgeom::linalg::{gaussian_matrix, gaussian_vector, random_symmetric, rng_for};
use calgeom::psh::phi_hessian;
use calgeom::{Calibration, Form, Matrix, OrientedPlane, Result, ScalarField};
use rand::Rng;
use rayon::prelude::*;

use crate::report::{Outcome, Row};

/// Worst residual of one identity on one calibration.
pub struct Check {
    pub identity: &'static str,
    pub calibration: String,
    pub worst: f64,
    pub tol: f64,
    pub cases: usize,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }
}

type Identity = fn(&Calibration, u64, usize) -> Result<f64>;

const IDENTITIES: [(&str, f64, Identity); 7] = [
    ("plane_trace", 1e-9, plane_trace),
    ("derivation_split", 1e-9, derivation_split),
    ("gradient_contraction", 1e-9, gradient_contraction),
    ("dd_phi_two_path", 1e-8, dd_phi_two_path),
    ("hodge_identity", 1e-9, hodge_identity),
    ("composition_trace", 1e-8, composition_trace),
    ("chain_rule", 1e-9, chain_rule),
];

fn polynomial(n: usize, seed: u64, stream: u64) -> String {
    let mut rng = rng_for(seed, stream);
    let terms = rng.random_range(3..7);
    (0..terms)
        .map(|_| {
            let mut t = format!("{:.6}", rng.random_range(-2.0..2.0));
            for _ in 0..rng.random_range(0..4) {
                t.push_str(&format!("*x{}", rng.random_range(1..=n)));
            }
            t
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn plane_trace(cal: &Calibration, seed: u64, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in 0..cases as u64 {
        let mut rng = rng_for(seed, 0x1000 + s);
        let a = random_symmetric(cal.dim(), &mut rng);
        let xi = cal.sample_calibrated_plane(&mut rng)?;
        let lhs = cal.lambda_map(&a)?.evaluate(xi.frame());
        worst = worst.max((lhs - xi.trace_on(&a)?).abs());
    }
    Ok(worst)
}

fn derivation_split(cal: &Calibration, seed: u64, cases: usize) -> Result<f64> {
    let (n, p) = (cal.dim(), cal.degree());
    let mut worst: f64 = 0.0;
    for s in 0..cases as u64 {
        let mut rng = rng_for(seed, 0x2000 + s);
        let a = gaussian_matrix(n, n, &mut rng);
        let xi = OrientedPlane::sample_uniform(n, p, &mut rng);
        let pr = xi.projector();
        let normal_part = (Matrix::identity(n, n) - &pr) * &a * &pr;
        let moved: f64 = (0..p)
            .map(|k| {
                let mut f = xi.frame().clone();
                f.set_column(k, &(&normal_part * xi.frame().column(k)));
                cal.form().evaluate(&f)
            })
            .sum();
        let lhs = cal.lambda_map(&a)?.evaluate(xi.frame());
        worst = worst.max((lhs - xi.trace_on(&a)? * cal.value(&xi) - moved).abs());
    }
    Ok(worst)
}

fn gradient_contraction(cal: &Calibration, seed: u64, cases: usize) -> Result<f64> {
    let n = cal.dim();
    let mut worst: f64 = 0.0;
    for s in 0..cases as u64 {
        let f = ScalarField::parse(&polynomial(n, seed, 0x3000 + s))?;
        let mut rng = rng_for(seed, 0x3800 + s);
        let x = gaussian_vector(n, &mut rng);
        let xi = cal.sample_calibrated_plane(&mut rng)?;
        let g = f.jet(&x)?.gradient;
        let lhs = Form::one_form(&g).wedge(&d_phi(&f, cal.form(), &x)?)?.evaluate(xi.frame());
        let contraction = (xi.frame().transpose() * &g).norm_squared();
        worst = worst.max((lhs - contraction).abs() / (1.0 + contraction));
    }
    Ok(worst)
}

fn dd_phi_two_path(cal: &Calibration, seed: u64, cases: usize) -> Result<f64> {
    let n = cal.dim();
    let mut worst: f64 = 0.0;
    for s in 0..cases as u64 {
        let f = ScalarField::parse(&polynomial(n, seed, 0x4000 + s))?;
        let x = gaussian_vector(n, &mut rng_for(seed, 0x4800 + s));
        worst = worst.max(dd_phi(&f, cal.form(), &x)?.distance(&phi_hessian(cal, &f, &x)?)?);
    }
    Ok(worst)
}

fn hodge_identity(cal: &Calibration, seed: u64, cases: usize) -> Result<f64> {
    let n = cal.dim();
    let mut worst: f64 = 0.0;
    for s in 0..cases as u64 {
        let f = ScalarField::parse(&polynomial(n, seed, 0x5000 + s))?;
        let x = gaussian_vector(n, &mut rng_for(seed, 0x5800 + s));
        worst = worst.max(hodge_identity_residual(&f, cal.form(), &x)?);
    }
    Ok(worst)
}

fn composition_trace(cal: &Calibration, seed: u64, cases: usize) -> Result<f64> {
    let n = cal.dim();
    let psi = ScalarField::parse("exp(0.3*x1) + x1^3 - sin(x1)")?;
    let mut worst: f64 = 0.0;
    for s in 0..cases as u64 {
        let rho = ScalarField::parse(&polynomial(n, seed, 0x6000 + s))?;
        let mut rng = rng_for(seed, 0x6800 + s);
        let x = gaussian_vector(n, &mut rng);
        let xi = cal.sample_calibrated_plane(&mut rng)?;
        let scale = 1.0 + ScalarField::compose(psi.clone(), vec![rho.clone()]).hessian(&x)?.norm();
        worst = worst.max(composition_trace_residual(&psi, &rho, &x, &xi)?.abs() / scale);
    }
    Ok(worst)
}

/// Composition through the jet chain rule against the substituted expression.
fn chain_rule(cal: &Calibration, seed: u64, cases: usize) -> Result<f64> {
    const OUTER: &str = "x1*x2 + x2^2 - exp(0.25*x1)";
    let n = cal.dim();
    let mut worst: f64 = 0.0;
    for s in 0..cases as u64 {
        let us = [polynomial(n, seed, 0x7000 + 2 * s), polynomial(n, seed, 0x7001 + 2 * s)];
        let composed = ScalarField::compose(
            ScalarField::parse(OUTER)?,
            us.iter().map(|u| ScalarField::parse(u)).collect::<Result<Vec<_>>>()?,
        );
        let direct = OUTER.replace("x1", "\u{1}").replace("x2", "\u{2}").replace('\u{1}', &format!("({})", us[0])).replace('\u{2}', &format!("({})", us[1]));
        let direct = ScalarField::parse(&direct)?;
        let x = gaussian_vector(n, &mut rng_for(seed, 0x7800 + s)) * 0.5;
        let (a, b) = (composed.hessian(&x)?, direct.hessian(&x)?);
        worst = worst.max((&a - &b).norm() / (1.0 + b.norm()));
    }
    Ok(worst)
}

/// Runs every identity on every catalog calibration.
pub fn run(seed: u64, cases: usize) -> Result<Vec<Check>> {
    let cals = CATALOG.iter().map(|e| Calibration::from_spec(e.default_spec)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..IDENTITIES.len()).flat_map(|i| (0..cals.len()).map(move |c| (i, c))).collect();
    jobs.par_iter()
        .map(|&(i, c)| {
            let (identity, tol, f) = IDENTITIES[i];
            let cal = &cals[c];
            let worst = f(cal, seed.wrapping_add(c as u64), cases)?;
            Ok(Check { identity, calibration: cal.spec().to_string(), worst, tol, cases })
        })
        .collect()
}

pub fn outcome(seed: u64, cases: usize) -> Result<Outcome> {
    let mut out = Outcome::new(None);
    for check in run(seed, cases)? {
        let pass = check.passed();
        if !pass {
            out.flag(crate::report::Exit::CheckFailed);
        }
        out.push(
            Row::new(format!("{}/{}", check.identity, check.calibration), check.worst, pass, "two_path")
                .with("tol", check.tol)
                .with("cases", check.cases),
        );
    }
    Ok(out)
}
