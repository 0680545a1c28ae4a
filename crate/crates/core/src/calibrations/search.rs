//! Penalty search over `G(φ)` for calibrations without a structured sampler.

use rayon::prelude::*;

use super::comass::{ascend, best_of, grassmann_descend, LocalOutcome, SearchOptions};
use crate::exterior::Form;
use crate::linalg::{rng_for, Matrix};
use crate::planes::OrientedPlane;

const MU_SCHEDULE: [f64; 4] = [1e1, 1e2, 1e3, 1e4];

/// Result of a penalty minimization.
#[derive(Clone, Debug)]
pub struct PenaltyOutcome {
    pub value: f64,
    pub plane: OrientedPlane,
    /// `|φ(ξ) − 1|` at the returned plane.
    pub calibration_residual: f64,
    /// `‖Nᵀ F‖` at the returned plane (0 without normals).
    pub constraint_residual: f64,
}

fn penalized(form: &Form, m: &Matrix, normals: Option<&Matrix>, mu: f64, f: &Matrix) -> (f64, Matrix) {
    let mf = m * f;
    let mut value = f.dot(&mf);
    let mut grad = mf * 2.0;
    let (phi, g) = form.evaluate_with_gradient(f);
    value += mu * (phi - 1.0).powi(2);
    grad += g * (2.0 * mu * (phi - 1.0));
    if let Some(nm) = normals {
        let c = nm.transpose() * f;
        value += mu * c.norm_squared();
        grad += nm * c * (2.0 * mu);
    }
    (value, grad)
}

/// Minimizes `tr_ξ M` over `G(φ)` (optionally with `Nᵀξ = 0`) by a penalty
/// continuation warm-started from local maximizers of `φ`.
pub fn penalty_minimize(form: &Form, m: &Matrix, normals: Option<&Matrix>, opts: &SearchOptions) -> PenaltyOutcome {
    let (n, p) = (form.dim(), form.degree());
    let outs: Vec<LocalOutcome> = (0..opts.starts.max(1))
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_for(opts.seed, s as u64);
            let start = OrientedPlane::sample_uniform(n, p, &mut rng).into_frame();
            let mut cur = ascend(form, &start, opts).frame;
            let mut last = None;
            for mu in MU_SCHEDULE {
                let o = grassmann_descend(|f| penalized(form, m, normals, mu, f), &cur, opts.max_iters, 1e-10);
                cur = o.frame.clone();
                last = Some(o);
            }
            let converged = last.map(|o| o.converged).unwrap_or(false);
            let value = (cur.transpose() * m * &cur).trace();
            LocalOutcome { value, frame: cur, converged }
        })
        .collect();
    let near: Vec<LocalOutcome> =
        outs.iter().filter(|o| (form.evaluate(&o.frame) - 1.0).abs() <= 1e-2).cloned().collect();
    let best = best_of(if near.is_empty() { outs } else { near }, false);
    let plane = OrientedPlane::from_columns(&best.frame).expect("orthonormal frame");
    let calibration_residual = (form.evaluate(plane.frame()) - 1.0).abs();
    let constraint_residual = normals.map(|nm| (nm.transpose() * plane.frame()).norm()).unwrap_or(0.0);
    PenaltyOutcome { value: best.value, plane, calibration_residual, constraint_residual }
}
