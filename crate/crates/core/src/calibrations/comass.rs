//! Comass by multistart Riemannian ascent on the Grassmannian.

use rayon::prelude::*;

use crate::exterior::Form;
use crate::linalg::{qr_positive, rng_for, Matrix};
use crate::planes::OrientedPlane;

/// Budget for multistart searches.
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { starts: 64, seed: 0, max_iters: 3000, grad_tol: 1e-11 }
    }
}

impl SearchOptions {
    pub fn with_starts(starts: usize, seed: u64) -> Self {
        SearchOptions { starts, seed, ..Default::default() }
    }
}

/// Outcome of a single local descent.
#[derive(Clone, Debug)]
pub struct LocalOutcome {
    pub value: f64,
    pub frame: Matrix,
    pub converged: bool,
}

/// Gradient descent on the Grassmannian of `start.ncols()`-planes with
/// Barzilai–Borwein steps and Armijo backtracking. `objective` returns the
/// value and the Euclidean gradient with respect to the frame.
pub fn grassmann_descend<F>(objective: F, start: &Matrix, max_iters: usize, grad_tol: f64) -> LocalOutcome
where
    F: Fn(&Matrix) -> (f64, Matrix),
{
    let mut frame = start.clone();
    let (mut value, g) = objective(&frame);
    let mut r = &g - &frame * (frame.transpose() * &g);
    let mut step = 1.0;
    for _ in 0..max_iters {
        let rn2 = r.norm_squared();
        if rn2.sqrt() <= grad_tol {
            return LocalOutcome { value, frame, converged: true };
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            if let Ok((q, _)) = qr_positive(&(&frame - &r * t)) {
                let (vt, gt) = objective(&q);
                if vt <= value - 1e-4 * t * rn2 {
                    accepted = Some((q, vt, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((q, vt, gt)) = accepted else {
            let converged = rn2.sqrt() <= 1e-6;
            return LocalOutcome { value, frame, converged };
        };
        let rt = &gt - &q * (q.transpose() * &gt);
        let s = &q - &frame;
        let y = &rt - &r;
        let sy = s.dot(&y);
        step = if sy > 0.0 { (s.norm_squared() / sy).clamp(1e-8, 1e4) } else { (2.0 * t).min(1e4) };
        frame = q;
        value = vt;
        r = rt;
    }
    let converged = r.norm() <= grad_tol.max(1e-8);
    LocalOutcome { value, frame, converged }
}

/// Local maximization of `φ` on oriented planes.
pub fn ascend(form: &Form, start: &Matrix, opts: &SearchOptions) -> LocalOutcome {
    let out = grassmann_descend(
        |f| {
            let (v, g) = form.evaluate_with_gradient(f);
            (-v, -g)
        },
        start,
        opts.max_iters,
        opts.grad_tol,
    );
    LocalOutcome { value: -out.value, ..out }
}

/// Estimated comass with its maximizing plane.
#[derive(Clone, Debug)]
pub struct ComassResult {
    pub value: f64,
    pub witness: OrientedPlane,
    /// True when the best start met the gradient tolerance.
    pub converged: bool,
    pub starts: usize,
}

/// Picks the best `(value, frame)` pair: largest value, then lexicographically smallest frame.
pub fn best_of(mut outs: Vec<LocalOutcome>, maximize: bool) -> LocalOutcome {
    outs.sort_by(|a, b| {
        let ord = if maximize { b.value.total_cmp(&a.value) } else { a.value.total_cmp(&b.value) };
        ord.then_with(|| {
            let pa = OrientedPlane::from_columns(&a.frame).unwrap_or_else(|_| OrientedPlane::axis(1, &[0]));
            let pb = OrientedPlane::from_columns(&b.frame).unwrap_or_else(|_| OrientedPlane::axis(1, &[0]));
            pa.lex_cmp(&pb)
        })
    });
    outs.into_iter().next().expect("at least one start")
}

/// Multistart comass of `form` from Haar-random starts.
pub fn comass(form: &Form, opts: &SearchOptions) -> ComassResult {
    comass_with_starts(form, &[], opts)
}

/// Multistart comass with extra warm-start frames tried before the random ones.
pub fn comass_with_starts(form: &Form, warm: &[Matrix], opts: &SearchOptions) -> ComassResult {
    let (n, p) = (form.dim(), form.degree());
    if p == 0 {
        return ComassResult {
            value: form.coeff_at(&[]).abs(),
            witness: OrientedPlane::axis(n, &[]),
            converged: true,
            starts: 0,
        };
    }
    let starts = opts.starts.max(1);
    let mut outs: Vec<LocalOutcome> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_for(opts.seed, s as u64);
            let start = OrientedPlane::sample_uniform(n, p, &mut rng).into_frame();
            ascend(form, &start, opts)
        })
        .collect();
    outs.extend(warm.par_iter().map(|w| ascend(form, w, opts)).collect::<Vec<_>>());
    let best = best_of(outs, true);
    ComassResult {
        value: best.value,
        witness: OrientedPlane::from_columns(&best.frame).expect("orthonormal frame"),
        converged: best.converged,
        starts,
    }
}

/// Comass of `form` restricted to the span of the orthonormal columns of
/// `basis`; the witness is embedded back into the ambient space.
pub fn restricted_comass(form: &Form, basis: &Matrix, opts: &SearchOptions) -> ComassResult {
    let local = form.pullback(basis);
    let res = comass(&local, opts);
    let embedded = basis * res.witness.frame();
    ComassResult {
        witness: OrientedPlane::from_columns(&embedded).expect("embedded frame"),
        ..res
    }
}

/// Like [`restricted_comass`] but stops at the first start reaching `stop_at`.
pub fn restricted_comass_until(form: &Form, basis: &Matrix, stop_at: f64, opts: &SearchOptions) -> ComassResult {
    let local = form.pullback(basis);
    let (k, p) = (basis.ncols(), form.degree());
    let mut outs = Vec::new();
    for s in 0..opts.starts.max(1) {
        let mut rng = rng_for(opts.seed, s as u64);
        let start = OrientedPlane::sample_uniform(k, p, &mut rng).into_frame();
        let o = ascend(&local, &start, opts);
        let hit = o.value >= stop_at;
        outs.push(o);
        if hit {
            break;
        }
    }
    let starts = outs.len();
    let best = best_of(outs, true);
    let embedded = basis * &best.frame;
    ComassResult {
        value: best.value,
        witness: OrientedPlane::from_columns(&embedded).expect("embedded frame"),
        converged: best.converged,
        starts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comass_of_monomial_is_one() {
        let f = Form::monomial(4, &[0, 2]).unwrap();
        let r = comass(&f, &SearchOptions::with_starts(4, 1));
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn comass_of_scaled_sum() {
        let f = Form::from_terms(4, 2, [(vec![0, 1], 1.0), (vec![2, 3], 1.0)]).unwrap();
        let r = comass(&f, &SearchOptions::with_starts(8, 2));
        assert!((r.value - 1.0).abs() < 1e-9);
        let g = Form::from_terms(4, 2, [(vec![0, 1], 3.0), (vec![0, 2], 4.0)]).unwrap();
        let r = comass(&g, &SearchOptions::with_starts(8, 2));
        assert!((r.value - 5.0).abs() < 1e-9);
    }
}
