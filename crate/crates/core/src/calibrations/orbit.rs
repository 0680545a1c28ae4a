//! Optimization over the orbit of a stabilizer group acting on a calibrated plane.

use nalgebra::DVector;

use crate::exterior::{Form, MultiIndex};
use crate::linalg::{expm, null_space, qr_positive, Matrix};

/// Frobenius-orthonormal basis of `{X skew : D_X φ = 0}`.
pub fn stabilizer_algebra(form: &Form) -> Vec<Matrix> {
    let n = form.dim();
    let index: Vec<MultiIndex> = MultiIndex::all(n, form.degree());
    let mut gens = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let mut e = Matrix::zeros(n, n);
            e[(a, b)] = -std::f64::consts::FRAC_1_SQRT_2;
            e[(b, a)] = std::f64::consts::FRAC_1_SQRT_2;
            gens.push(e);
        }
    }
    if gens.is_empty() {
        return Vec::new();
    }
    let mut m = Matrix::zeros(index.len().max(1), gens.len());
    for (c, g) in gens.iter().enumerate() {
        let d = form.derivation_action(g).expect("square generator");
        for (r, idx) in index.iter().enumerate() {
            m[(r, c)] = d.coeff(idx);
        }
    }
    let ns = null_space(&m, 1e-9);
    (0..ns.ncols())
        .map(|j| {
            let mut x = Matrix::zeros(n, n);
            for (c, g) in gens.iter().enumerate() {
                x += g * ns[(c, j)];
            }
            x
        })
        .collect()
}

fn trace_value(m: &Matrix, f: &Matrix) -> f64 {
    (f.transpose() * m * f).trace()
}

fn lie_gradient(basis: &[Matrix], m: &Matrix, f: &Matrix) -> DVector<f64> {
    let mf = m * f;
    DVector::from_iterator(basis.len(), basis.iter().map(|x| 2.0 * mf.dot(&(x * f))))
}

fn combine(basis: &[Matrix], coeffs: &DVector<f64>, scale: f64) -> Matrix {
    let n = basis.first().map(|b| b.nrows()).unwrap_or(0);
    let mut x = Matrix::zeros(n, n);
    for (b, c) in basis.iter().zip(coeffs.iter()) {
        x += b * (c * scale);
    }
    x
}

fn move_frame(x: &Matrix, f: &Matrix) -> Matrix {
    let g = expm(x) * f;
    qr_positive(&g).map(|(q, _)| q).unwrap_or(g)
}

/// Result of an orbit descent.
#[derive(Clone, Debug)]
pub struct OrbitOutcome {
    pub value: f64,
    pub frame: Matrix,
    pub converged: bool,
    /// Norm of the linear constraint residual `NᵀF` (0 when unconstrained).
    pub residual: f64,
}

/// Minimizes `tr(Fᵀ M F)` over `exp(k) · start`.
pub fn orbit_minimize(basis: &[Matrix], m: &Matrix, start: &Matrix, max_iters: usize, grad_tol: f64) -> OrbitOutcome {
    let mut f = start.clone();
    let mut value = trace_value(m, &f);
    if basis.is_empty() {
        return OrbitOutcome { value, frame: f, converged: true, residual: 0.0 };
    }
    let scale = 1.0 + m.norm();
    let mut g = lie_gradient(basis, m, &f);
    let mut step = 1.0 / scale;
    for _ in 0..max_iters {
        let gn2 = g.norm_squared();
        if gn2.sqrt() <= grad_tol * scale {
            return OrbitOutcome { value, frame: f, converged: true, residual: 0.0 };
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = move_frame(&combine(basis, &g, -t), &f);
            let vt = trace_value(m, &trial);
            if vt <= value - 1e-4 * t * gn2 {
                accepted = Some((trial, vt));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, vt)) = accepted else {
            let converged = gn2.sqrt() <= 1e-6 * scale;
            return OrbitOutcome { value, frame: f, converged, residual: 0.0 };
        };
        let gt = lie_gradient(basis, m, &trial);
        let s = &g * (-t);
        let y = &gt - &g;
        let sy = s.dot(&y);
        step = if sy > 0.0 { (s.norm_squared() / sy).clamp(1e-10, 1e4) } else { (2.0 * t).min(1e4) };
        f = trial;
        value = vt;
        g = gt;
    }
    let converged = g.norm() <= 1e-8 * scale;
    OrbitOutcome { value, frame: f, converged, residual: 0.0 }
}

fn constraint(normals: &Matrix, f: &Matrix) -> DVector<f64> {
    let c = normals.transpose() * f;
    DVector::from_column_slice(c.as_slice())
}

fn constraint_jacobian(basis: &[Matrix], normals: &Matrix, f: &Matrix) -> Matrix {
    let rows = normals.ncols() * f.ncols();
    let mut j = Matrix::zeros(rows, basis.len());
    for (i, x) in basis.iter().enumerate() {
        let d = normals.transpose() * (x * f);
        j.set_column(i, &DVector::from_column_slice(d.as_slice()));
    }
    j
}

/// Gauss–Newton restoration onto `{NᵀF = 0}` inside the orbit.
pub fn restore(basis: &[Matrix], normals: &Matrix, start: &Matrix) -> (Matrix, f64) {
    let mut f = start.clone();
    let mut res = constraint(normals, &f).norm();
    for _ in 0..60 {
        if res <= 1e-14 {
            break;
        }
        let c = constraint(normals, &f);
        let j = constraint_jacobian(basis, normals, &f);
        let Ok(pinv) = j.pseudo_inverse(1e-10) else { break };
        let delta = -(pinv * c);
        let trial = move_frame(&combine(basis, &delta, 1.0), &f);
        let rt = constraint(normals, &trial).norm();
        if rt >= res {
            break;
        }
        f = trial;
        res = rt;
    }
    (f, res)
}

/// Minimizes `tr(Fᵀ M F)` over frames in the orbit of `start` satisfying
/// `NᵀF = 0`. Returns `None` when no feasible frame is reached from `start`;
/// the residual of the best infeasible attempt is then reported through `Err`.
pub fn orbit_minimize_constrained(
    basis: &[Matrix],
    m: &Matrix,
    normals: &Matrix,
    start: &Matrix,
    max_iters: usize,
    grad_tol: f64,
) -> Result<OrbitOutcome, f64> {
    let nnt = normals * normals.transpose();
    let feas = orbit_minimize(basis, &nnt, start, max_iters, 1e-14);
    let r0 = constraint(normals, &feas.frame).norm();
    if r0 > 1e-3 {
        return Err(r0);
    }
    let (mut f, res) = restore(basis, normals, &feas.frame);
    if res > 1e-10 {
        return Err(res);
    }
    let scale = 1.0 + m.norm();
    let mut value = trace_value(m, &f);
    let mut step = 1.0 / scale;
    let mut converged = false;
    for _ in 0..max_iters {
        let g = lie_gradient(basis, m, &f);
        let j = constraint_jacobian(basis, normals, &f);
        let gt = match j.clone().pseudo_inverse(1e-10) {
            Ok(pinv) => &g - pinv * (&j * &g),
            Err(_) => g.clone(),
        };
        let gn2 = gt.norm_squared();
        if gn2.sqrt() <= grad_tol * scale {
            converged = true;
            break;
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..50 {
            let moved = move_frame(&combine(basis, &gt, -t), &f);
            let (trial, rt) = restore(basis, normals, &moved);
            let vt = trace_value(m, &trial);
            if rt <= 1e-10 && vt <= value - 1e-4 * t * gn2 {
                accepted = Some((trial, vt));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, vt)) = accepted else {
            converged = gn2.sqrt() <= 1e-6 * scale;
            break;
        };
        step = (2.0 * t).min(1e4);
        f = trial;
        value = vt;
    }
    let residual = constraint(normals, &f).norm();
    Ok(OrbitOutcome { value, frame: f, converged, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stabilizer_of_area_form_in_r3() {
        let phi = Form::monomial(3, &[0, 1]).unwrap();
        let basis = stabilizer_algebra(&phi);
        assert_eq!(basis.len(), 1);
        let x = &basis[0];
        assert!((x[(0, 1)].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn orbit_descent_on_complex_lines() {
        let phi = Form::from_terms(4, 2, [(vec![0, 1], 1.0), (vec![2, 3], 1.0)]).unwrap();
        let basis = stabilizer_algebra(&phi);
        assert_eq!(basis.len(), 4);
        let m = Matrix::from_diagonal(&DVector::from_vec(vec![3.0, 3.0, -1.0, -1.0]));
        let start = Matrix::from_columns(&[
            DVector::from_vec(vec![0.6, 0.0, 0.8, 0.0]),
            DVector::from_vec(vec![0.0, 0.6, 0.0, 0.8]),
        ]);
        let out = orbit_minimize(&basis, &m, &start, 2000, 1e-12);
        assert!((out.value + 2.0).abs() < 1e-9);
        assert!((phi.evaluate(&out.frame) - 1.0).abs() < 1e-9);
    }
}
