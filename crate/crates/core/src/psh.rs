//! φ-Hessians, extremal traces over `G(φ)`, and pointwise classification.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::calibrations::comass::{best_of, LocalOutcome};
use crate::calibrations::orbit::{orbit_minimize, orbit_minimize_constrained};
use crate::calibrations::search::penalty_minimize;
use crate::calibrations::{Calibration, Criterion, SearchOptions};
use crate::error::{Error, Result};
use crate::exterior::Form;
use crate::fields::ScalarField;
pub use crate::fields::MaxKernel;
use crate::linalg::{orthonormal_complement, rng_for, sym_eigen, symmetrize, Matrix, Vector};
use crate::planes::OrientedPlane;

/// How an extremal trace was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMethod {
    ExactKahler,
    ExactQuaternionic,
    Structured,
    Penalty,
}

impl TraceMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceMethod::ExactKahler => "exact_kahler",
            TraceMethod::ExactQuaternionic => "exact_quaternionic",
            TraceMethod::Structured => "structured",
            TraceMethod::Penalty => "penalty",
        }
    }
}

/// Minimum or maximum of `tr_ξ H` over `G(φ)` with a witness plane.
#[derive(Clone, Debug)]
pub struct TraceExtremum {
    pub value: f64,
    pub witness: OrientedPlane,
    pub method: TraceMethod,
    pub certified: bool,
}

/// Which solver [`min_trace_over_g`] should use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MethodChoice {
    /// Exact path if available, else structured, else penalty.
    #[default]
    Auto,
    Structured,
    Penalty,
}

/// Options for extremal-trace searches.
#[derive(Clone, Copy, Debug, Default)]
pub struct TraceOptions {
    pub search: SearchOptions,
    pub method: MethodChoice,
}

impl TraceOptions {
    pub fn with_starts(starts: usize, seed: u64) -> Self {
        TraceOptions { search: SearchOptions::with_starts(starts, seed), method: MethodChoice::Auto }
    }

    pub fn structured(starts: usize, seed: u64) -> Self {
        TraceOptions { search: SearchOptions::with_starts(starts, seed), method: MethodChoice::Structured }
    }
}

/// `H^φ(f) = λ_φ(Hess f)` at `x`.
pub fn phi_hessian(cal: &Calibration, f: &ScalarField, x: &Vector) -> Result<Form> {
    cal.lambda_map(&f.hessian(x)?)
}

fn check_square(cal: &Calibration, h: &Matrix) -> Result<()> {
    if h.nrows() != cal.dim() || h.ncols() != cal.dim() {
        return Err(Error::DimensionMismatch { expected: cal.dim(), found: h.nrows() });
    }
    Ok(())
}

/// Groups an ℍ- or ℂ-invariant eigenbasis into structure-adapted frames.
fn adapted_frame(vectors: &Matrix, structures: &[Matrix], blocks: usize) -> Matrix {
    let n = vectors.nrows();
    let mut cols: Vec<Vector> = Vec::new();
    let mut taken = 0;
    for c in 0..vectors.ncols() {
        if taken == blocks {
            break;
        }
        let mut v = vectors.column(c).into_owned();
        for _ in 0..2 {
            for b in &cols {
                let d = b.dot(&v);
                v.axpy(-d, b, 1.0);
            }
        }
        let nv = v.norm();
        if nv < 0.5 {
            continue;
        }
        let v = v / nv;
        let mut block = vec![v.clone()];
        block.extend(structures.iter().map(|s| s * &v));
        cols.extend(block);
        taken += 1;
    }
    if cols.is_empty() {
        Matrix::zeros(n, 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

fn exact_min(cal: &Calibration, h: &Matrix, restrict: Option<&Matrix>) -> Option<TraceExtremum> {
    let (method, p, group, structs): (TraceMethod, usize, usize, Vec<Matrix>) = match cal.criterion() {
        Criterion::ExactKahler { p } => (TraceMethod::ExactKahler, p, 2, vec![cal.complex_structures()[0].clone()]),
        Criterion::ExactQuaternionic { p } => {
            let s = cal.complex_structures();
            (TraceMethod::ExactQuaternionic, p, 4, vec![s[0].clone(), s[1].clone(), &s[0] * &s[1]])
        }
        Criterion::None => return None,
    };
    let n = cal.dim();
    let w = restrict.cloned().unwrap_or_else(|| Matrix::identity(n, n));
    let hw = symmetrize(&(w.transpose() * h * &w));
    let sw: Vec<Matrix> = structs.iter().map(|s| w.transpose() * s * &w).collect();
    let mut avg = hw.clone();
    for s in &sw {
        avg -= s * &hw * s;
    }
    let a = avg / group as f64;
    let (values, vectors) = sym_eigen(&a);
    if values.len() < group * p {
        return None;
    }
    let value: f64 = (0..p).map(|k| values[group * k]).sum::<f64>() * group as f64;
    let local = adapted_frame(&vectors, &sw, p);
    if local.ncols() != group * p {
        return None;
    }
    let frame = &w * local;
    let witness = OrientedPlane::from_columns(&frame).ok()?;
    Some(TraceExtremum { value, witness, method, certified: true })
}

fn structured_starts(cal: &Calibration, opts: &SearchOptions) -> Result<Vec<Matrix>> {
    (0..opts.starts.max(1))
        .map(|s| {
            let mut rng = rng_for(opts.seed, s as u64);
            cal.sample_calibrated_plane(&mut rng).map(|p| p.into_frame())
        })
        .collect()
}

fn finalize(best: LocalOutcome, method: TraceMethod) -> TraceExtremum {
    TraceExtremum {
        value: best.value,
        witness: OrientedPlane::from_columns(&best.frame).expect("orthonormal frame"),
        method,
        certified: false,
    }
}

fn structured_min(cal: &Calibration, h: &Matrix, opts: &SearchOptions) -> Result<TraceExtremum> {
    if let Some(planes) = cal.finite_planes() {
        let outs = planes
            .iter()
            .map(|p| LocalOutcome { value: p.trace_on(h).unwrap(), frame: p.frame().clone(), converged: true })
            .collect();
        return Ok(finalize(best_of(outs, false), TraceMethod::Structured));
    }
    let starts = structured_starts(cal, opts)?;
    let basis = cal.stabilizer();
    let outs: Vec<LocalOutcome> = starts
        .par_iter()
        .map(|f| {
            let o = orbit_minimize(basis, h, f, opts.max_iters, 1e-10);
            LocalOutcome { value: o.value, frame: o.frame, converged: o.converged }
        })
        .collect();
    Ok(finalize(best_of(outs, false), TraceMethod::Structured))
}

fn penalty_min(cal: &Calibration, h: &Matrix, normals: Option<&Matrix>, opts: &SearchOptions) -> TraceExtremum {
    let out = penalty_minimize(cal.form(), h, normals, opts);
    TraceExtremum { value: out.value, witness: out.plane, method: TraceMethod::Penalty, certified: false }
}

/// Minimum of `tr_ξ H` over `ξ ∈ G(φ)`.
pub fn min_trace_over_g(cal: &Calibration, h: &Matrix, opts: &TraceOptions) -> Result<TraceExtremum> {
    check_square(cal, h)?;
    let h = symmetrize(h);
    match opts.method {
        MethodChoice::Auto => {
            if let Some(e) = exact_min(cal, &h, None) {
                return Ok(e);
            }
            if cal.sampler_id() == "generic" {
                Ok(penalty_min(cal, &h, None, &opts.search))
            } else {
                structured_min(cal, &h, &opts.search)
            }
        }
        MethodChoice::Structured => structured_min(cal, &h, &opts.search),
        MethodChoice::Penalty => Ok(penalty_min(cal, &h, None, &opts.search)),
    }
}

/// Maximum of `tr_ξ H` over `G(φ)`.
pub fn max_trace_over_g(cal: &Calibration, h: &Matrix, opts: &TraceOptions) -> Result<TraceExtremum> {
    let e = min_trace_over_g(cal, &(-h), opts)?;
    Ok(TraceExtremum { value: -e.value, ..e })
}

/// Minimum of `tr_ξ H` over φ-planes with `Nᵀξ = 0` (columns of `normals`).
/// Returns `Ok(None)` when no such plane was found within the budget.
pub fn min_trace_tangential(cal: &Calibration, h: &Matrix, normals: &Matrix, opts: &TraceOptions) -> Result<Option<TraceExtremum>> {
    check_square(cal, h)?;
    let h = symmetrize(h);
    let (nq, _) = crate::linalg::qr_positive(normals)?;
    if opts.method == MethodChoice::Auto && cal.criterion() != Criterion::None {
        let mut span: Vec<Vector> = Vec::new();
        let structs = cal.complex_structures();
        for c in nq.column_iter() {
            span.push(c.into_owned());
            for s in structs {
                span.push(s * c);
            }
        }
        let (q, _) = crate::linalg::qr_positive(&Matrix::from_columns(&span)).map_err(|_| Error::RankCollapse)?;
        let w = orthonormal_complement(&q);
        return Ok(exact_min(cal, &h, Some(&w)));
    }
    if let Some(planes) = cal.finite_planes() {
        let outs: Vec<LocalOutcome> = planes
            .iter()
            .filter(|p| (nq.transpose() * p.frame()).norm() <= 1e-6)
            .map(|p| LocalOutcome { value: p.trace_on(&h).unwrap(), frame: p.frame().clone(), converged: true })
            .collect();
        if outs.is_empty() {
            return Ok(None);
        }
        return Ok(Some(finalize(best_of(outs, false), TraceMethod::Structured)));
    }
    if cal.sampler_id() == "generic" || opts.method == MethodChoice::Penalty {
        let e = penalty_min(cal, &h, Some(&nq), &opts.search);
        let tangential = (nq.transpose() * e.witness.frame()).norm() <= 1e-3 && (cal.value(&e.witness) - 1.0).abs() <= 1e-3;
        return Ok(tangential.then_some(e));
    }
    let starts = structured_starts(cal, &opts.search)?;
    let basis = cal.stabilizer();
    let outs: Vec<LocalOutcome> = starts
        .par_iter()
        .filter_map(|f| {
            orbit_minimize_constrained(basis, &h, &nq, f, opts.search.max_iters, 1e-10)
                .ok()
                .filter(|o| o.residual <= 1e-6)
                .map(|o| LocalOutcome { value: o.value, frame: o.frame, converged: o.converged })
        })
        .collect();
    if outs.is_empty() {
        return Ok(None);
    }
    Ok(Some(finalize(best_of(outs, false), TraceMethod::Structured)))
}

/// Pointwise verdict vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    StrictlyPsh,
    PshNotStrict,
    PluriharmonicAtPoint,
    NotPsh,
}

impl VerdictKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictKind::StrictlyPsh => "strictly_psh",
            VerdictKind::PshNotStrict => "psh_not_strict",
            VerdictKind::PluriharmonicAtPoint => "pluriharmonic_at_point",
            VerdictKind::NotPsh => "not_psh",
        }
    }

    /// True for every verdict except `not_psh`.
    pub fn is_psh(&self) -> bool {
        *self != VerdictKind::NotPsh
    }

    pub fn from_extrema(min: f64, max: f64, tol: f64) -> VerdictKind {
        if min > tol {
            VerdictKind::StrictlyPsh
        } else if min < -tol {
            VerdictKind::NotPsh
        } else if max.abs() <= tol {
            VerdictKind::PluriharmonicAtPoint
        } else {
            VerdictKind::PshNotStrict
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification of a symmetric matrix or of a function at a point.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub min_trace: TraceExtremum,
    pub max_trace: TraceExtremum,
    pub tol: f64,
}

/// Classifies a symmetric matrix `H` by its extremal traces over `G(φ)`.
pub fn classify_hessian(cal: &Calibration, h: &Matrix, tol: f64, opts: &TraceOptions) -> Result<Verdict> {
    let min_trace = min_trace_over_g(cal, h, opts)?;
    let max_trace = max_trace_over_g(cal, h, opts)?;
    Ok(Verdict { kind: VerdictKind::from_extrema(min_trace.value, max_trace.value, tol), min_trace, max_trace, tol })
}

/// Classifies `f` at `x`.
pub fn classify(cal: &Calibration, f: &ScalarField, x: &Vector, tol: f64, opts: &TraceOptions) -> Result<Verdict> {
    let h = f.hessian(x)?;
    classify_hessian(cal, &h, tol, opts)
}

/// Smoothed maximum `½(f+g) + ½ ε k((f−g)/ε)`; equals `max(f, g)` where `|f − g| ≥ ε`.
pub fn smooth_max(f: ScalarField, g: ScalarField, eps: f64, kernel: MaxKernel) -> Result<ScalarField> {
    ScalarField::smooth_max(f, g, eps, kernel)
}

/// Outcome of a composition check `F = g(u_1, …, u_m)`.
#[derive(Clone, Debug)]
pub struct CompositionReport {
    pub verdict: Verdict,
    /// Hessian of `g` at `u(x)` is positive semidefinite (within `tol`).
    pub g_convex: bool,
    /// Every `∂g/∂t_j ≥ −tol` at `u(x)`.
    pub g_nondecreasing: bool,
    pub us_psh: Vec<bool>,
    /// The sufficient conditions for plurisubharmonicity all hold at `x`.
    pub sufficient: bool,
}

/// Classifies `g(u_1, …, u_m)` at `x` and reports the sufficient conditions.
pub fn compose_psh(
    g: &ScalarField,
    us: &[ScalarField],
    cal: &Calibration,
    x: &Vector,
    tol: f64,
    opts: &TraceOptions,
) -> Result<CompositionReport> {
    let jets = us.iter().map(|u| u.jet(x)).collect::<Result<Vec<_>>>()?;
    let t = Vector::from_iterator(jets.len(), jets.iter().map(|j| j.value));
    let jg = g.jet(&t)?;
    if jg.gradient.len() != us.len() {
        return Err(Error::DimensionMismatch { expected: jg.gradient.len(), found: us.len() });
    }
    let composed = crate::fields::Jet2::compose(jg.value, &jg.gradient, &jg.hessian, &jets)?;
    let verdict = classify_hessian(cal, &composed.hessian, tol, opts)?;
    let (ev, _) = sym_eigen(&jg.hessian);
    let g_convex = ev.first().is_none_or(|&l| l >= -tol);
    let g_nondecreasing = jg.gradient.iter().all(|&d| d >= -tol);
    let us_psh = jets
        .iter()
        .map(|j| min_trace_over_g(cal, &j.hessian, opts).map(|e| e.value >= -tol))
        .collect::<Result<Vec<_>>>()?;
    let sufficient = g_convex && g_nondecreasing && us_psh.iter().all(|&b| b);
    Ok(CompositionReport { verdict, g_convex, g_nondecreasing, us_psh, sufficient })
}
