//! Boundary φ-convexity, `−log δ`, free subspaces and free dimension,
//! distance-squared Hessians, ellipticity and mollifying Laplacians.

use rayon::prelude::*;
use serde::Serialize;

use crate::calibrations::comass::{restricted_comass_until, SearchOptions};
use crate::calibrations::{Algebra, Calibration, Sampler};
use crate::error::{Error, Result};
use crate::fields::{Expr, ScalarField};
use crate::linalg::{gaussian_matrix, null_space, orthonormal_complement, qr_positive, rng_for, sym_eigen, Matrix, Vector};
use crate::planes::OrientedPlane;
use crate::psh::{classify, max_trace_over_g, min_trace_over_g, min_trace_tangential, TraceExtremum, TraceOptions, Verdict, VerdictKind};

/// Boundary points must satisfy `|ρ| ≤ BOUNDARY_TOL · scale`.
pub const BOUNDARY_TOL: f64 = 1e-8;
/// Minimum admissible `‖∇ρ‖` on the boundary.
pub const MIN_GRADIENT: f64 = 1e-6;
/// Largest `‖n̂ ⌟ ξ‖` accepted as tangential.
pub const TANGENTIAL_TOL: f64 = 1e-6;
/// Multistarts spent before a point is declared to have no tangential φ-plane.
pub const TANGENTIAL_STARTS: usize = 256;

/// A defining function `ρ` for a domain `{ρ < 0}`.
#[derive(Clone, Debug)]
pub struct DefiningFunction {
    pub rho: ScalarField,
    pub description: String,
}

impl DefiningFunction {
    pub fn new(rho: ScalarField, description: impl Into<String>) -> Self {
        DefiningFunction { rho, description: description.into() }
    }

    pub fn parse(expr: &str) -> Result<Self> {
        Ok(DefiningFunction { rho: ScalarField::parse(expr)?, description: expr.to_string() })
    }

    /// Value and gradient at a point asserted to lie on `{ρ = 0}`.
    pub fn boundary_jet(&self, x: &Vector) -> Result<(f64, Vector)> {
        let j = self.rho.jet(x)?;
        let g = j.gradient.norm();
        if g < MIN_GRADIENT {
            return Err(Error::NotOnBoundary(format!("gradient norm {g:.3e} below {MIN_GRADIENT:e}")));
        }
        let scale = 1.0_f64.max(g * (1.0 + x.norm()));
        if j.value.abs() > BOUNDARY_TOL * scale {
            return Err(Error::NotOnBoundary(format!("ρ(x) = {:.3e}", j.value)));
        }
        Ok((j.value, j.gradient))
    }

    /// Newton projection of `x` onto `{ρ = 0}` along the gradient.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        let mut y = x.clone();
        for _ in 0..100 {
            let j = self.rho.jet(&y)?;
            let g2 = j.gradient.norm_squared();
            if g2 < MIN_GRADIENT * MIN_GRADIENT {
                return Err(Error::NotOnBoundary("vanishing gradient during projection".into()));
            }
            if j.value.abs() <= 1e-15 * (1.0 + y.norm()) {
                break;
            }
            y -= &j.gradient * (j.value / g2);
        }
        self.boundary_jet(&y)?;
        Ok(y)
    }
}

/// Pointwise boundary verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryVerdict {
    Strict,
    Convex,
    Flat,
    Nonconvex,
}

impl BoundaryVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryVerdict::Strict => "strict",
            BoundaryVerdict::Convex => "convex",
            BoundaryVerdict::Flat => "flat",
            BoundaryVerdict::Nonconvex => "nonconvex",
        }
    }

    pub fn is_convex(&self) -> bool {
        *self != BoundaryVerdict::Nonconvex
    }
}

/// Boundary check at one point.
#[derive(Clone, Debug)]
pub struct BoundaryPoint {
    pub x: Vector,
    pub verdict: BoundaryVerdict,
    /// Minimum and maximum of `tr_ξ Hess ρ` over tangential φ-planes.
    pub min_trace: Option<TraceExtremum>,
    pub max_trace: Option<TraceExtremum>,
    pub diagnostic: Option<String>,
}

fn tangential_extrema(cal: &Calibration, h: &Matrix, normal: &Matrix, opts: &TraceOptions) -> Result<Option<(TraceExtremum, TraceExtremum)>> {
    let run = |o: &TraceOptions| -> Result<Option<(TraceExtremum, TraceExtremum)>> {
        let Some(lo) = min_trace_tangential(cal, h, normal, o)? else { return Ok(None) };
        let Some(hi) = min_trace_tangential(cal, &(-h), normal, o)? else { return Ok(None) };
        Ok(Some((lo, TraceExtremum { value: -hi.value, ..hi })))
    };
    let first = run(opts)?;
    let exhaustive = cal.finite_planes().is_some() || cal.criterion() != crate::calibrations::Criterion::None;
    if first.is_some() || exhaustive || opts.search.starts >= TANGENTIAL_STARTS {
        return Ok(first);
    }
    let mut wide = *opts;
    wide.search.starts = TANGENTIAL_STARTS;
    run(&wide)
}

/// Checks the φ-convexity inequality at a boundary point `x`.
pub fn boundary_check_at(cal: &Calibration, rho: &DefiningFunction, x: &Vector, tol: f64, opts: &TraceOptions) -> Result<BoundaryPoint> {
    if x.len() != cal.dim() {
        return Err(Error::DimensionMismatch { expected: cal.dim(), found: x.len() });
    }
    let (_, grad) = rho.boundary_jet(x)?;
    let h = rho.rho.hessian(x)?;
    let normal = Matrix::from_columns(&[&grad / grad.norm()]);
    match tangential_extrema(cal, &h, &normal, opts)? {
        None => Ok(BoundaryPoint {
            x: x.clone(),
            verdict: BoundaryVerdict::Convex,
            min_trace: None,
            max_trace: None,
            diagnostic: Some("no tangential φ-plane found; convex vacuously".into()),
        }),
        Some((lo, hi)) => {
            let verdict = if lo.value > tol {
                BoundaryVerdict::Strict
            } else if lo.value < -tol {
                BoundaryVerdict::Nonconvex
            } else if hi.value.abs() <= tol {
                BoundaryVerdict::Flat
            } else {
                BoundaryVerdict::Convex
            };
            Ok(BoundaryPoint { x: x.clone(), verdict, min_trace: Some(lo), max_trace: Some(hi), diagnostic: None })
        }
    }
}

/// Boundary check at many points, in parallel; results keep the input order.
pub fn boundary_check(cal: &Calibration, rho: &DefiningFunction, points: &[Vector], tol: f64, opts: &TraceOptions) -> Result<Vec<BoundaryPoint>> {
    points.par_iter().map(|x| boundary_check_at(cal, rho, x, tol, opts)).collect()
}

/// `tr_ξ II = −tr_ξ(Hess ρ)/‖∇ρ‖` for a tangential plane `ξ`.
pub fn second_fundamental_trace(rho: &DefiningFunction, x: &Vector, xi: &OrientedPlane) -> Result<f64> {
    let (_, grad) = rho.boundary_jet(x)?;
    let g = grad.norm();
    let off = (xi.frame().transpose() * &grad).norm() / g;
    if off > TANGENTIAL_TOL {
        return Err(Error::NotTangential(off));
    }
    Ok(-xi.trace_on(&rho.rho.hessian(x)?)? / g)
}

/// `Hess ρ/δ + ∇ρ∇ρᵀ/δ²` with `δ = −ρ(x)`.
pub fn log_delta_matrix(rho: &DefiningFunction, x: &Vector) -> Result<Matrix> {
    let j = rho.rho.jet(x)?;
    if j.value >= 0.0 {
        return Err(Error::NotInterior(j.value));
    }
    let delta = -j.value;
    Ok(&j.hessian / delta + &j.gradient * j.gradient.transpose() / (delta * delta))
}

/// `−log(−ρ)` as a scalar field.
pub fn neg_log_neg(rho: &DefiningFunction) -> ScalarField {
    let outer = Expr::parse("-log(-x1)").expect("fixed expression");
    ScalarField::compose(ScalarField::Expr(outer), vec![rho.rho.clone()])
}

/// Result of [`log_delta_strictness`].
#[derive(Clone, Debug)]
pub struct LogDeltaReport {
    pub delta: f64,
    /// Minimum over `G(φ)` of the closed-form φ-Hessian of `−log δ`.
    pub min_trace: TraceExtremum,
    /// Same minimum from the directly differentiated `−log(−ρ)`.
    pub direct_min: f64,
    /// `‖closed form − direct Hessian‖ / max(1, ‖direct‖)`.
    pub relative_residual: f64,
}

/// Minimum of `(1/δ) tr_ξ Hess ρ + (1/δ²)|∇ρ ⌟ ξ|²` over `G(φ)` at an interior point.
pub fn log_delta_strictness(cal: &Calibration, rho: &DefiningFunction, x: &Vector, opts: &TraceOptions) -> Result<LogDeltaReport> {
    let m = log_delta_matrix(rho, x)?;
    let delta = -rho.rho.value(x)?;
    let direct = neg_log_neg(rho).hessian(x)?;
    let relative_residual = (&m - &direct).norm() / direct.norm().max(1.0);
    let min_trace = min_trace_over_g(cal, &m, opts)?;
    let direct_min = min_trace_over_g(cal, &direct, opts)?.value;
    Ok(LogDeltaReport { delta, min_trace, direct_min, relative_residual })
}

/// Result of [`rho_bar_construction`].
#[derive(Clone, Debug)]
pub struct RhoBarReport {
    pub a: f64,
    /// Smallest minimum trace over the sample points at the accepted `A`.
    pub min_trace: f64,
    pub attempts: usize,
}

/// `ρ + Aρ²`.
pub fn rho_bar(rho: &ScalarField, a: f64) -> ScalarField {
    let sq = ScalarField::product(rho.clone(), rho.clone());
    ScalarField::sum(rho.clone(), ScalarField::scaled(a, sq))
}

/// Doubling search for `A` with `ρ + Aρ²` strictly φ-psh at every sample point.
pub fn rho_bar_construction(
    cal: &Calibration,
    rho: &DefiningFunction,
    points: &[Vector],
    a_max: f64,
    tol: f64,
    opts: &TraceOptions,
) -> Result<RhoBarReport> {
    let mut a = 0.0;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let field = rho_bar(&rho.rho, a);
        let mins = points
            .par_iter()
            .map(|x| classify(cal, &field, x, tol, opts).map(|v| (v.kind, v.min_trace.value)))
            .collect::<Result<Vec<_>>>()?;
        let worst = mins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
        if mins.iter().all(|m| m.0 == VerdictKind::StrictlyPsh) {
            return Ok(RhoBarReport { a, min_trace: worst, attempts });
        }
        a = if a == 0.0 { 1.0 } else { 2.0 * a };
        if a > a_max {
            return Err(Error::BudgetExhausted(format!(
                "no A ≤ {a_max:e} makes ρ + Aρ² strictly psh at all points (worst trace {worst:.3e})"
            )));
        }
    }
}

/// Outcome of a free-subspace test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeStatus {
    Free,
    NotFree,
    Unknown,
}

/// Result of [`is_free_subspace`].
#[derive(Clone, Debug)]
pub struct FreeTest {
    pub status: FreeStatus,
    /// Restricted comass estimate (0 for dimension below the degree).
    pub value: f64,
    /// Maximizing plane embedded in the ambient space.
    pub witness: Option<OrientedPlane>,
    pub reason: String,
}

/// Restricted comass must be at most this for a subspace to be free.
pub const FREE_MARGIN: f64 = 1.0 - 1e-6;
/// Restricted comass must reach this for a subspace to be non-free.
pub const NOT_FREE_MARGIN: f64 = 1.0 - 1e-9;

/// Tests whether the span of the columns of `basis` contains no φ-plane.
pub fn is_free_subspace(cal: &Calibration, basis: &Matrix, opts: &SearchOptions) -> Result<FreeTest> {
    if basis.nrows() != cal.dim() {
        return Err(Error::DimensionMismatch { expected: cal.dim(), found: basis.nrows() });
    }
    let (q, _) = qr_positive(basis)?;
    let k = q.ncols();
    if k < cal.degree() {
        return Ok(FreeTest { status: FreeStatus::Free, value: 0.0, witness: None, reason: "dimension < degree".into() });
    }
    let res = restricted_comass_until(cal.form(), &q, NOT_FREE_MARGIN, opts);
    let (status, reason) = if res.value <= FREE_MARGIN {
        (FreeStatus::Free, "restricted comass below one")
    } else if res.value >= NOT_FREE_MARGIN && cal.is_calibrated(&res.witness, 1e-9) {
        (FreeStatus::NotFree, "contains a φ-plane")
    } else {
        (FreeStatus::Unknown, "restricted comass inside the uncertainty band")
    };
    Ok(FreeTest { status, value: res.value, witness: Some(res.witness), reason: reason.into() })
}

/// Evidence collected at one dimension.
#[derive(Clone, Debug, Default, Serialize)]
pub struct DimensionEvidence {
    pub k: usize,
    pub free: usize,
    pub not_free: usize,
    pub unknown: usize,
    /// Largest restricted comass seen among subspaces classified free.
    pub max_free_value: Option<f64>,
}

/// A subspace built from the algebraic characterizations of free subspaces.
#[derive(Clone, Debug)]
pub struct Construction {
    pub description: String,
    pub basis: Matrix,
    pub expected: FreeStatus,
    pub test: FreeTest,
}

/// Result of [`free_dimension`].
#[derive(Clone, Debug)]
pub struct FreeDimReport {
    /// Largest dimension with a confirmed free subspace from either source.
    pub fd: usize,
    /// Largest dimension with a confirmed free random subspace.
    pub fd_monte_carlo: usize,
    pub analytic: Option<usize>,
    pub evidence: Vec<DimensionEvidence>,
    pub constructions: Vec<Construction>,
    /// Random hyperplanes of the free Monte-Carlo witness were all free.
    pub monotone_checked: Option<bool>,
}

/// Free dimension predicted by the algebraic characterizations.
pub fn analytic_free_dimension(cal: &Calibration) -> Option<usize> {
    let (dim, p) = (cal.dim(), cal.degree());
    match cal.name() {
        "kahler" | "kahler_power" => Some(dim / 2 + p / 2 - 1),
        "special_lagrangian" => Some(dim - 2),
        "associative" | "coassociative" | "cayley" => Some(4),
        "quaternionic" | "quaternionic_power" => Some(3 * (dim / 4) + p / 4 - 1),
        "double_point" => Some(dim - 1),
        "axis_volume" => Some(dim - 1),
        "anisotropic2" => Some(3),
        _ => None,
    }
}

fn random_subspace(n: usize, k: usize, seed: u64, stream: u64) -> Matrix {
    let mut rng = rng_for(seed, stream);
    OrientedPlane::sample_uniform(n, k, &mut rng).into_frame()
}

fn span(cols: &[Vector]) -> Result<Matrix> {
    Ok(qr_positive(&Matrix::from_columns(cols))?.0)
}

fn unit(n: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = 1.0;
    v
}

/// Largest subspace `U ⊂ V` with `S U ⊂ V` for every structure `S`.
fn invariant_part(v: &Matrix, structures: &[Matrix]) -> Matrix {
    let n = v.nrows();
    let proj_perp = Matrix::identity(n, n) - v * v.transpose();
    let mut rows: Vec<Matrix> = Vec::new();
    for s in structures {
        rows.push(&proj_perp * s * v);
    }
    let stacked = Matrix::from_fn(rows.len() * n, v.ncols(), |r, c| rows[r / n][(r % n, c)]);
    v * null_space(&stacked, 1e-10)
}

/// Builds a structure-adapted `p`-plane inside the invariant subspace `u`.
fn adapted_plane(u: &Matrix, structures: &[Matrix], p: usize) -> Option<Matrix> {
    let mut cols: Vec<Vector> = Vec::new();
    for c in 0..u.ncols() {
        if cols.len() == p * (structures.len() + 1) {
            break;
        }
        let mut v = u.column(c).into_owned();
        for _ in 0..2 {
            for b in &cols {
                let d = b.dot(&v);
                v.axpy(-d, b, 1.0);
            }
        }
        if v.norm() < 0.5 {
            continue;
        }
        v /= v.norm();
        cols.push(v.clone());
        cols.extend(structures.iter().map(|s| s * &v));
    }
    (cols.len() == p * (structures.len() + 1)).then(|| Matrix::from_columns(&cols))
}

fn octonion_imag(v: &Vector) -> [f64; 8] {
    let mut o = [0.0; 8];
    o[1..8].copy_from_slice(v.as_slice());
    o
}

fn constructions(cal: &Calibration, seed: u64) -> Result<Vec<(String, Matrix, FreeStatus)>> {
    let n = cal.dim();
    let p = cal.degree();
    let mut rng = rng_for(seed, u64::MAX - 1);
    let mut out = Vec::new();
    match cal.sampler() {
        Sampler::Complex { p: cp } | Sampler::Quaternionic { p: cp } => {
            let cp = *cp;
            let structures = cal.complex_structures();
            let quaternionic = structures.len() == 3;
            let block = if quaternionic { 4 } else { 2 };
            let blocks = n / block;
            let mut cols = Vec::new();
            for b in 0..blocks {
                if b + 1 < cp {
                    cols.extend((0..block).map(|i| unit(n, block * b + i)));
                } else if quaternionic {
                    cols.extend((1..4).map(|i| unit(n, 4 * b + i)));
                } else {
                    cols.push(unit(n, 2 * b));
                }
            }
            let what = if quaternionic { "imaginary quaternion factors" } else { "totally real part" };
            out.push((format!("span of the first {} structure blocks plus {what}", cp - 1), span(&cols)?, FreeStatus::Free));
            let k = cols.len() + 1;
            if k <= n {
                let v = random_subspace(n, k, seed, u64::MAX - 2);
                let mut all = structures.to_vec();
                if quaternionic {
                    all = vec![structures[0].clone(), structures[1].clone(), &structures[0] * &structures[1]];
                }
                let inv = invariant_part(&v, &all);
                let gens: Vec<Matrix> = if quaternionic { all.clone() } else { vec![structures[0].clone()] };
                if adapted_plane(&inv, &gens, cp).is_some() {
                    out.push(("random subspace one dimension larger, through its invariant part".into(), v, FreeStatus::NotFree));
                }
            }
        }
        Sampler::SpecialLagrangian { n: m, .. } => {
            let m = *m;
            let cols: Vec<Vector> = (0..2 * (m - 1)).map(|i| unit(n, i)).collect();
            out.push(("complex hyperplane".into(), span(&cols)?, FreeStatus::Free));
            let cols: Vec<Vector> = (0..n).filter(|&i| i != 2 * (m - 2) && i != 2 * (m - 1)).map(|i| unit(n, i)).collect();
            out.push(("complement of two real axes".into(), span(&cols)?, FreeStatus::NotFree));
        }
        Sampler::Associative | Sampler::Coassociative | Sampler::Cayley => {
            let Some(Algebra::Octonion(t)) = cal.algebra() else { return Ok(out) };
            let w = match cal.sampler() {
                Sampler::Associative => orthonormal_complement(cal.sample_calibrated_plane(&mut rng)?.frame()),
                Sampler::Coassociative => {
                    let g = gaussian_matrix(7, 2, &mut rng);
                    let xy = qr_positive(&g)?.0;
                    let (x, y) = (xy.column(0).into_owned(), xy.column(1).into_owned());
                    let z = t.mul(&octonion_imag(&x), &octonion_imag(&y));
                    let assoc = span(&[x, y, Vector::from_column_slice(&z[1..8])])?;
                    let extra = orthonormal_complement(&assoc).column(0).into_owned();
                    let mut cols: Vec<Vector> = assoc.column_iter().map(|c| c.into_owned()).collect();
                    cols.push(extra);
                    span(&cols)?
                }
                _ => loop {
                    let w = OrientedPlane::sample_uniform(8, 4, &mut rng);
                    if cal.value(&w).abs() <= 0.5 {
                        break w.into_frame();
                    }
                },
            };
            let free_desc = match cal.sampler() {
                Sampler::Associative => "4-plane whose complement is associative, so not φ-isotropic",
                Sampler::Coassociative => "associative 3-plane plus a normal line, not coassociative",
                _ => "4-plane that is not Cayley",
            };
            out.push((free_desc.into(), w, FreeStatus::Free));
            match cal.sampler() {
                Sampler::Associative | Sampler::Coassociative => {
                    let g = gaussian_matrix(7, 2, &mut rng);
                    let xy = qr_positive(&g)?.0;
                    let (x, y) = (xy.column(0).into_owned(), xy.column(1).into_owned());
                    let v = orthonormal_complement(&xy);
                    let z = t.mul(&octonion_imag(&x), &octonion_imag(&y));
                    let z = Vector::from_column_slice(&z[1..8]);
                    if let Sampler::Associative = cal.sampler() {
                        let mut e = &v * crate::linalg::gaussian_vector(5, &mut rng);
                        e -= &z * z.dot(&e);
                        e /= e.norm();
                        let ze = t.mul(&octonion_imag(&z), &octonion_imag(&e));
                        let plane = span(&[z.clone(), e.clone(), Vector::from_column_slice(&ze[1..8])])?;
                        debug_assert!((&v * v.transpose() * &plane - &plane).norm() < 1e-9);
                        out.push(("5-plane through (z, ε, zε) with z = xy".into(), v, FreeStatus::NotFree));
                    } else {
                        let u = span(&[x, y, z])?;
                        let coass = orthonormal_complement(&u);
                        debug_assert!((&v * v.transpose() * &coass - &coass).norm() < 1e-9);
                        out.push(("5-plane containing span{x, y, xy}⊥".into(), v, FreeStatus::NotFree));
                    }
                }
                _ => {
                    let g = gaussian_matrix(8, 3, &mut rng);
                    let xyz = qr_positive(&g)?.0;
                    let v = orthonormal_complement(&xyz);
                    out.push(("5-plane containing span{x, y, z, x×y×z}⊥".into(), v, FreeStatus::NotFree));
                }
            }
        }
        Sampler::Finite(planes) => {
            let first = planes[0].frame().clone();
            let comp = orthonormal_complement(&first);
            if n > p {
                let mut cols: Vec<Vector> = first.column_iter().map(|c| c.into_owned()).collect();
                cols.extend(comp.column_iter().take(n - p - 1).map(|c| c.into_owned()));
                let mut tilted: Vec<Vector> = cols.clone();
                let last = comp.column(comp.ncols() - 1).into_owned();
                tilted[0] = (&tilted[0] + &last) / 2f64.sqrt();
                out.push(("hyperplane tilted off every φ-plane".into(), span(&tilted)?, FreeStatus::Free));
            }
        }
        Sampler::Generic => {}
    }
    Ok(out)
}

/// Estimates the free dimension by Monte-Carlo subspace sampling plus
/// constructed witnesses.
pub fn free_dimension(cal: &Calibration, trials: usize, opts: &SearchOptions) -> Result<FreeDimReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let (n, p) = (cal.dim(), cal.degree());
    let mut evidence = Vec::new();
    let mut fd_mc = p.saturating_sub(1);
    let mut free_witness: Option<Matrix> = None;
    for k in (p..=n).rev() {
        let count = if k == n { 1 } else { trials };
        let tests = (0..count)
            .into_par_iter()
            .map(|t| {
                let basis = random_subspace(n, k, opts.seed, ((k as u64) << 32) | t as u64);
                let sub = SearchOptions { seed: opts.seed ^ ((k as u64) << 40) ^ t as u64, ..*opts };
                is_free_subspace(cal, &basis, &sub).map(|r| (basis, r))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ev = DimensionEvidence { k, ..Default::default() };
        for (basis, r) in &tests {
            match r.status {
                FreeStatus::Free => {
                    ev.free += 1;
                    ev.max_free_value = Some(ev.max_free_value.map_or(r.value, |m: f64| m.max(r.value)));
                    if free_witness.is_none() {
                        free_witness = Some(basis.clone());
                    }
                }
                FreeStatus::NotFree => ev.not_free += 1,
                FreeStatus::Unknown => ev.unknown += 1,
            }
        }
        evidence.push(ev);
        if free_witness.is_some() {
            fd_mc = k;
            break;
        }
    }
    let monotone_checked = match &free_witness {
        Some(w) if w.ncols() > p => {
            let k = w.ncols();
            let ok = (0..4u64)
                .map(|s| {
                    let inner = random_subspace(k, k - 1, opts.seed, u64::MAX - 10 - s);
                    is_free_subspace(cal, &(w * inner), opts).map(|r| r.status == FreeStatus::Free)
                })
                .collect::<Result<Vec<_>>>()?;
            Some(ok.into_iter().all(|b| b))
        }
        _ => None,
    };
    let built = constructions(cal, opts.seed)?
        .into_iter()
        .map(|(description, basis, expected)| {
            let test = is_free_subspace(cal, &basis, &SearchOptions { starts: opts.starts.max(24), ..*opts })?;
            Ok(Construction { description, basis, expected, test })
        })
        .collect::<Result<Vec<_>>>()?;
    let fd_built = built.iter().filter(|c| c.test.status == FreeStatus::Free).map(|c| c.basis.ncols()).max();
    let fd = fd_built.map_or(fd_mc, |b| b.max(fd_mc));
    Ok(FreeDimReport { fd, fd_monte_carlo: fd_mc, analytic: analytic_free_dimension(cal), evidence, constructions: built, monotone_checked })
}

/// Result of [`dist_sq_free_test`].
#[derive(Clone, Debug)]
pub struct DistSqReport {
    /// `‖Hess f_M − P_N‖_F` at the point.
    pub hessian_error: f64,
    pub verdict: Verdict,
}

/// Classifies `½ dist²(·, M)` at `x ∈ M` for the affine subspace `M = origin + span(tangent)`.
pub fn dist_sq_free_test(cal: &Calibration, origin: &Vector, tangent: &Matrix, x: &Vector, tol: f64, opts: &TraceOptions) -> Result<DistSqReport> {
    let f = ScalarField::half_dist_sq(origin.clone(), tangent)?;
    let ScalarField::HalfDistSq { normal_projector, .. } = &f else { unreachable!() };
    let off = (normal_projector * (x - origin)).norm();
    if off > 1e-9 * (1.0 + x.norm()) {
        return Err(Error::Domain(format!("point is {off:.3e} away from the affine subspace")));
    }
    let h = f.hessian(x)?;
    let hessian_error = (&h - normal_projector).norm();
    let verdict = classify(cal, &f, x, tol, opts)?;
    Ok(DistSqReport { hessian_error, verdict })
}

/// Outcome of an ellipticity check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EllipticStatus {
    Elliptic,
    NotElliptic,
    Unknown,
}

/// Result of [`ellipticity_check`].
#[derive(Clone, Debug)]
pub struct EllipticityReport {
    pub status: EllipticStatus,
    /// Estimate of `min_v max_ξ ‖v ⌟ ξ‖²`.
    pub worst_value: f64,
    pub worst_vector: Vector,
    /// φ-planes used for the certificate.
    pub planes: Vec<OrientedPlane>,
}

/// Ellipticity threshold on `min_v max_ξ ‖v ⌟ ξ‖²`.
pub const ELLIPTIC_TOL: f64 = 1e-6;

fn block_planes(cal: &Calibration) -> Vec<OrientedPlane> {
    let n = cal.dim();
    let (block, p) = match cal.sampler() {
        Sampler::Complex { p } => (2, *p),
        Sampler::Quaternionic { p } => (4, *p),
        _ => return cal.reference_plane().into_iter().cloned().collect(),
    };
    let blocks = n / block;
    let s = cal.complex_structures();
    let gens: Vec<Matrix> = if block == 4 { vec![s[0].clone(), s[1].clone(), &s[0] * &s[1]] } else { vec![s[0].clone()] };
    (0..blocks)
        .filter_map(|start| {
            let mut cols = Vec::new();
            for b in 0..p {
                let v = unit(n, block * ((start + b) % blocks));
                cols.push(v.clone());
                cols.extend(gens.iter().map(|g| g * &v));
            }
            let plane = OrientedPlane::from_columns(&Matrix::from_columns(&cols)).ok()?;
            let plane = if cal.value(&plane) < 0.0 { plane.reversed() } else { plane };
            cal.is_calibrated(&plane, 1e-10).then_some(plane)
        })
        .collect()
}

fn plane_pool(cal: &Calibration, budget: usize, seed: u64) -> Vec<OrientedPlane> {
    if let Some(f) = cal.finite_planes() {
        return f.to_vec();
    }
    let mut pool = block_planes(cal);
    for s in 0..budget {
        let mut rng = rng_for(seed, s as u64);
        match cal.sample_calibrated_plane(&mut rng) {
            Ok(plane) => pool.push(plane),
            Err(_) => {
                let res = crate::calibrations::comass(cal.form(), &SearchOptions::with_starts(1, seed ^ s as u64));
                if cal.is_calibrated(&res.witness, 1e-9) {
                    pool.push(res.witness);
                }
            }
        }
    }
    pool
}

fn sum_projectors(planes: &[OrientedPlane], n: usize) -> Matrix {
    planes.iter().fold(Matrix::zeros(n, n), |acc, p| acc + p.projector())
}

/// Tests whether every nonzero vector has nonzero contraction with some φ-plane.
pub fn ellipticity_check(cal: &Calibration, opts: &TraceOptions) -> Result<EllipticityReport> {
    let n = cal.dim();
    let planes = plane_pool(cal, opts.search.starts, opts.search.seed);
    let a = sum_projectors(&planes, n);
    let (vals, vecs) = sym_eigen(&a);
    let v = vecs.column(0).into_owned();
    let certificate = vals[0] / planes.len().max(1) as f64;
    if certificate >= ELLIPTIC_TOL {
        let best = planes.iter().map(|p| p.trace_on(&(&v * v.transpose())).unwrap()).fold(0.0, f64::max);
        return Ok(EllipticityReport { status: EllipticStatus::Elliptic, worst_value: best.max(certificate), worst_vector: v, planes });
    }
    let inner = max_trace_over_g(cal, &(&v * v.transpose()), opts)?;
    let status = if inner.value < ELLIPTIC_TOL {
        EllipticStatus::NotElliptic
    } else {
        EllipticStatus::Unknown
    };
    Ok(EllipticityReport { status, worst_value: inner.value, worst_vector: v, planes })
}

/// Mollifying Laplacian `A = Σ P_ξ` with its certificate.
#[derive(Clone, Debug)]
pub struct MollifyingLaplacian {
    pub matrix: Matrix,
    pub planes: Vec<OrientedPlane>,
    pub lambda_min: f64,
}

/// Smallest eigenvalue required of a mollifying Laplacian.
pub const MOLLIFY_TOL: f64 = 1e-3;

/// Greedily accumulates φ-plane projectors until the sum is positive definite.
pub fn mollifying_laplacian(cal: &Calibration, opts: &TraceOptions) -> Result<MollifyingLaplacian> {
    let n = cal.dim();
    let pool = plane_pool(cal, opts.search.starts.max(4 * n), opts.search.seed);
    let mut chosen: Vec<OrientedPlane> = Vec::new();
    let mut a = Matrix::zeros(n, n);
    for plane in pool {
        if chosen.iter().any(|c| c.same_span(&plane)) {
            continue;
        }
        a += plane.projector();
        chosen.push(plane);
        let lambda_min = sym_eigen(&a).0[0];
        if lambda_min >= MOLLIFY_TOL {
            return Ok(MollifyingLaplacian { matrix: a, planes: chosen, lambda_min });
        }
    }
    let e = ellipticity_check(cal, opts)?;
    if e.status == EllipticStatus::NotElliptic {
        return Err(Error::NotElliptic(cal.spec().to_string()));
    }
    Err(Error::BudgetExhausted(format!("projector sum stayed singular after {} planes", chosen.len())))
}

/// `tr_ξ Hess ψ(ρ) − ψ′ tr_ξ Hess ρ − ψ″ ‖∇ρ ⌟ ξ‖²` at `x`, for a one-variable `ψ`.
pub fn composition_trace_residual(psi: &ScalarField, rho: &ScalarField, x: &Vector, xi: &OrientedPlane) -> Result<f64> {
    let jr = rho.jet(x)?;
    let jp = psi.jet(&Vector::from_element(1, jr.value))?;
    let composed = ScalarField::compose(psi.clone(), vec![rho.clone()]).hessian(x)?;
    let lhs = xi.trace_on(&composed)?;
    let contraction = (xi.frame().transpose() * &jr.gradient).norm_squared();
    let rhs = jp.gradient[0] * xi.trace_on(&jr.hessian)? + jp.hessian[(0, 0)] * contraction;
    Ok(lhs - rhs)
}
