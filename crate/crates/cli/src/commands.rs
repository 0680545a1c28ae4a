use std::path::Path;

use calgeom::calibrations::{comass, CATALOG};
use calgeom::convexity::{
    boundary_check, ellipticity_check, free_dimension, is_free_subspace, mollifying_laplacian, BoundaryVerdict, DefiningFunction, EllipticStatus,
    FreeStatus,
};
use calgeom::psh::{classify, TraceOptions};
use calgeom::{Calibration, Error, ScalarField, SearchOptions, VerdictKind};

use crate::inputs;
use crate::report::{CliError, Exit, Outcome, Row};

/// Budget and tolerance shared by every subcommand.
#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub seed: u64,
    pub tol: f64,
    pub starts: usize,
}

impl Settings {
    pub fn search(&self) -> SearchOptions {
        SearchOptions::with_starts(self.starts, self.seed)
    }

    pub fn trace(&self) -> TraceOptions {
        TraceOptions::with_starts(self.starts, self.seed)
    }
}

fn bad_assert(expected: &str, allowed: &str) -> CliError {
    CliError::usage(format!("--assert `{expected}` is not one of {allowed}"))
}

pub fn calibrations_list() -> Result<Outcome, CliError> {
    let mut out = Outcome::new(None);
    for entry in CATALOG {
        let cal = Calibration::from_spec(entry.default_spec)?;
        out.push(
            Row::new(entry.default_spec, cal.comass_estimate(), false, cal.sampler_id())
                .with("name", entry.name)
                .with("params", entry.params)
                .with("description", entry.description)
                .with("n", cal.dim())
                .with("p", cal.degree())
                .with("criterion", cal.criterion().id()),
        );
    }
    Ok(out)
}

pub fn comass_cmd(cal: &Calibration, s: &Settings, expect: Option<&str>) -> Result<Outcome, CliError> {
    let res = comass(cal.form(), &s.search());
    let mut out = Outcome::new(Some(cal));
    out.push(
        Row::new(cal.spec(), res.value, false, "multistart_ascent")
            .witness(Some(&res.witness))
            .with("converged", res.converged)
            .with("starts", res.starts),
    );
    if let Some(e) = expect {
        let target: f64 = e.parse().map_err(|_| bad_assert(e, "a number"))?;
        if (res.value - target).abs() > 1e-6 {
            out.flag(Exit::CheckFailed);
        }
    }
    Ok(out)
}

fn verdict_matches(kind: VerdictKind, expected: &str) -> Result<bool, CliError> {
    Ok(match expected {
        "psh" => kind.is_psh(),
        "strictly_psh" | "psh_not_strict" | "pluriharmonic_at_point" | "not_psh" => kind.as_str() == expected,
        other => return Err(bad_assert(other, "psh, strictly_psh, psh_not_strict, pluriharmonic_at_point, not_psh")),
    })
}

pub fn psh_check(cal: &Calibration, expr: &str, points: Option<&Path>, grid: Option<&str>, s: &Settings, expect: Option<&str>) -> Result<Outcome, CliError> {
    let f = ScalarField::parse(expr)?;
    let pts = inputs::sample_points(points, grid, cal.dim())?;
    let mut out = Outcome::new(Some(cal));
    for x in pts {
        let v = classify(cal, &f, &x, s.tol, &s.trace())?;
        if let Some(e) = expect {
            if !verdict_matches(v.kind, e)? {
                out.flag(Exit::CheckFailed);
            }
        }
        out.push(
            Row::new(x.as_slice(), v.min_trace.value, v.min_trace.certified && v.max_trace.certified, v.min_trace.method.as_str())
                .witness(Some(&v.min_trace.witness))
                .with("verdict", v.kind.as_str())
                .with("max_trace", v.max_trace.value)
                .with("tol", v.tol),
        );
    }
    Ok(out)
}

pub fn freedim(cal: &Calibration, trials: usize, s: &Settings, expect: Option<&str>) -> Result<Outcome, CliError> {
    if trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let r = free_dimension(cal, trials, &s.search())?;
    let mut out = Outcome::new(Some(cal));
    out.push(
        Row::new("free_dimension", r.fd, false, "monte_carlo_and_constructions")
            .with("fd_monte_carlo", r.fd_monte_carlo)
            .with("analytic", r.analytic)
            .with("monotone_checked", r.monotone_checked),
    );
    for e in &r.evidence {
        out.push(Row::new(serde_json::json!({ "k": e.k }), e.max_free_value, false, "monte_carlo").with("evidence", e));
    }
    for c in &r.constructions {
        if c.test.status != c.expected {
            out.flag(if c.test.status == FreeStatus::Unknown { Exit::Unknown } else { Exit::CheckFailed });
        }
        out.push(
            Row::new(&c.description, c.test.value, false, "restricted_comass")
                .witness(c.test.witness.as_ref())
                .with("dim", c.basis.ncols())
                .with("expected", c.expected)
                .with("status", c.test.status),
        );
    }
    if let Some(e) = expect {
        let target: usize = e.parse().map_err(|_| bad_assert(e, "an integer"))?;
        if r.fd != target {
            out.flag(Exit::CheckFailed);
        }
    }
    Ok(out)
}

pub fn free_subspace(cal: &Calibration, basis: &Path, s: &Settings, expect: Option<&str>) -> Result<Outcome, CliError> {
    let w = inputs::basis_file(basis, cal.dim())?;
    let t = is_free_subspace(cal, &w, &s.search())?;
    let mut out = Outcome::new(Some(cal));
    match (t.status, expect) {
        (FreeStatus::Unknown, _) => out.flag(Exit::Unknown),
        (st, Some(e)) => {
            let want = match e {
                "free" => FreeStatus::Free,
                "not_free" => FreeStatus::NotFree,
                other => return Err(bad_assert(other, "free, not_free")),
            };
            if st != want {
                out.flag(Exit::CheckFailed);
            }
        }
        _ => {}
    }
    let rows: Vec<Vec<f64>> = w.column_iter().map(|c| c.iter().copied().collect()).collect();
    out.push(
        Row::new(rows, t.value, false, "restricted_comass")
            .witness(t.witness.as_ref())
            .with("status", t.status)
            .with("reason", t.reason),
    );
    Ok(out)
}

pub struct BoundaryArgs<'a> {
    pub calibration: Option<&'a str>,
    pub rho: Option<&'a str>,
    pub points: Option<&'a Path>,
    pub grid: Option<&'a str>,
    pub config: Option<&'a Path>,
}

pub fn boundary(args: BoundaryArgs, s: &Settings, expect: Option<&str>) -> Result<(Outcome, Settings), CliError> {
    let mut s = *s;
    let (rho_expr, raw, cal) = match args.config {
        Some(path) => {
            if args.calibration.is_some() || args.rho.is_some() || args.points.is_some() || args.grid.is_some() {
                return Err(CliError::usage("--config replaces --calibration, --rho, --points and --grid"));
            }
            let job = inputs::BoundaryJob::load(path)?;
            s.tol = job.tol.unwrap_or(s.tol);
            s.seed = job.seed.unwrap_or(s.seed);
            s.starts = job.budget.unwrap_or(s.starts);
            let cal = inputs::calibration(&job.calibration, &s.search())?;
            let raw = job.raw_points(cal.dim())?;
            (job.rho_expr.clone(), raw, cal)
        }
        None => {
            let spec = args.calibration.ok_or_else(|| CliError::usage("--calibration is required"))?;
            let rho = args.rho.ok_or_else(|| CliError::usage("--rho is required"))?;
            let cal = inputs::calibration(spec, &s.search())?;
            let raw = inputs::sample_points(args.points, args.grid, cal.dim())?;
            (rho.to_string(), raw, cal)
        }
    };
    let rho = DefiningFunction::parse(&rho_expr)?;
    let (points, dropped) = inputs::project_all(&rho, &raw);
    if dropped > 0 {
        eprintln!("boundary: {dropped} sample points did not project onto the boundary");
    }
    if points.is_empty() {
        return Err(Error::NotOnBoundary("no sample point projects onto {ρ = 0}".into()).into());
    }
    let report = boundary_check(&cal, &rho, &points, s.tol, &s.trace())?;
    let mut out = Outcome::new(Some(&cal));
    let check = |v: BoundaryVerdict, e: &str| -> Result<bool, CliError> {
        Ok(match e {
            "convex" => v.is_convex(),
            "strict" | "flat" | "nonconvex" => v.as_str() == e,
            other => return Err(bad_assert(other, "convex, strict, flat, nonconvex")),
        })
    };
    for r in report {
        if let Some(e) = expect {
            if !check(r.verdict, e)? {
                out.flag(Exit::CheckFailed);
            }
        }
        let (value, certified, method) = match &r.min_trace {
            Some(m) => (Some(m.value), m.certified && r.max_trace.as_ref().is_some_and(|h| h.certified), m.method.as_str()),
            None => (None, false, "none"),
        };
        out.push(
            Row::new(r.x.as_slice(), value, certified, method)
                .witness(r.min_trace.as_ref().map(|m| &m.witness))
                .with("verdict", r.verdict.as_str())
                .with("max_trace", r.max_trace.as_ref().map(|m| m.value))
                .with("diagnostic", r.diagnostic),
        );
    }
    Ok((out, s))
}

pub fn elliptic(cal: &Calibration, s: &Settings, expect: Option<&str>) -> Result<Outcome, CliError> {
    let r = ellipticity_check(cal, &s.trace())?;
    let mut out = Outcome::new(Some(cal));
    match (r.status, expect) {
        (EllipticStatus::Unknown, _) => out.flag(Exit::Unknown),
        (st, Some(e)) => {
            let want = match e {
                "elliptic" => EllipticStatus::Elliptic,
                "not_elliptic" => EllipticStatus::NotElliptic,
                other => return Err(bad_assert(other, "elliptic, not_elliptic")),
            };
            if st != want {
                out.flag(Exit::CheckFailed);
            }
        }
        _ => {}
    }
    let planes: Vec<_> = r.planes.iter().map(|p| p.to_file()).collect();
    out.push(
        Row::new(cal.spec(), r.worst_value, false, "projector_sum")
            .with("status", r.status)
            .with("worst_vector", r.worst_vector.as_slice())
            .with("planes", planes),
    );
    Ok(out)
}

pub fn mollify(cal: &Calibration, s: &Settings) -> Result<Outcome, CliError> {
    let m = mollifying_laplacian(cal, &s.trace())?;
    let mut out = Outcome::new(Some(cal));
    let rows: Vec<Vec<f64>> = m.matrix.row_iter().map(|r| r.iter().copied().collect()).collect();
    let planes: Vec<_> = m.planes.iter().map(|p| p.to_file()).collect();
    out.push(Row::new(cal.spec(), m.lambda_min, true, "greedy_projector_sum").with("matrix", rows).with("planes", planes));
    Ok(out)
}
