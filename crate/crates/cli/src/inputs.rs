use std::fs;
use std::path::Path;

use calgeom::convexity::DefiningFunction;
use calgeom::linalg::orthonormalize_rows;
use calgeom::{Calibration, Error, FormFile, Matrix, SearchOptions, Vector};
use serde::Deserialize;

use crate::report::CliError;

/// Catalog spec (`name:params`) or path to a form file.
pub fn calibration(spec: &str, search: &SearchOptions) -> Result<Calibration, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{spec}: {e}")))?;
        let file: FormFile = serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{spec}: {e}")))?;
        let form = file.into_form()?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
        return Ok(Calibration::custom(name, form, search));
    }
    Ok(Calibration::from_spec(spec)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PointsFile {
    Bare(Vec<Vec<f64>>),
    Wrapped { points: Vec<Vec<f64>> },
}

pub fn points_file(path: &Path, dim: usize) -> Result<Vec<Vector>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let parsed: PointsFile = serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let rows = match parsed {
        PointsFile::Bare(p) | PointsFile::Wrapped { points: p } => p,
    };
    to_vectors(rows, dim)
}

fn to_vectors(rows: Vec<Vec<f64>>, dim: usize) -> Result<Vec<Vector>, CliError> {
    rows.into_iter()
        .map(|r| {
            if r.len() != dim {
                return Err(CliError::usage(format!("point has {} coordinates, expected {dim}", r.len())));
            }
            Ok(Vector::from_vec(r))
        })
        .collect()
}

/// Grid in `min1,..,minN:max1,..,maxN:steps` syntax. A single min or max is
/// broadcast to every axis.
pub fn grid(spec: &str, dim: usize) -> Result<Vec<Vector>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!("grid `{spec}`: expected min:max:steps")));
    }
    let axis = |s: &str| -> Result<Vec<f64>, CliError> {
        let vals = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::usage(format!("grid `{spec}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        match vals.len() {
            1 => Ok(vec![vals[0]; dim]),
            k if k == dim => Ok(vals),
            k => Err(CliError::usage(format!("grid `{spec}`: {k} bounds for dimension {dim}"))),
        }
    };
    let (lo, hi) = (axis(parts[0])?, axis(parts[1])?);
    let steps: usize = parts[2].trim().parse().map_err(|e| CliError::usage(format!("grid `{spec}`: {e}")))?;
    if steps == 0 {
        return Err(CliError::usage("grid needs at least one step"));
    }
    let total = steps.checked_pow(dim as u32).filter(|&t| t <= 1_000_000).ok_or_else(|| CliError::usage("grid has more than 10^6 points"))?;
    let coord = |k: usize, i: usize| if steps == 1 { lo[k] } else { lo[k] + (hi[k] - lo[k]) * i as f64 / (steps - 1) as f64 };
    Ok((0..total)
        .map(|mut idx| {
            let mut v = Vector::zeros(dim);
            for k in (0..dim).rev() {
                v[k] = coord(k, idx % steps);
                idx /= steps;
            }
            v
        })
        .collect())
}

/// Points from `--points` or `--grid`.
pub fn sample_points(points: Option<&Path>, grid_spec: Option<&str>, dim: usize) -> Result<Vec<Vector>, CliError> {
    match (points, grid_spec) {
        (Some(p), None) => points_file(p, dim),
        (None, Some(g)) => grid(g, dim),
        (None, None) => Err(CliError::usage("one of --points or --grid is required")),
        (Some(_), Some(_)) => Err(CliError::usage("--points and --grid are exclusive")),
    }
}

#[derive(Deserialize)]
struct BasisFile {
    dim: usize,
    k: usize,
    basis: Vec<Vec<f64>>,
}

/// Subspace basis file; rows are basis vectors.
pub fn basis_file(path: &Path, dim: usize) -> Result<Matrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let file: BasisFile = serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if file.dim != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: file.dim }.into());
    }
    if file.basis.len() != file.k || file.basis.iter().any(|r| r.len() != dim) {
        return Err(CliError::usage(format!("basis must have {} rows of length {dim}", file.k)));
    }
    let rows = Matrix::from_row_iterator(file.k, dim, file.basis.into_iter().flatten());
    let (frame, correction) = orthonormalize_rows(&rows)?;
    if correction > 1e-6 {
        return Err(CliError::usage(format!("basis is not orthonormal (correction {correction:.3e})")));
    }
    Ok(frame)
}

#[derive(Deserialize)]
pub struct GridConfig {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub steps: usize,
}

/// Boundary job configuration file.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryJob {
    pub calibration: String,
    pub rho_expr: String,
    pub points: Option<Vec<Vec<f64>>>,
    pub grid: Option<GridConfig>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
}

impl BoundaryJob {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn raw_points(&self, dim: usize) -> Result<Vec<Vector>, CliError> {
        match (&self.points, &self.grid) {
            (Some(p), None) => to_vectors(p.clone(), dim),
            (None, Some(g)) => {
                let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                grid(&format!("{}:{}:{}", join(&g.min), join(&g.max), g.steps), dim)
            }
            _ => Err(CliError::usage("job needs exactly one of `points` or `grid`")),
        }
    }
}

/// Newton-projects sample points onto `{ρ = 0}`, dropping those that fail.
pub fn project_all(rho: &DefiningFunction, raw: &[Vector]) -> (Vec<Vector>, usize) {
    let mut out: Vec<Vector> = Vec::new();
    let mut dropped = 0;
    for x in raw {
        match rho.project(x) {
            Ok(p) if !out.iter().any(|q| (q - &p).norm() <= 1e-9) => out.push(p),
            Ok(_) => {}
            Err(_) => dropped += 1,
        }
    }
    (out, dropped)
}
