//! Calibration catalog, the maps `λ_φ` and `λ_φ*`, comass, membership in
//! `G(φ)`, structured samplers, criticality and richness.

pub mod comass;
pub mod octonion;
pub mod orbit;
pub mod search;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::Form;
use crate::linalg::{expm, gaussian_matrix, gaussian_vector, Matrix, Vector};
use crate::planes::OrientedPlane;

pub use comass::{comass, restricted_comass, ComassResult, SearchOptions};
pub use octonion::OctonionTable;

/// Structured parametrization of `G(φ)`.
#[derive(Clone, Debug)]
pub enum Sampler {
    Complex { p: usize },
    Quaternionic { p: usize },
    SpecialLagrangian { n: usize, theta: f64 },
    Associative,
    Coassociative,
    Cayley,
    Finite(Vec<OrientedPlane>),
    Generic,
}

impl Sampler {
    pub fn id(&self) -> &'static str {
        match self {
            Sampler::Complex { .. } => "complex",
            Sampler::Quaternionic { .. } => "quaternionic",
            Sampler::SpecialLagrangian { .. } => "special_lagrangian",
            Sampler::Associative => "associative",
            Sampler::Coassociative => "coassociative",
            Sampler::Cayley => "cayley",
            Sampler::Finite(_) => "finite",
            Sampler::Generic => "generic",
        }
    }
}

/// Exact plurisubharmonicity criterion available for a calibration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    ExactKahler { p: usize },
    ExactQuaternionic { p: usize },
    None,
}

impl Criterion {
    pub fn id(&self) -> &'static str {
        match self {
            Criterion::ExactKahler { .. } => "exact_kahler",
            Criterion::ExactQuaternionic { .. } => "exact_quaternionic",
            Criterion::None => "none",
        }
    }
}

/// Multiplication data attached to the calibration.
#[derive(Clone, Debug)]
pub enum Algebra {
    Quaternion,
    Octonion(OctonionTable),
}

/// A form of comass one together with the data used to search `G(φ)`.
#[derive(Clone, Debug)]
pub struct Calibration {
    name: String,
    spec: String,
    form: Form,
    sampler: Sampler,
    criterion: Criterion,
    algebra: Option<Algebra>,
    structures: Vec<Matrix>,
    reference: Option<OrientedPlane>,
    stabilizer: Vec<Matrix>,
    comass: f64,
}

/// Catalog entry description for listings.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub default_spec: &'static str,
    pub description: &'static str,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry { name: "kahler", params: "n", default_spec: "kahler:2", description: "Kähler form on C^n" },
    CatalogEntry { name: "kahler_power", params: "n,p", default_spec: "kahler_power:3,2", description: "divided power ω^p/p! on C^n" },
    CatalogEntry { name: "special_lagrangian", params: "n[,theta]", default_spec: "special_lagrangian:3", description: "Re(e^{-iθ} dz_1∧…∧dz_n) on C^n" },
    CatalogEntry { name: "quaternionic", params: "n", default_spec: "quaternionic:2", description: "quaternion-line 4-form on H^n" },
    CatalogEntry { name: "quaternionic_power", params: "n,p", default_spec: "quaternionic_power:2,2", description: "normalized p-th power of the quaternionic 4-form on H^n" },
    CatalogEntry { name: "associative", params: "", default_spec: "associative", description: "associative 3-form on Im O = R^7" },
    CatalogEntry { name: "coassociative", params: "", default_spec: "coassociative", description: "coassociative 4-form on R^7" },
    CatalogEntry { name: "cayley", params: "", default_spec: "cayley", description: "Cayley 4-form on O = R^8" },
    CatalogEntry { name: "double_point", params: "n", default_spec: "double_point:3", description: "dx_1∧…∧dx_n + dy_1∧…∧dy_n on R^2n (n ≥ 3)" },
    CatalogEntry { name: "axis_volume", params: "n,p | xy", default_spec: "axis_volume:xy", description: "dx_1∧…∧dx_p on R^n" },
    CatalogEntry { name: "anisotropic2", params: "lambda", default_spec: "anisotropic2:0.5", description: "dx_1∧dy_1 + λ dx_2∧dy_2 on R^4, 0 < λ < 1" },
];

/// Complex structure on ℝ^{2n}, coordinates `(x_1, y_1, x_2, y_2, …)`.
pub fn complex_structure(n: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// Right multiplication by `i`, `j`, `k` on ℍⁿ = ℝ^{4n}.
pub fn quaternionic_structures(n: usize) -> [Matrix; 3] {
    let units = [[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    units.map(|u| {
        let mut m = Matrix::zeros(4 * n, 4 * n);
        for blk in 0..n {
            for c in 0..4 {
                let mut e = [0.0; 4];
                e[c] = 1.0;
                let prod = octonion::qmul(&e, &u);
                for r in 0..4 {
                    m[(4 * blk + r, 4 * blk + c)] = prod[r];
                }
            }
        }
        m
    })
}

/// The 2-form `ω(v, w) = ⟨Cv, w⟩`.
pub fn kahler_form_of(c: &Matrix) -> Form {
    let n = c.nrows();
    let mut terms = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if c[(j, i)] != 0.0 {
                terms.push((vec![i, j], c[(j, i)]));
            }
        }
    }
    Form::from_terms(n, 2, terms).expect("valid indices")
}

fn power(f: &Form, p: usize) -> Form {
    let mut out = Form::scalar(f.dim(), 1.0);
    for _ in 0..p {
        out = out.wedge(f).expect("same dimension");
    }
    out
}

fn complex_wedge(a: &(Form, Form), b: &(Form, Form)) -> (Form, Form) {
    let re = a.0.wedge(&b.0).unwrap().sub(&a.1.wedge(&b.1).unwrap()).unwrap();
    let im = a.0.wedge(&b.1).unwrap().add(&a.1.wedge(&b.0).unwrap()).unwrap();
    (re, im)
}

/// `Re(e^{−iθ} dz_1 ∧ … ∧ dz_n)`.
pub fn special_lagrangian_form(n: usize, theta: f64) -> Form {
    let dim = 2 * n;
    let mut acc = (Form::scalar(dim, 1.0), Form::zero(dim, 0));
    for k in 0..n {
        let dz = (Form::monomial(dim, &[2 * k]).unwrap(), Form::monomial(dim, &[2 * k + 1]).unwrap());
        acc = complex_wedge(&acc, &dz);
    }
    acc.0.scale(theta.cos()).add(&acc.1.scale(theta.sin())).unwrap()
}

/// `φ(x, y, z) = ⟨x, yz⟩` on the imaginary octonions.
pub fn associative_form(t: &OctonionTable) -> Form {
    let mut terms = Vec::new();
    for a in 1..8 {
        for b in a + 1..8 {
            for c in b + 1..8 {
                let v = t.coefficient(b, c, a);
                if v != 0.0 {
                    terms.push((vec![a - 1, b - 1, c - 1], v));
                }
            }
        }
    }
    Form::from_terms(7, 3, terms).unwrap()
}

/// `Φ(x, y, z, w) = ⟨x, y × z × w⟩` on the octonions.
pub fn cayley_form(t: &OctonionTable) -> Form {
    let e = |i: usize| {
        let mut v = [0.0; 8];
        v[i] = 1.0;
        v
    };
    let mut terms = Vec::new();
    for a in 0..8 {
        for b in a + 1..8 {
            for c in b + 1..8 {
                for d in c + 1..8 {
                    let v = t.triple_cross(&e(b), &e(c), &e(d))[a];
                    if v.abs() > 1e-15 {
                        terms.push((vec![a, b, c, d], v));
                    }
                }
            }
        }
    }
    Form::from_terms(8, 4, terms).unwrap()
}

fn param_usize(args: &[&str], i: usize, what: &str) -> Result<usize> {
    args.get(i)
        .ok_or_else(|| Error::InvalidParameter(format!("missing {what}")))?
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidParameter(format!("{what} must be a positive integer")))
}

fn param_f64(args: &[&str], i: usize, what: &str) -> Result<f64> {
    let s = args.get(i).ok_or_else(|| Error::InvalidParameter(format!("missing {what}")))?;
    s.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("{what} must be a number")))
}

fn comass_cache() -> &'static Mutex<HashMap<String, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<String, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Orthonormal complex frame `(v_1, J v_1, …, v_p, J v_p)`.
pub fn complex_frame<R: Rng + ?Sized>(j: &Matrix, p: usize, rng: &mut R) -> Matrix {
    let n = j.nrows();
    let mut cols: Vec<Vector> = Vec::new();
    while cols.len() < 2 * p {
        let mut v = gaussian_vector(n, rng);
        for _ in 0..2 {
            for c in &cols {
                let d = c.dot(&v);
                v.axpy(-d, c, 1.0);
            }
        }
        let nv = v.norm();
        if nv < 1e-6 {
            continue;
        }
        let v = v / nv;
        let jv = j * &v;
        cols.push(v);
        cols.push(jv);
    }
    Matrix::from_columns(&cols)
}

/// Orthonormal quaternionic frame `(v, Iv, Jv, IJv, …)` for `p` quaternion lines.
pub fn quaternionic_frame<R: Rng + ?Sized>(s: &[Matrix], p: usize, rng: &mut R) -> Matrix {
    let n = s[0].nrows();
    let ij = &s[0] * &s[1];
    let mut cols: Vec<Vector> = Vec::new();
    while cols.len() < 4 * p {
        let mut v = gaussian_vector(n, rng);
        for _ in 0..2 {
            for c in &cols {
                let d = c.dot(&v);
                v.axpy(-d, c, 1.0);
            }
        }
        let nv = v.norm();
        if nv < 1e-6 {
            continue;
        }
        let v = v / nv;
        let (iv, jv, kv) = (&s[0] * &v, &s[1] * &v, &ij * &v);
        cols.extend([v, iv, jv, kv]);
    }
    Matrix::from_columns(&cols)
}

fn quaternionic_reference(s: &[Matrix], p: usize) -> Matrix {
    let n = s[0].nrows();
    let ij = &s[0] * &s[1];
    let mut cols = Vec::new();
    for blk in 0..p {
        let mut v = Vector::zeros(n);
        v[4 * blk] = 1.0;
        cols.extend([v.clone(), &s[0] * &v, &s[1] * &v, &ij * &v]);
    }
    Matrix::from_columns(&cols)
}

/// Real 2n×2n representation of a complex n×n matrix `a + i b`.
fn realify(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut r = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            r[(2 * i, 2 * j)] = a[(i, j)];
            r[(2 * i, 2 * j + 1)] = -b[(i, j)];
            r[(2 * i + 1, 2 * j)] = b[(i, j)];
            r[(2 * i + 1, 2 * j + 1)] = a[(i, j)];
        }
    }
    r
}

fn fix_orientation(form: &Form, mut f: Matrix) -> Matrix {
    if form.evaluate(&f) < 0.0 {
        let last = f.ncols() - 1;
        f.column_mut(last).neg_mut();
    }
    f
}

fn to_octonion(v: &Vector, imaginary: bool) -> [f64; 8] {
    let mut o = [0.0; 8];
    if imaginary {
        o[1..8].copy_from_slice(v.as_slice());
    } else {
        o.copy_from_slice(v.as_slice());
    }
    o
}

fn orthonormal_set<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<Vector> {
    let q = OrientedPlane::sample_uniform(n, k, rng).into_frame();
    (0..k).map(|j| q.column(j).into_owned()).collect()
}

impl Calibration {
    /// Builds a catalog calibration from its name and numeric parameters.
    pub fn catalog(name: &str, params: &[&str]) -> Result<Calibration> {
        let spec = if params.is_empty() { name.to_string() } else { format!("{name}:{}", params.join(",")) };
        let mut cal = match name {
            "kahler" => {
                let n = if params.is_empty() { 2 } else { param_usize(params, 0, "n")? };
                Self::kahler_power(n, 1)?
            }
            "kahler_power" => {
                let n = param_usize(params, 0, "n")?;
                let p = param_usize(params, 1, "p")?;
                Self::kahler_power(n, p)?
            }
            "special_lagrangian" => {
                let n = if params.is_empty() { 3 } else { param_usize(params, 0, "n")? };
                let theta = if params.len() > 1 { param_f64(params, 1, "theta")? } else { 0.0 };
                Self::special_lagrangian(n, theta)?
            }
            "quaternionic" => {
                let n = if params.is_empty() { 2 } else { param_usize(params, 0, "n")? };
                Self::quaternionic_power(n, 1)?
            }
            "quaternionic_power" => {
                let n = param_usize(params, 0, "n")?;
                let p = param_usize(params, 1, "p")?;
                Self::quaternionic_power(n, p)?
            }
            "associative" => Self::associative(),
            "coassociative" => Self::coassociative(),
            "cayley" => Self::cayley(),
            "double_point" => {
                let n = if params.is_empty() { 3 } else { param_usize(params, 0, "n")? };
                Self::double_point(n)?
            }
            "axis_volume" => {
                let (n, p) = match params {
                    [] | ["xy"] => (3, 2),
                    _ => (param_usize(params, 0, "n")?, param_usize(params, 1, "p")?),
                };
                Self::axis_volume(n, p)?
            }
            "anisotropic2" => {
                let l = if params.is_empty() { 0.5 } else { param_f64(params, 0, "lambda")? };
                Self::anisotropic2(l)?
            }
            other => return Err(Error::UnknownCalibration(other.to_string())),
        };
        cal.name = name.to_string();
        cal.spec = spec;
        cal.verify_comass()?;
        Ok(cal)
    }

    /// Parses `name[:a,b,…]`.
    pub fn from_spec(spec: &str) -> Result<Calibration> {
        let (name, rest) = match spec.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (spec.trim(), None),
        };
        let params: Vec<&str> = rest.map(|r| r.split(',').map(str::trim).collect()).unwrap_or_default();
        Calibration::catalog(name, &params)
    }

    /// Wraps a user-supplied form. Its comass is estimated but not enforced.
    pub fn custom(name: &str, form: Form, opts: &SearchOptions) -> Calibration {
        let stabilizer = orbit::stabilizer_algebra(&form);
        let c = comass(&form, opts).value;
        Calibration {
            name: name.to_string(),
            spec: name.to_string(),
            form,
            sampler: Sampler::Generic,
            criterion: Criterion::None,
            algebra: None,
            structures: Vec::new(),
            reference: None,
            stabilizer,
            comass: c,
        }
    }

    fn base(form: Form, sampler: Sampler, criterion: Criterion, reference: Option<OrientedPlane>) -> Calibration {
        let stabilizer = match sampler {
            Sampler::Finite(_) | Sampler::Generic => Vec::new(),
            _ => orbit::stabilizer_algebra(&form),
        };
        Calibration {
            name: String::new(),
            spec: String::new(),
            form,
            sampler,
            criterion,
            algebra: None,
            structures: Vec::new(),
            reference,
            stabilizer,
            comass: 1.0,
        }
    }

    fn kahler_power(n: usize, p: usize) -> Result<Calibration> {
        if n == 0 || p == 0 || p > n {
            return Err(Error::InvalidParameter(format!("kahler power needs 1 ≤ p ≤ n, got n={n}, p={p}")));
        }
        let j = complex_structure(n);
        let omega = kahler_form_of(&j);
        let fact: f64 = (1..=p).map(|k| k as f64).product();
        let form = power(&omega, p).scale(1.0 / fact);
        let reference = OrientedPlane::axis(2 * n, &(0..2 * p).collect::<Vec<_>>());
        let mut c = Self::base(form, Sampler::Complex { p }, Criterion::ExactKahler { p }, Some(reference));
        c.structures = vec![j];
        Ok(c)
    }

    fn special_lagrangian(n: usize, theta: f64) -> Result<Calibration> {
        if n < 2 {
            return Err(Error::InvalidParameter("special Lagrangian needs n ≥ 2".into()));
        }
        let form = special_lagrangian_form(n, theta);
        let mut f = Matrix::zeros(2 * n, n);
        for k in 0..n {
            f[(2 * k, k)] = 1.0;
        }
        f[(0, 0)] = theta.cos();
        f[(1, 0)] = theta.sin();
        let mut c = Self::base(form, Sampler::SpecialLagrangian { n, theta }, Criterion::None, Some(OrientedPlane::new(f)?));
        c.structures = vec![complex_structure(n)];
        Ok(c)
    }

    fn quaternionic_power(n: usize, p: usize) -> Result<Calibration> {
        if n == 0 || p == 0 || p > n {
            return Err(Error::InvalidParameter(format!("quaternionic power needs 1 ≤ p ≤ n, got n={n}, p={p}")));
        }
        let s = quaternionic_structures(n);
        let mut sum = Form::zero(4 * n, 4);
        for m in &s {
            let w = kahler_form_of(m);
            sum = sum.add(&w.wedge(&w)?)?;
        }
        let raw = power(&sum, p);
        let reference = quaternionic_reference(&s, p);
        let norm = raw.evaluate(&reference);
        let form = raw.scale(1.0 / norm);
        let mut c = Self::base(
            form,
            Sampler::Quaternionic { p },
            Criterion::ExactQuaternionic { p },
            Some(OrientedPlane::new(reference)?),
        );
        c.structures = s.to_vec();
        c.algebra = Some(Algebra::Quaternion);
        Ok(c)
    }

    fn associative() -> Calibration {
        let t = OctonionTable::new();
        let form = associative_form(&t);
        let reference = OrientedPlane::axis(7, &[0, 1, 2]);
        let mut c = Self::base(form, Sampler::Associative, Criterion::None, Some(reference));
        c.algebra = Some(Algebra::Octonion(t));
        c
    }

    fn coassociative() -> Calibration {
        let t = OctonionTable::new();
        let form = associative_form(&t).hodge_star();
        let reference = OrientedPlane::new(fix_orientation(&form, OrientedPlane::axis(7, &[0, 1, 2]).complement())).unwrap();
        let mut c = Self::base(form, Sampler::Coassociative, Criterion::None, Some(reference));
        c.algebra = Some(Algebra::Octonion(t));
        c
    }

    fn cayley() -> Calibration {
        let t = OctonionTable::new();
        let form = cayley_form(&t);
        let e = |i: usize| {
            let mut v = [0.0; 8];
            v[i] = 1.0;
            v
        };
        let w = t.triple_cross(&e(0), &e(1), &e(2));
        let mut f = OrientedPlane::axis(8, &[0, 1, 2, 3]).into_frame();
        f.set_column(3, &Vector::from_column_slice(&w));
        let reference = OrientedPlane::new(fix_orientation(&form, f)).unwrap();
        let mut c = Self::base(form, Sampler::Cayley, Criterion::None, Some(reference));
        c.algebra = Some(Algebra::Octonion(t));
        c
    }

    fn double_point(n: usize) -> Result<Calibration> {
        if n < 3 {
            return Err(Error::InvalidParameter("double point needs n ≥ 3".into()));
        }
        let xs: Vec<usize> = (0..n).collect();
        let ys: Vec<usize> = (n..2 * n).collect();
        let form = Form::from_terms(2 * n, n, [(xs.clone(), 1.0), (ys.clone(), 1.0)])?;
        let planes = vec![OrientedPlane::axis(2 * n, &xs), OrientedPlane::axis(2 * n, &ys)];
        Ok(Self::base(form, Sampler::Finite(planes.clone()), Criterion::None, Some(planes[0].clone())))
    }

    fn axis_volume(n: usize, p: usize) -> Result<Calibration> {
        if p == 0 || p > n {
            return Err(Error::InvalidParameter(format!("axis volume needs 1 ≤ p ≤ n, got n={n}, p={p}")));
        }
        let axes: Vec<usize> = (0..p).collect();
        let form = Form::monomial(n, &axes)?;
        let plane = OrientedPlane::axis(n, &axes);
        Ok(Self::base(form, Sampler::Finite(vec![plane.clone()]), Criterion::None, Some(plane)))
    }

    fn anisotropic2(lambda: f64) -> Result<Calibration> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        let form = Form::from_terms(4, 2, [(vec![0, 1], 1.0), (vec![2, 3], lambda)])?;
        let plane = OrientedPlane::axis(4, &[0, 1]);
        Ok(Self::base(form, Sampler::Finite(vec![plane.clone()]), Criterion::None, Some(plane)))
    }

    fn verify_comass(&mut self) -> Result<()> {
        if let Some(r) = &self.reference {
            let v = self.form.evaluate(r.frame());
            if (v - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("reference plane value {v} ≠ 1")));
            }
        }
        let cached = comass_cache().lock().unwrap().get(&self.spec).copied();
        let value = match cached {
            Some(v) => v,
            None => {
                let v = comass(&self.form, &SearchOptions::with_starts(6, 0)).value.max(1.0);
                comass_cache().lock().unwrap().insert(self.spec.clone(), v);
                v
            }
        };
        if value > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!("comass estimate {value} exceeds one")));
        }
        self.comass = value;
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    pub fn degree(&self) -> usize {
        self.form.degree()
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn sampler_id(&self) -> &'static str {
        self.sampler.id()
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn algebra(&self) -> Option<&Algebra> {
        self.algebra.as_ref()
    }

    pub fn complex_structures(&self) -> &[Matrix] {
        &self.structures
    }

    /// A fixed plane in `G(φ)`, when known.
    pub fn reference_plane(&self) -> Option<&OrientedPlane> {
        self.reference.as_ref()
    }

    /// Orthonormal basis of the Lie algebra of the stabilizer of `φ` in SO(n).
    pub fn stabilizer(&self) -> &[Matrix] {
        &self.stabilizer
    }

    pub fn comass_estimate(&self) -> f64 {
        self.comass
    }

    /// `φ(ξ)`.
    pub fn value(&self, xi: &OrientedPlane) -> f64 {
        self.form.evaluate(xi.frame())
    }

    /// `λ_φ(A) = D_{Aᵗ} φ`.
    pub fn lambda_map(&self, a: &Matrix) -> Result<Form> {
        self.form.derivation_action(a)
    }

    /// Matrix of `λ_φ*(ψ)` for the trace inner product.
    pub fn lambda_adjoint(&self, psi: &Form) -> Result<Matrix> {
        if psi.degree() != self.degree() {
            return Err(Error::DegreeMismatch { expected: self.degree(), found: psi.degree() });
        }
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut e = Matrix::zeros(n, n);
                e[(i, j)] = 1.0;
                m[(i, j)] = psi.pairing(&self.form.derivation_action(&e)?)?;
            }
        }
        Ok(m)
    }

    pub fn is_calibrated(&self, xi: &OrientedPlane, tol: f64) -> bool {
        xi.degree() == self.degree() && (self.value(xi) - 1.0).abs() <= tol
    }

    /// Values of `φ` on all first cousins of `ξ`.
    pub fn cousin_values(&self, xi: &OrientedPlane) -> Vec<f64> {
        xi.cousin_frames().iter().map(|c| self.value(c)).collect()
    }

    /// Critical point test for `φ` restricted to the Grassmannian.
    pub fn is_critical(&self, xi: &OrientedPlane, tol: f64) -> bool {
        self.cousin_values(xi).iter().all(|v| v.abs() <= tol)
    }

    /// Draws a plane of `G(φ)` from the structured sampler.
    pub fn sample_calibrated_plane<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<OrientedPlane> {
        let frame = match &self.sampler {
            Sampler::Complex { p } => complex_frame(&self.structures[0], *p, rng),
            Sampler::Quaternionic { p } => quaternionic_frame(&self.structures, *p, rng),
            Sampler::SpecialLagrangian { n, .. } => {
                let g = gaussian_matrix(*n, *n, rng);
                let a = (&g - g.transpose()) * 0.5;
                let h = gaussian_matrix(*n, *n, rng);
                let mut b = (&h + h.transpose()) * 0.5;
                let tr = b.trace() / *n as f64;
                for i in 0..*n {
                    b[(i, i)] -= tr;
                }
                expm(&realify(&a, &b)) * self.reference.as_ref().unwrap().frame()
            }
            Sampler::Associative => {
                let Some(Algebra::Octonion(t)) = &self.algebra else { unreachable!() };
                let v = orthonormal_set(7, 2, rng);
                let (x, y) = (to_octonion(&v[0], true), to_octonion(&v[1], true));
                let z = t.mul(&x, &y);
                Matrix::from_columns(&[v[0].clone(), v[1].clone(), Vector::from_column_slice(&z[1..8])])
            }
            Sampler::Coassociative => {
                let Some(Algebra::Octonion(t)) = &self.algebra else { unreachable!() };
                let v = orthonormal_set(7, 2, rng);
                let (x, y) = (to_octonion(&v[0], true), to_octonion(&v[1], true));
                let z = t.mul(&x, &y);
                let a = Matrix::from_columns(&[v[0].clone(), v[1].clone(), Vector::from_column_slice(&z[1..8])]);
                let comp = crate::linalg::orthonormal_complement(&a);
                fix_orientation(&self.form, comp)
            }
            Sampler::Cayley => {
                let Some(Algebra::Octonion(t)) = &self.algebra else { unreachable!() };
                let v = orthonormal_set(8, 3, rng);
                let o: Vec<[f64; 8]> = v.iter().map(|c| to_octonion(c, false)).collect();
                let w = t.triple_cross(&o[0], &o[1], &o[2]);
                let f = Matrix::from_columns(&[v[0].clone(), v[1].clone(), v[2].clone(), Vector::from_column_slice(&w)]);
                fix_orientation(&self.form, f)
            }
            Sampler::Finite(list) => list[rng.random_range(0..list.len())].frame().clone(),
            Sampler::Generic => return Err(Error::NoSampler(self.name.clone())),
        };
        OrientedPlane::from_columns(&frame)
    }

    /// All planes of `G(φ)` when the set is finite.
    pub fn finite_planes(&self) -> Option<&[OrientedPlane]> {
        match &self.sampler {
            Sampler::Finite(list) => Some(list),
            _ => None,
        }
    }

    /// Richness search at `ℓ ⊂ P`: looks for a `(p−1)`-plane `ξ₀ ⊂ P⊥` with `ℓ ∧ ξ₀ ∈ G(φ)`.
    pub fn is_rich_at(&self, p_plane: &Matrix, ell: &Vector, opts: &SearchOptions) -> Result<RichnessReport> {
        let n = self.dim();
        if p_plane.nrows() != n || ell.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: p_plane.nrows() });
        }
        let plane = OrientedPlane::from_columns(p_plane)?;
        if plane.degree() != 2 {
            return Err(Error::InvalidParameter("P must be 2-dimensional".into()));
        }
        let l = ell / ell.norm();
        if (plane.projector() * &l - &l).norm() > 1e-8 {
            return Err(Error::InvalidParameter("ℓ must lie in P".into()));
        }
        let diagnostic = (self.degree() == 2)
            .then(|| "degree-2 calibration: richness reported as a search outcome only".to_string());
        let eta = self.form.contract(&l)?;
        let q = plane.complement();
        let local = eta.pullback(&q);
        let pos = comass(&local, opts);
        let neg = comass(&local.scale(-1.0), opts);
        let (best, flip) = if neg.value > pos.value { (neg, true) } else { (pos, false) };
        let mut xi0 = &q * best.witness.frame();
        if flip && xi0.ncols() > 0 {
            let last = xi0.ncols() - 1;
            xi0.column_mut(last).neg_mut();
        }
        let mut cols = vec![l.clone()];
        cols.extend(xi0.column_iter().map(|c| c.into_owned()));
        let witness = OrientedPlane::from_columns(&Matrix::from_columns(&cols))?;
        let value = self.value(&witness);
        Ok(RichnessReport { rich: value >= 1.0 - 1e-6, value, witness, diagnostic })
    }
}

/// Outcome of a richness search.
#[derive(Clone, Debug)]
pub struct RichnessReport {
    pub rich: bool,
    pub value: f64,
    pub witness: OrientedPlane,
    pub diagnostic: Option<String>,
}

impl fmt::Display for Calibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (n={}, p={})", self.spec, self.dim(), self.degree())
    }
}
