//! Scalar fields and form-valued fields with exact second-order jets.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exterior::{Form, MultiIndex};
use crate::fields::expr::Expr;
use crate::fields::jet::Jet2;
use crate::linalg::{Matrix, Vector};

/// Convex kernel used by the smooth maximum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MaxKernel {
    /// `|s|` for `|s| ≥ 1`, `(s² + 1)/2` inside; C¹.
    #[default]
    Quadratic,
    /// `|s|` for `|s| ≥ 1`, `1/2 + 3s²/8 + s⁴/4 − s⁶/8` inside; C².
    Smooth,
}

impl MaxKernel {
    /// Value and first two derivatives of the kernel at `s`.
    pub fn eval(self, s: f64) -> (f64, f64, f64) {
        let a = s.abs();
        if a >= 1.0 {
            return (a, s.signum(), 0.0);
        }
        match self {
            MaxKernel::Quadratic => (0.5 * (s * s + 1.0), s, 1.0),
            MaxKernel::Smooth => {
                let s2 = s * s;
                let v = 0.5 + 0.375 * s2 + 0.25 * s2 * s2 - 0.125 * s2 * s2 * s2;
                let d = 0.75 * s + s2 * s - 0.75 * s2 * s2 * s;
                let dd = 0.75 + 3.0 * s2 - 3.75 * s2 * s2;
                (v, d, dd)
            }
        }
    }
}

/// A smooth function on (an open subset of) ℝⁿ.
#[derive(Clone, Debug)]
pub enum ScalarField {
    Expr(Expr),
    /// `½ xᵀAx + b·x + c`.
    Quadratic { a: Matrix, b: Vector, c: f64 },
    /// Fundamental solution with `Hess E = (p/|x|^p)(I/p − x̂x̂ᵀ)`.
    FundamentalSolution { p: usize },
    /// `½|P_N (x − origin)|²`, half the squared distance to an affine subspace.
    HalfDistSq { origin: Vector, normal_projector: Matrix },
    /// Smoothed maximum `½(f+g) + ½ ε k((f−g)/ε)`.
    SmoothMax { f: Arc<ScalarField>, g: Arc<ScalarField>, eps: f64, kernel: MaxKernel },
    /// `g(u_1(x), …, u_m(x))` with `g` a field on ℝᵐ.
    Compose { g: Arc<ScalarField>, us: Vec<ScalarField> },
    Sum(Arc<ScalarField>, Arc<ScalarField>),
    Product(Arc<ScalarField>, Arc<ScalarField>),
    Scaled(f64, Arc<ScalarField>),
}

impl ScalarField {
    pub fn parse(text: &str) -> Result<ScalarField> {
        Ok(ScalarField::Expr(Expr::parse(text)?))
    }

    pub fn quadratic(a: Matrix, b: Vector, c: f64) -> ScalarField {
        ScalarField::Quadratic { a, b, c }
    }

    /// `½‖x‖²` on ℝⁿ.
    pub fn half_norm_sq(n: usize) -> ScalarField {
        ScalarField::Quadratic { a: Matrix::identity(n, n), b: Vector::zeros(n), c: 0.0 }
    }

    /// Half squared distance to `origin + span(tangent columns)`.
    pub fn half_dist_sq(origin: Vector, tangent: &Matrix) -> Result<ScalarField> {
        let n = origin.len();
        if tangent.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: tangent.nrows() });
        }
        let pt = if tangent.ncols() == 0 {
            Matrix::zeros(n, n)
        } else {
            let (q, _) = crate::linalg::qr_positive(tangent)?;
            &q * q.transpose()
        };
        Ok(ScalarField::HalfDistSq { origin, normal_projector: Matrix::identity(n, n) - pt })
    }

    pub fn smooth_max(f: ScalarField, g: ScalarField, eps: f64, kernel: MaxKernel) -> Result<ScalarField> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        Ok(ScalarField::SmoothMax { f: Arc::new(f), g: Arc::new(g), eps, kernel })
    }

    pub fn compose(g: ScalarField, us: Vec<ScalarField>) -> ScalarField {
        ScalarField::Compose { g: Arc::new(g), us }
    }

    pub fn sum(a: ScalarField, b: ScalarField) -> ScalarField {
        ScalarField::Sum(Arc::new(a), Arc::new(b))
    }

    pub fn product(a: ScalarField, b: ScalarField) -> ScalarField {
        ScalarField::Product(Arc::new(a), Arc::new(b))
    }

    pub fn scaled(s: f64, a: ScalarField) -> ScalarField {
        ScalarField::Scaled(s, Arc::new(a))
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        Ok(self.jet(x)?.value)
    }

    /// Value, gradient and Hessian at `x`.
    pub fn jet(&self, x: &Vector) -> Result<Jet2> {
        let n = x.len();
        match self {
            ScalarField::Expr(e) => e.jet(x),
            ScalarField::Quadratic { a, b, c } => {
                if a.nrows() != n || b.len() != n {
                    return Err(Error::DimensionMismatch { expected: a.nrows(), found: n });
                }
                let s = crate::linalg::symmetrize(a);
                let ax = &s * x;
                Ok(Jet2::new(0.5 * x.dot(&ax) + b.dot(x) + c, ax + b, s))
            }
            ScalarField::FundamentalSolution { p } => {
                let r = x.norm();
                if r == 0.0 {
                    return Err(Error::Domain("fundamental solution is singular at the origin".into()));
                }
                let pf = *p as f64;
                let value = if *p == 2 { r.ln() } else { -r.powf(2.0 - pf) / (pf - 2.0) };
                let grad = x / r.powf(pf);
                let hess = (Matrix::identity(n, n) - x * x.transpose() * (pf / (r * r))) / r.powf(pf);
                Ok(Jet2::new(value, grad, hess))
            }
            ScalarField::HalfDistSq { origin, normal_projector } => {
                if origin.len() != n {
                    return Err(Error::DimensionMismatch { expected: origin.len(), found: n });
                }
                let d = normal_projector * (x - origin);
                Ok(Jet2 { value: 0.5 * d.norm_squared(), gradient: d, hessian: normal_projector.clone() })
            }
            ScalarField::SmoothMax { f, g, eps, kernel } => {
                let jf = f.jet(x)?;
                let jg = g.jet(x)?;
                let s = (jf.value - jg.value) / eps;
                let (k, dk, ddk) = kernel.eval(s);
                if s.abs() >= 1.0 {
                    return Ok(if jf.value >= jg.value { jf } else { jg });
                }
                let value = 0.5 * (jf.value + jg.value) + 0.5 * eps * k;
                let gv = Vector::from_vec(vec![0.5 * (1.0 + dk), 0.5 * (1.0 - dk)]);
                let c = 0.5 * ddk / eps;
                let gh = Matrix::from_row_slice(2, 2, &[c, -c, -c, c]);
                Jet2::compose(value, &gv, &gh, &[jf, jg])
            }
            ScalarField::Compose { g, us } => {
                let jets = us.iter().map(|u| u.jet(x)).collect::<Result<Vec<_>>>()?;
                let t = Vector::from_iterator(jets.len(), jets.iter().map(|j| j.value));
                let jg = g.jet(&t)?;
                Jet2::compose(jg.value, &jg.gradient, &jg.hessian, &jets)
            }
            ScalarField::Sum(a, b) => Ok(a.jet(x)?.add(&b.jet(x)?)),
            ScalarField::Product(a, b) => Ok(a.jet(x)?.mul(&b.jet(x)?)),
            ScalarField::Scaled(s, a) => Ok(a.jet(x)?.scale(*s)),
        }
    }

    pub fn hessian(&self, x: &Vector) -> Result<Matrix> {
        Ok(self.jet(x)?.hessian)
    }
}

/// One summand `scale · f` or `scale · ∂_j f` of a form-field coefficient.
#[derive(Clone, Debug)]
pub struct CoeffTerm {
    pub scale: f64,
    pub field: usize,
    pub derivative: Option<usize>,
}

/// Form of degree `degree` on ℝ^`dim` with field-valued coefficients.
#[derive(Clone, Debug)]
pub struct FormField {
    dim: usize,
    degree: usize,
    fields: Vec<ScalarField>,
    coeffs: Vec<(MultiIndex, Vec<CoeffTerm>)>,
}

impl FormField {
    pub fn new(dim: usize, degree: usize, fields: Vec<ScalarField>, coeffs: Vec<(MultiIndex, Vec<CoeffTerm>)>) -> Result<Self> {
        for (idx, terms) in &coeffs {
            if idx.len() != degree {
                return Err(Error::DegreeMismatch { expected: degree, found: idx.len() });
            }
            MultiIndex::new(idx.as_slice().to_vec(), dim)?;
            if terms.iter().any(|t| t.field >= fields.len() || t.derivative.is_some_and(|d| d >= dim)) {
                return Err(Error::InvalidParameter("coefficient term out of range".into()));
            }
        }
        Ok(FormField { dim, degree, fields, coeffs })
    }

    /// `f · ω` for a constant-coefficient form `ω`.
    pub fn scalar_times(f: ScalarField, omega: &Form) -> FormField {
        let coeffs = omega
            .terms()
            .map(|(idx, c)| (idx.clone(), vec![CoeffTerm { scale: c, field: 0, derivative: None }]))
            .collect();
        FormField { dim: omega.dim(), degree: omega.degree(), fields: vec![f], coeffs }
    }

    /// `∇f ⌟ φ` as a field.
    pub fn contraction_of_gradient(f: ScalarField, phi: &Form) -> FormField {
        let mut map: std::collections::BTreeMap<MultiIndex, Vec<CoeffTerm>> = Default::default();
        for (idx, c) in phi.terms() {
            let ix = idx.as_slice();
            for k in 0..ix.len() {
                let mut rest = ix.to_vec();
                rest.remove(k);
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let key = MultiIndex::new(rest, phi.dim()).expect("sub-index");
                map.entry(key).or_default().push(CoeffTerm { scale: sign * c, field: 0, derivative: Some(ix[k]) });
            }
        }
        FormField {
            dim: phi.dim(),
            degree: phi.degree().saturating_sub(1),
            fields: vec![f],
            coeffs: map.into_iter().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn jets(&self, x: &Vector) -> Result<Vec<Jet2>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        self.fields.iter().map(|f| f.jet(x)).collect()
    }

    fn coefficient(jets: &[Jet2], terms: &[CoeffTerm]) -> (f64, Vector) {
        let n = jets[0].dim();
        let mut v = 0.0;
        let mut g = Vector::zeros(n);
        for t in terms {
            let j = &jets[t.field];
            match t.derivative {
                None => {
                    v += t.scale * j.value;
                    g += &j.gradient * t.scale;
                }
                Some(d) => {
                    v += t.scale * j.gradient[d];
                    g += j.hessian.column(d) * t.scale;
                }
            }
        }
        (v, g)
    }

    /// The form at `x`.
    pub fn evaluate(&self, x: &Vector) -> Result<Form> {
        let jets = self.jets(x)?;
        let mut out = Form::zero(self.dim, self.degree);
        for (idx, terms) in &self.coeffs {
            let (v, _) = Self::coefficient(&jets, terms);
            out.add_term(idx.clone(), v);
        }
        Ok(out)
    }

    /// `dω` at `x`: `Σ_I Σ_j ∂_j ω_I dx_j ∧ dx^I`.
    pub fn exterior_derivative(&self, x: &Vector) -> Result<Form> {
        let jets = self.jets(x)?;
        let mut out = Form::zero(self.dim, self.degree + 1);
        for (idx, terms) in &self.coeffs {
            let (_, g) = Self::coefficient(&jets, terms);
            for j in 0..self.dim {
                if g[j] == 0.0 || idx.contains(j) {
                    continue;
                }
                let mut v = vec![j];
                v.extend_from_slice(idx.as_slice());
                if let Some((mi, s)) = MultiIndex::sorted_with_sign(v) {
                    out.add_term(mi, s * g[j]);
                }
            }
        }
        Ok(out)
    }
}
