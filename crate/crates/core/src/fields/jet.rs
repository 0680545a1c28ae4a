//! Second-order jets: value, gradient and Hessian at a point.

use crate::error::{Error, Result};
use crate::linalg::{symmetrize, Matrix, Vector};

/// Value, gradient and symmetric Hessian of a scalar function at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: Matrix,
}

impl Jet2 {
    /// Builds a jet, symmetrizing the Hessian.
    pub fn new(value: f64, gradient: Vector, hessian: Matrix) -> Self {
        let hessian = symmetrize(&hessian);
        Jet2 { value, gradient, hessian }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Jet2 { value: c, gradient: Vector::zeros(n), hessian: Matrix::zeros(n, n) }
    }

    pub fn variable(x: &Vector, i: usize) -> Self {
        let n = x.len();
        let mut g = Vector::zeros(n);
        g[i] = 1.0;
        Jet2 { value: x[i], gradient: g, hessian: Matrix::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn is_constant(&self) -> bool {
        self.gradient.iter().all(|&v| v == 0.0) && self.hessian.iter().all(|&v| v == 0.0)
    }

    pub fn add(&self, o: &Jet2) -> Jet2 {
        Jet2 { value: self.value + o.value, gradient: &self.gradient + &o.gradient, hessian: &self.hessian + &o.hessian }
    }

    pub fn sub(&self, o: &Jet2) -> Jet2 {
        Jet2 { value: self.value - o.value, gradient: &self.gradient - &o.gradient, hessian: &self.hessian - &o.hessian }
    }

    pub fn scale(&self, s: f64) -> Jet2 {
        Jet2 { value: self.value * s, gradient: &self.gradient * s, hessian: &self.hessian * s }
    }

    pub fn neg(&self) -> Jet2 {
        self.scale(-1.0)
    }

    pub fn mul(&self, o: &Jet2) -> Jet2 {
        let cross = &self.gradient * o.gradient.transpose();
        Jet2 {
            value: self.value * o.value,
            gradient: &self.gradient * o.value + &o.gradient * self.value,
            hessian: &self.hessian * o.value + &o.hessian * self.value + &cross + cross.transpose(),
        }
    }

    pub fn div(&self, o: &Jet2) -> Result<Jet2> {
        if o.value == 0.0 {
            return Err(Error::Domain("division by zero".into()));
        }
        let inv = o.unary(1.0 / o.value, -1.0 / (o.value * o.value), 2.0 / (o.value * o.value * o.value));
        Ok(self.mul(&inv))
    }

    /// `g(self)` from `g(u)`, `g′(u)`, `g″(u)`.
    pub fn unary(&self, g: f64, dg: f64, ddg: f64) -> Jet2 {
        Jet2 {
            value: g,
            gradient: &self.gradient * dg,
            hessian: &self.hessian * dg + &self.gradient * self.gradient.transpose() * ddg,
        }
    }

    pub fn powi(&self, k: i32) -> Result<Jet2> {
        let u = self.value;
        if k < 0 && u == 0.0 {
            return Err(Error::Domain("negative power of zero".into()));
        }
        let kf = k as f64;
        let d = if k == 0 { 0.0 } else { kf * u.powi(k - 1) };
        let dd = if k == 0 || k == 1 { 0.0 } else { kf * (kf - 1.0) * u.powi(k - 2) };
        Ok(self.unary(u.powi(k), d, dd))
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.unary(e, e, e)
    }

    pub fn ln(&self) -> Result<Jet2> {
        let u = self.value;
        if u <= 0.0 {
            return Err(Error::Domain(format!("log of non-positive value {u}")));
        }
        Ok(self.unary(u.ln(), 1.0 / u, -1.0 / (u * u)))
    }

    pub fn sqrt(&self) -> Result<Jet2> {
        let u = self.value;
        if u <= 0.0 {
            return Err(Error::Domain(format!("sqrt of non-positive value {u}")));
        }
        let s = u.sqrt();
        Ok(self.unary(s, 0.5 / s, -0.25 / (s * u)))
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.unary(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.unary(c, -s, -c)
    }

    /// Chain rule for `g(u_1, …, u_m)` given the value, gradient and Hessian of `g` at `t = u(x)`.
    pub fn compose(g_value: f64, g_grad: &Vector, g_hess: &Matrix, us: &[Jet2]) -> Result<Jet2> {
        let m = us.len();
        if g_grad.len() != m || g_hess.nrows() != m {
            return Err(Error::DimensionMismatch { expected: g_grad.len(), found: m });
        }
        let n = us.first().map(|u| u.dim()).unwrap_or(0);
        let mut grad = Vector::zeros(n);
        let mut hess = Matrix::zeros(n, n);
        for i in 0..m {
            grad += &us[i].gradient * g_grad[i];
            hess += &us[i].hessian * g_grad[i];
            for j in 0..m {
                let c = g_hess[(i, j)];
                if c != 0.0 {
                    hess += &us[i].gradient * us[j].gradient.transpose() * c;
                }
            }
        }
        Ok(Jet2::new(g_value, grad, hess))
    }
}
