//! Scalar fields, second-order jets, and the operators `d`, `d^φ`, `dd^φ`.

pub mod expr;
pub mod field;
pub mod jet;

pub use expr::Expr;
pub use field::{CoeffTerm, FormField, MaxKernel, ScalarField};
pub use jet::Jet2;

use crate::error::Result;
use crate::exterior::Form;
use crate::linalg::Vector;

/// `d^φ f = ∇f ⌟ φ` at `x`.
pub fn d_phi(f: &ScalarField, phi: &Form, x: &Vector) -> Result<Form> {
    let j = f.jet(x)?;
    phi.contract(&j.gradient)
}

/// Exterior derivative of a form field at `x`.
pub fn exterior_derivative(w: &FormField, x: &Vector) -> Result<Form> {
    w.exterior_derivative(x)
}

/// `dd^φ f` at `x`, differentiating the field `y ↦ d^φ f(y)`.
pub fn dd_phi(f: &ScalarField, phi: &Form, x: &Vector) -> Result<Form> {
    FormField::contraction_of_gradient(f.clone(), phi).exterior_derivative(x)
}

/// Codifferential `d* = (−1)^{n(p+1)+1} ⋆d⋆` of `f·φ` at `x`.
pub fn codifferential_of_scaled(f: &ScalarField, phi: &Form, x: &Vector) -> Result<Form> {
    let (n, p) = (phi.dim(), phi.degree());
    let starred = FormField::scalar_times(f.clone(), &phi.hodge_star());
    let d = starred.exterior_derivative(x)?;
    let sign = if (n * (p + 1) + 1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(d.hodge_star().scale(sign))
}

/// `‖d^φ f + d*(f φ)‖` at `x`.
pub fn hodge_identity_residual(f: &ScalarField, phi: &Form, x: &Vector) -> Result<f64> {
    let lhs = d_phi(f, phi, x)?;
    let rhs = codifferential_of_scaled(f, phi, x)?;
    Ok(lhs.add(&rhs)?.norm())
}
