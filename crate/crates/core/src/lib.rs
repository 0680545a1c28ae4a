//! Potential theory for calibrations on flat ℝⁿ.
//!
//! The crate builds the standard calibrations, evaluates the φ-Hessian of
//! scalar fields, classifies φ-plurisubharmonicity through extremal traces
//! over `G(φ)`, and runs the boundary-convexity and free-dimension tests.

pub mod calibrations;
pub mod convexity;
pub mod error;
pub mod exterior;
pub mod fields;
pub mod linalg;
pub mod planes;
pub mod psh;

pub use calibrations::{Calibration, Criterion, OctonionTable, Sampler, SearchOptions};
pub use error::{Error, Result};
pub use exterior::{Form, FormFile, MultiIndex};
pub use fields::{Expr, FormField, Jet2, ScalarField};
pub use linalg::{Matrix, Vector};
pub use planes::{OrientedPlane, PlaneFile, TangentDirection};
pub use psh::{TraceExtremum, TraceMethod, Verdict, VerdictKind};
