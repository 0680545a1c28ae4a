//! Oriented p-planes in ℝⁿ and first-order calculus on the Grassmannian.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::Form;
use crate::linalg::{gaussian_matrix, orthonormal_complement, qr_positive, Matrix};

/// Oriented p-plane given by an ordered orthonormal frame (n×p).
#[derive(Clone, Debug, PartialEq)]
pub struct OrientedPlane {
    frame: Matrix,
}

/// Tangent vector at a plane: coefficients (n−p)×p against a complement frame.
#[derive(Clone, Debug)]
pub struct TangentDirection {
    pub complement: Matrix,
    pub coeffs: Matrix,
}

impl TangentDirection {
    pub fn new(plane: &OrientedPlane, coeffs: Matrix) -> Result<Self> {
        let complement = plane.complement();
        if coeffs.nrows() != complement.ncols() || coeffs.ncols() != plane.degree() {
            return Err(Error::DimensionMismatch { expected: complement.ncols(), found: coeffs.nrows() });
        }
        Ok(TangentDirection { complement, coeffs })
    }
}

impl OrientedPlane {
    /// Wraps an orthonormal frame; fails if `FᵀF` deviates from identity by more than 1e-10.
    pub fn new(frame: Matrix) -> Result<Self> {
        let p = frame.ncols();
        let dev = (frame.transpose() * &frame - Matrix::identity(p, p)).amax();
        if dev > 1e-10 {
            return Err(Error::NotOrthonormal(dev));
        }
        Ok(OrientedPlane { frame })
    }

    /// Orthonormalizes arbitrary independent columns, keeping orientation.
    pub fn from_columns(m: &Matrix) -> Result<Self> {
        let (q, _) = qr_positive(m)?;
        Ok(OrientedPlane { frame: q })
    }

    /// Like [`from_columns`](Self::from_columns) but rejects inputs needing a correction above `max_corr`.
    pub fn from_columns_checked(m: &Matrix, max_corr: f64) -> Result<Self> {
        let (q, _) = qr_positive(m)?;
        let corr = (&q - m).amax();
        if corr > max_corr {
            return Err(Error::NotOrthonormal(corr));
        }
        Ok(OrientedPlane { frame: q })
    }

    /// Coordinate plane spanned by `e_{i1}, …, e_{ip}` in the given order.
    pub fn axis(n: usize, axes: &[usize]) -> Self {
        let mut f = Matrix::zeros(n, axes.len());
        for (c, &i) in axes.iter().enumerate() {
            f[(i, c)] = 1.0;
        }
        OrientedPlane { frame: f }
    }

    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    pub fn into_frame(self) -> Matrix {
        self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn degree(&self) -> usize {
        self.frame.ncols()
    }

    pub fn simple_vector(&self) -> Form {
        Form::simple(&self.frame)
    }

    pub fn projector(&self) -> Matrix {
        &self.frame * self.frame.transpose()
    }

    /// `tr_ξ A = tr(Fᵀ A F)`.
    pub fn trace_on(&self, a: &Matrix) -> Result<f64> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: a.nrows() });
        }
        Ok((self.frame.transpose() * a * &self.frame).trace())
    }

    pub fn complement(&self) -> Matrix {
        orthonormal_complement(&self.frame)
    }

    /// Orientation-reversed plane (last column negated).
    pub fn reversed(&self) -> Self {
        let mut f = self.frame.clone();
        if let Some(mut c) = f.column_iter_mut().last() {
            c.neg_mut();
        }
        OrientedPlane { frame: f }
    }

    /// Cousin frames: column `a` replaced by complement vector `b`, ordered by `(b, a)`.
    pub fn cousin_frames(&self) -> Vec<OrientedPlane> {
        let comp = self.complement();
        let mut out = Vec::with_capacity(comp.ncols() * self.degree());
        for b in 0..comp.ncols() {
            for a in 0..self.degree() {
                let mut f = self.frame.clone();
                f.set_column(a, &comp.column(b));
                out.push(OrientedPlane { frame: f });
            }
        }
        out
    }

    /// First cousins `b ∧ (a ⌟ ξ)` as p-vectors, ordered by `(b, a)`.
    pub fn first_cousins(&self) -> Vec<Form> {
        self.cousin_frames().iter().map(|c| c.simple_vector()).collect()
    }

    /// `qf(F + F⊥ B)`.
    pub fn retract(&self, dir: &TangentDirection) -> Result<OrientedPlane> {
        if dir.coeffs.iter().all(|&x| x == 0.0) {
            return Ok(self.clone());
        }
        if dir.coeffs.iter().any(|x| !x.is_finite()) {
            return Err(Error::RankCollapse);
        }
        let m = &self.frame + &dir.complement * &dir.coeffs;
        OrientedPlane::from_columns(&m)
    }

    /// Haar-uniform oriented plane.
    pub fn sample_uniform<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> OrientedPlane {
        let g = gaussian_matrix(n, p, rng);
        let q = qr_positive(&g).map(|(q, _)| q).unwrap_or_else(|_| Matrix::identity(n, p));
        if p == n {
            let mut f = Matrix::identity(n, n);
            if q.determinant() < 0.0 {
                f[(n - 1, n - 1)] = -1.0;
            }
            return OrientedPlane { frame: f };
        }
        OrientedPlane { frame: q }
    }

    /// Same unoriented span, via `‖P_ξ − P_η‖_F ≤ 1e-8`.
    pub fn same_span(&self, other: &OrientedPlane) -> bool {
        self.dim() == other.dim() && (self.projector() - other.projector()).norm() <= 1e-8
    }

    /// Total order on frames (column-major lexicographic) used for tie-breaks.
    pub fn lex_cmp(&self, other: &OrientedPlane) -> Ordering {
        for (a, b) in self.frame.iter().zip(other.frame.iter()) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    pub fn to_file(&self) -> PlaneFile {
        PlaneFile {
            dim: self.dim(),
            degree: self.degree(),
            frame: self.frame.column_iter().map(|c| c.iter().copied().collect()).collect(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: PlaneFile = serde_json::from_str(text)?;
        file.into_plane()
    }
}

/// Plane file: `frame` lists the columns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlaneFile {
    pub dim: usize,
    pub degree: usize,
    pub frame: Vec<Vec<f64>>,
}

impl PlaneFile {
    pub fn into_plane(self) -> Result<OrientedPlane> {
        if self.frame.len() != self.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: self.frame.len() });
        }
        for c in &self.frame {
            if c.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, found: c.len() });
            }
        }
        let cols: Vec<f64> = self.frame.concat();
        let m = Matrix::from_column_slice(self.dim, self.degree, &cols);
        OrientedPlane::from_columns_checked(&m, 1e-6)
    }
}
