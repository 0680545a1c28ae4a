//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Deterministic generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vector {
    Vector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

pub fn random_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    let g = gaussian_matrix(n, n, rng);
    (&g + g.transpose()) * 0.5
}

pub fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

/// Thin QR with positive diagonal in `R`. Columns of `Q` are orthonormal and
/// `Q` has the same orientation as the input columns.
pub fn qr_positive(m: &Matrix) -> Result<(Matrix, Matrix)> {
    let (n, p) = m.shape();
    if p == 0 {
        return Ok((Matrix::zeros(n, 0), Matrix::zeros(0, 0)));
    }
    let scale = m.norm().max(1e-300);
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..p {
        let d = r[(j, j)];
        if !d.is_finite() || d.abs() <= 1e-12 * scale {
            return Err(Error::RankCollapse);
        }
        if d < 0.0 {
            q.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    Ok((q, r))
}

/// Orthonormal basis of the orthogonal complement of the column span of an
/// orthonormal `frame`.
pub fn orthonormal_complement(frame: &Matrix) -> Matrix {
    let (n, p) = frame.shape();
    let mut basis: Vec<Vector> = (0..p).map(|j| frame.column(j).into_owned()).collect();
    let mut out: Vec<Vector> = Vec::with_capacity(n - p);
    let mut used = vec![false; n];
    while out.len() < n - p {
        let mut best = None;
        let mut best_norm = -1.0;
        for i in 0..n {
            if used[i] {
                continue;
            }
            let mut v = Vector::zeros(n);
            v[i] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dot(&v);
                    v.axpy(-c, b, 1.0);
                }
            }
            let nv = v.norm();
            if nv > best_norm + 1e-12 {
                best_norm = nv;
                best = Some((i, v));
            }
        }
        let (i, v) = best.expect("complement candidate");
        used[i] = true;
        let v = v / best_norm;
        basis.push(v.clone());
        out.push(v);
    }
    if out.is_empty() {
        Matrix::zeros(n, 0)
    } else {
        Matrix::from_columns(&out)
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(symmetrize(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Orthonormal basis of `{x : a x = 0}` using a relative singular-value cutoff.
pub fn null_space(a: &Matrix, rel_tol: f64) -> Matrix {
    let k = a.ncols();
    let rows = a.nrows().max(k);
    let padded = Matrix::from_fn(rows, k, |r, c| if r < a.nrows() { a[(r, c)] } else { 0.0 });
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let top = svd.singular_values.max();
    let cols: Vec<Vector> = (0..k)
        .filter(|&i| svd.singular_values[i] <= rel_tol * top)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        Matrix::zeros(k, 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &Matrix) -> f64 {
    let n = m.nrows();
    match n {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => {
            let mut a = m.clone();
            let mut d = 1.0;
            for c in 0..n {
                let mut piv = c;
                for r in c + 1..n {
                    if a[(r, c)].abs() > a[(piv, c)].abs() {
                        piv = r;
                    }
                }
                if a[(piv, c)] == 0.0 {
                    return 0.0;
                }
                if piv != c {
                    a.swap_rows(piv, c);
                    d = -d;
                }
                let pv = a[(c, c)];
                d *= pv;
                for r in c + 1..n {
                    let f = a[(r, c)] / pv;
                    if f != 0.0 {
                        for k in c + 1..n {
                            a[(r, k)] -= f * a[(c, k)];
                        }
                    }
                }
            }
            d
        }
    }
}

/// Cofactor matrix `C` with `C[r][c] = (-1)^(r+c) det(minor(r, c))`.
pub fn cofactors(m: &Matrix) -> Matrix {
    let n = m.nrows();
    if n == 1 {
        return Matrix::from_element(1, 1, 1.0);
    }
    let mut out = Matrix::zeros(n, n);
    let mut minor = Matrix::zeros(n - 1, n - 1);
    for r in 0..n {
        for c in 0..n {
            for (ri, rr) in (0..n).filter(|&x| x != r).enumerate() {
                for (ci, cc) in (0..n).filter(|&x| x != c).enumerate() {
                    minor[(ri, ci)] = m[(rr, cc)];
                }
            }
            let s = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            out[(r, c)] = s * det(&minor);
        }
    }
    out
}

/// Matrix exponential.
pub fn expm(x: &Matrix) -> Matrix {
    x.clone().exp()
}

/// `v ∘ w = ½(v wᵀ + w vᵀ)`.
pub fn sym_product(v: &Vector, w: &Vector) -> Matrix {
    (v * w.transpose() + w * v.transpose()) * 0.5
}

/// Frobenius inner product `tr(A Bᵀ)`.
pub fn frobenius_dot(a: &Matrix, b: &Matrix) -> f64 {
    a.component_mul(b).sum()
}

/// Orthonormalize the rows of `rows` (k×n) into an n×k column frame. Returns
/// the frame and the Frobenius size of the correction.
pub fn orthonormalize_rows(rows: &Matrix) -> Result<(Matrix, f64)> {
    let cols = rows.transpose();
    let (q, _) = qr_positive(&cols)?;
    let corr = (&q - &cols).norm();
    Ok((q, corr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_matches_nalgebra() {
        let mut rng = rng_for(1, 0);
        for n in 1..=7 {
            let m = gaussian_matrix(n, n, &mut rng);
            let d = det(&m);
            assert!((d - m.determinant()).abs() <= 1e-10 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn cofactor_identity() {
        let mut rng = rng_for(2, 0);
        let m = gaussian_matrix(4, 4, &mut rng);
        let c = cofactors(&m);
        let prod = m.transpose() * c;
        let d = det(&m);
        assert!((prod - Matrix::identity(4, 4) * d).norm() < 1e-10);
    }

    #[test]
    fn complement_is_orthonormal() {
        let mut rng = rng_for(3, 0);
        let (q, _) = qr_positive(&gaussian_matrix(6, 2, &mut rng)).unwrap();
        let c = orthonormal_complement(&q);
        assert_eq!(c.ncols(), 4);
        assert!((c.transpose() * &c - Matrix::identity(4, 4)).norm() < 1e-12);
        assert!((q.transpose() * &c).norm() < 1e-12);
    }

    #[test]
    fn qr_positive_diagonal() {
        let mut rng = rng_for(4, 0);
        let m = gaussian_matrix(5, 3, &mut rng);
        let (q, r) = qr_positive(&m).unwrap();
        assert!((&q * &r - &m).norm() < 1e-12);
        for j in 0..3 {
            assert!(r[(j, j)] > 0.0);
        }
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = Matrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.ncols(), 2);
        assert!((a * ns).norm() < 1e-12);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.3;
        let x = Matrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&x);
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-14);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-14);
    }
}
