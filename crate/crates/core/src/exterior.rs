//! Exterior algebra of ℝⁿ with the Euclidean metric.
//!
//! Vectors and covectors are identified through the metric, so a [`Form`]
//! stores p-forms and p-vectors alike. Axes are 0-based in the API and
//! 1-based in the JSON file format.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cofactors, det, Matrix, Vector};

/// Strictly increasing list of 0-based axes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        let ok = indices.windows(2).all(|w| w[0] < w[1]) && indices.iter().all(|&i| i < dim);
        if ok {
            Ok(MultiIndex(indices))
        } else {
            Err(Error::InvalidIndex { indices, dim })
        }
    }

    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Sorts an arbitrary list, returning the permutation sign, or `None` on a
    /// repeated entry.
    pub fn sorted_with_sign(mut v: Vec<usize>) -> Option<(MultiIndex, f64)> {
        let mut sign = 1.0;
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                v.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
            if j > 0 && v[j - 1] == v[j] {
                return None;
            }
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some((MultiIndex(v), sign))
    }

    /// All increasing `p`-subsets of `0..n` in lexicographic order.
    pub fn all(n: usize, p: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(p);
        fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if cur.len() == p {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for i in start..n {
                if n - i < p - cur.len() {
                    break;
                }
                cur.push(i);
                rec(i + 1, n, p, cur, out);
                cur.pop();
            }
        }
        rec(0, n, p, &mut cur, &mut out);
        out
    }
}

/// Alternating form of degree `degree` on ℝ^`dim`, sparse in the monomial basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl Form {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Form { dim, degree, coeffs: BTreeMap::new() }
    }

    pub fn scalar(dim: usize, c: f64) -> Self {
        let mut f = Form::zero(dim, 0);
        f.add_term(MultiIndex::empty(), c);
        f
    }

    /// Builds a form from `(0-based indices, coefficient)` pairs; indices may be
    /// unsorted and are reordered with the matching sign.
    pub fn from_terms<I>(dim: usize, degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let mut f = Form::zero(dim, degree);
        for (idx, c) in terms {
            if idx.len() != degree {
                return Err(Error::DegreeMismatch { expected: degree, found: idx.len() });
            }
            if idx.iter().any(|&i| i >= dim) {
                return Err(Error::InvalidIndex { indices: idx, dim });
            }
            if let Some((mi, s)) = MultiIndex::sorted_with_sign(idx) {
                f.add_term(mi, s * c);
            }
        }
        Ok(f)
    }

    /// The monomial `dx_{i1} ∧ … ∧ dx_{ip}`.
    pub fn monomial(dim: usize, indices: &[usize]) -> Result<Self> {
        Form::from_terms(dim, indices.len(), [(indices.to_vec(), 1.0)])
    }

    /// The 1-form `Σ vᵢ dxᵢ`.
    pub fn one_form(v: &Vector) -> Self {
        let mut f = Form::zero(v.len(), 1);
        for (i, &c) in v.iter().enumerate() {
            f.add_term(MultiIndex(vec![i]), c);
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, idx: &MultiIndex) -> f64 {
        self.coeffs.get(idx).copied().unwrap_or(0.0)
    }

    /// Coefficient at 0-based sorted indices.
    pub fn coeff_at(&self, idx: &[usize]) -> f64 {
        self.coeffs.get(&MultiIndex(idx.to_vec())).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(k, &v)| (k, v))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn add_term(&mut self, idx: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.coeffs.entry(idx) {
            Entry::Occupied(mut o) => {
                let v = *o.get() + c;
                if v == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    fn check_same(&self, other: &Form) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        Ok(())
    }

    pub fn add(&self, other: &Form) -> Result<Form> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (k, v) in other.terms() {
            out.add_term(k.clone(), v);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Form) -> Result<Form> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Form {
        let mut out = Form::zero(self.dim, self.degree);
        for (k, v) in self.terms() {
            out.add_term(k.clone(), s * v);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean distance between coefficient vectors.
    pub fn distance(&self, other: &Form) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Exterior product.
    pub fn wedge(&self, other: &Form) -> Result<Form> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut out = Form::zero(self.dim, self.degree + other.degree);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if let Some((idx, s)) = merge_sign(a.as_slice(), b.as_slice()) {
                    out.add_term(idx, s * ca * cb);
                }
            }
        }
        Ok(out)
    }

    /// Interior product `v ⌟ self`. Contracting a 0-form yields the zero 0-form.
    pub fn contract(&self, v: &Vector) -> Result<Form> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        if self.degree == 0 {
            return Ok(Form::zero(self.dim, 0));
        }
        let mut out = Form::zero(self.dim, self.degree - 1);
        for (idx, c) in self.terms() {
            let ix = idx.as_slice();
            for k in 0..ix.len() {
                let vk = v[ix[k]];
                if vk == 0.0 {
                    continue;
                }
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                let mut rest = ix.to_vec();
                rest.remove(k);
                out.add_term(MultiIndex(rest), s * vk * c);
            }
        }
        Ok(out)
    }

    /// Hodge star for the orientation `dx_1 ∧ … ∧ dx_n`.
    pub fn hodge_star(&self) -> Form {
        let n = self.dim;
        let mut out = Form::zero(n, n - self.degree);
        for (idx, c) in self.terms() {
            let comp: Vec<usize> = (0..n).filter(|i| !idx.contains(*i)).collect();
            let mut all = idx.as_slice().to_vec();
            all.extend_from_slice(&comp);
            let (_, s) = MultiIndex::sorted_with_sign(all).expect("disjoint complement");
            out.add_term(MultiIndex(comp), s * c);
        }
        out
    }

    /// Inner product in the orthonormal monomial basis.
    pub fn pairing(&self, other: &Form) -> Result<f64> {
        self.check_same(other)?;
        let (small, large) = if self.num_terms() <= other.num_terms() { (self, other) } else { (other, self) };
        Ok(small.terms().map(|(k, v)| v * large.coeff(k)).sum())
    }

    /// `D_{Aᵗ}`: replaces each `dx_m` by `Aᵗ dx_m = Σ_i A[m,i] dx_i` as a derivation.
    pub fn derivation_action(&self, a: &Matrix) -> Result<Form> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: a.nrows() });
        }
        let n = self.dim;
        let mut out = Form::zero(n, self.degree);
        for (idx, c) in self.terms() {
            let ix = idx.as_slice();
            for k in 0..ix.len() {
                let m = ix[k];
                for i in 0..n {
                    let aij = a[(m, i)];
                    if aij == 0.0 {
                        continue;
                    }
                    if i != m && idx.contains(i) {
                        continue;
                    }
                    let mut v = ix.to_vec();
                    v[k] = i;
                    if let Some((mi, s)) = MultiIndex::sorted_with_sign(v) {
                        out.add_term(mi, s * aij * c);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Simple p-vector `v_1 ∧ … ∧ v_p` of the columns of `frame`.
    pub fn simple(frame: &Matrix) -> Form {
        let (n, p) = frame.shape();
        let mut out = Form::zero(n, p);
        for idx in MultiIndex::all(n, p) {
            let d = det(&frame.select_rows(idx.as_slice()));
            out.add_term(idx, d);
        }
        out
    }

    /// `φ(v_1, …, v_p)` for the columns of an arbitrary n×p matrix.
    pub fn evaluate(&self, frame: &Matrix) -> f64 {
        debug_assert_eq!(frame.nrows(), self.dim);
        debug_assert_eq!(frame.ncols(), self.degree);
        self.terms().map(|(idx, c)| c * det(&frame.select_rows(idx.as_slice()))).sum()
    }

    /// Value and Euclidean gradient `∂φ(F)/∂F` at an n×p matrix.
    pub fn evaluate_with_gradient(&self, frame: &Matrix) -> (f64, Matrix) {
        let (n, p) = frame.shape();
        let mut g = Matrix::zeros(n, p);
        let mut val = 0.0;
        for (idx, c) in self.terms() {
            let ix = idx.as_slice();
            let sub = frame.select_rows(ix);
            val += c * det(&sub);
            let cof = cofactors(&sub);
            for (r, &row) in ix.iter().enumerate() {
                for a in 0..p {
                    g[(row, a)] += c * cof[(r, a)];
                }
            }
        }
        (val, g)
    }

    /// Pullback along the columns of `basis` (n×k), giving a form on ℝᵏ.
    pub fn pullback(&self, basis: &Matrix) -> Form {
        let k = basis.ncols();
        let mut out = Form::zero(k, self.degree);
        for jdx in MultiIndex::all(k, self.degree) {
            let cols = basis.select_columns(jdx.as_slice());
            out.add_term(jdx, self.evaluate(&cols));
        }
        out
    }

    /// Pushforward of a form on ℝᵏ along an orthonormal `basis` (n×k).
    pub fn pushforward(&self, basis: &Matrix) -> Form {
        let n = basis.nrows();
        let mut out = Form::zero(n, self.degree);
        for (jdx, c) in self.terms() {
            let cols = basis.select_columns(jdx.as_slice());
            let s = Form::simple(&cols);
            for (idx, v) in s.terms() {
                out.add_term(idx.clone(), c * v);
            }
        }
        out
    }

    pub fn from_json_str(text: &str) -> Result<Form> {
        let file: FormFile = serde_json::from_str(text)?;
        file.into_form()
    }

    pub fn to_file(&self) -> FormFile {
        FormFile {
            dim: self.dim,
            degree: self.degree,
            terms: self
                .terms()
                .map(|(k, c)| FormTerm { indices: k.as_slice().iter().map(|i| i + 1).collect(), coeff: c })
                .collect(),
        }
    }
}

fn merge_sign(a: &[usize], b: &[usize]) -> Option<(MultiIndex, f64)> {
    let mut inversions = 0usize;
    for &x in a {
        for &y in b {
            if x == y {
                return None;
            }
            if x > y {
                inversions += 1;
            }
        }
    }
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    Some((MultiIndex(v), if inversions % 2 == 0 { 1.0 } else { -1.0 }))
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let label: Vec<String> = k.as_slice().iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "{c}·dx{}", label.join(","))?;
        }
        Ok(())
    }
}

/// One `{"indices", "coeff"}` entry of a form file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormTerm {
    pub indices: Vec<usize>,
    pub coeff: f64,
}

/// JSON form file with 1-based, strictly increasing indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormFile {
    pub dim: usize,
    pub degree: usize,
    pub terms: Vec<FormTerm>,
}

impl FormFile {
    pub fn into_form(self) -> Result<Form> {
        let mut f = Form::zero(self.dim, self.degree);
        for t in self.terms {
            if t.indices.len() != self.degree {
                return Err(Error::DegreeMismatch { expected: self.degree, found: t.indices.len() });
            }
            if t.indices.iter().any(|&i| i == 0 || i > self.dim) {
                return Err(Error::InvalidIndex { indices: t.indices, dim: self.dim });
            }
            let zero_based: Vec<usize> = t.indices.iter().map(|i| i - 1).collect();
            let idx = MultiIndex::new(zero_based, self.dim).map_err(|_| Error::InvalidIndex {
                indices: t.indices.clone(),
                dim: self.dim,
            })?;
            f.add_term(idx, t.coeff);
        }
        Ok(f)
    }
}
