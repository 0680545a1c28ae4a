//! Quaternion and octonion arithmetic.
//!
//! Quaternions use the basis `1, i, j, k`. Octonions are pairs of quaternions
//! with `(a, b)(c, d) = (ac − d̄b, da + bc̄)`, so `e_{i+4} = e_i · ε`.

pub type Quaternion = [f64; 4];
pub type Octonion = [f64; 8];

pub fn qmul(a: &Quaternion, b: &Quaternion) -> Quaternion {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn qconj(a: &Quaternion) -> Quaternion {
    [a[0], -a[1], -a[2], -a[3]]
}

fn qadd(a: &Quaternion, b: &Quaternion) -> Quaternion {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn qsub(a: &Quaternion, b: &Quaternion) -> Quaternion {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn split(x: &Octonion) -> (Quaternion, Quaternion) {
    ([x[0], x[1], x[2], x[3]], [x[4], x[5], x[6], x[7]])
}

/// Cayley–Dickson product.
pub fn omul_direct(x: &Octonion, y: &Octonion) -> Octonion {
    let (a, b) = split(x);
    let (c, d) = split(y);
    let lo = qsub(&qmul(&a, &c), &qmul(&qconj(&d), &b));
    let hi = qadd(&qmul(&d, &a), &qmul(&b, &qconj(&c)));
    [lo[0], lo[1], lo[2], lo[3], hi[0], hi[1], hi[2], hi[3]]
}

pub fn oconj(x: &Octonion) -> Octonion {
    let mut y = x.map(|v| -v);
    y[0] = x[0];
    y
}

pub fn odot(x: &Octonion, y: &Octonion) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Structure constants: `table[i][j][k]` is the `e_k` coefficient of `e_i e_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct OctonionTable {
    table: [[[f64; 8]; 8]; 8],
}

impl Default for OctonionTable {
    fn default() -> Self {
        Self::new()
    }
}

impl OctonionTable {
    pub fn new() -> Self {
        let mut table = [[[0.0; 8]; 8]; 8];
        for i in 0..8 {
            for j in 0..8 {
                let mut ei = [0.0; 8];
                ei[i] = 1.0;
                let mut ej = [0.0; 8];
                ej[j] = 1.0;
                table[i][j] = omul_direct(&ei, &ej);
            }
        }
        OctonionTable { table }
    }

    pub fn coefficient(&self, i: usize, j: usize, k: usize) -> f64 {
        self.table[i][j][k]
    }

    pub fn mul(&self, x: &Octonion, y: &Octonion) -> Octonion {
        let mut out = [0.0; 8];
        for i in 0..8 {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..8 {
                let c = x[i] * y[j];
                if c == 0.0 {
                    continue;
                }
                for k in 0..8 {
                    out[k] += c * self.table[i][j][k];
                }
            }
        }
        out
    }

    /// Triple cross product `x × y × z = ½(x(ȳz) − z(ȳx))`.
    pub fn triple_cross(&self, x: &Octonion, y: &Octonion, z: &Octonion) -> Octonion {
        let yb = oconj(y);
        let a = self.mul(x, &self.mul(&yb, z));
        let b = self.mul(z, &self.mul(&yb, x));
        let mut out = [0.0; 8];
        for k in 0..8 {
            out[k] = 0.5 * (a[k] - b[k]);
        }
        out
    }
}
