//! Small dense complex linear algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// `i^k` from the period-4 table; exact for every integer `k`.
pub fn i_pow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Max-row-sum (induced infinity) norm.
pub fn max_row_sum(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_vec(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Singular values in decreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value (operator 2-norm).
pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value divided by the largest one.
pub fn reciprocal_condition(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

/// Determinant kept as `exp(log_abs) * phase` so that it never overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    pub phase: C64,
}

impl LogDet {
    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    pub fn value(&self) -> C64 {
        self.phase * self.log_abs.exp()
    }

    /// Principal logarithm of `self / other`.
    pub fn ln_ratio(&self, other: &LogDet) -> C64 {
        C64::new(self.log_abs - other.log_abs, (self.phase / other.phase).arg())
    }
}

/// Log-scaled determinant from an LU factorization with partial pivoting.
pub fn log_det(m: &CMatrix) -> LogDet {
    assert!(m.is_square());
    let lu = m.clone().lu();
    let u = lu.u();
    let mut log_abs = 0.0;
    let mut phase: C64 = lu.p().determinant();
    for k in 0..u.nrows() {
        let d = u[(k, k)];
        let r = d.norm();
        if r == 0.0 {
            return LogDet {
                log_abs: f64::NEG_INFINITY,
                phase: C64::new(1.0, 0.0),
            };
        }
        log_abs += r.ln();
        phase *= d / r;
    }
    LogDet { log_abs, phase }
}

pub fn solve(m: &CMatrix, rhs: &CMatrix, context: &'static str) -> Result<CMatrix> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::Conditioning { context, rcond: 0.0 })
}

pub fn inverse(m: &CMatrix, context: &'static str) -> Result<CMatrix> {
    m.clone()
        .try_inverse()
        .ok_or(Error::Conditioning { context, rcond: 0.0 })
}

/// Moore-Penrose pseudo-inverse solve, dropping singular values below `rcond * s_max`.
pub fn least_squares(m: &CMatrix, rhs: &CMatrix, rcond: f64) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(rhs, rcond * smax)
        .expect("svd computed with both factors")
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule on `[lo, hi]` with `panels` equal panels.
pub fn composite_rule(lo: f64, hi: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let h = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let c = lo + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((c + 0.5 * h * xi, 0.5 * h * wi));
        }
    }
    out
}
