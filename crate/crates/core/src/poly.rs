//! Piecewise polynomials with scalar or matrix coefficients.
//!
//! Every piece stores its coefficients in the local variable `x = t - start`,
//! where `start` is the left end of the piece. Values at a breakpoint belong
//! to the piece on the right.

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Coefficient ring for [`Piecewise`].
pub trait Coeff: Clone + Debug + Send + Sync {
    fn zero_like(&self) -> Self;
    /// `self += s * other`
    fn add_scaled(&mut self, other: &Self, s: f64);
    fn is_exact_zero(&self) -> bool;
    fn magnitude(&self) -> f64;
}

impl Coeff for C64 {
    fn zero_like(&self) -> Self {
        C64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, other: &Self, s: f64) {
        *self += other * s;
    }
    fn is_exact_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Coeff for CMatrix {
    fn zero_like(&self) -> Self {
        CMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_scaled(&mut self, other: &Self, s: f64) {
        self.zip_apply(other, |a, b| *a += b * s);
    }
    fn is_exact_zero(&self) -> bool {
        self.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
    fn magnitude(&self) -> f64 {
        crate::linalg::max_abs(self)
    }
}

/// Horner evaluation of `sum c_k x^k`.
pub fn horner<T: Coeff>(coeffs: &[T], x: f64) -> T {
    let mut acc = coeffs.last().expect("non-empty polynomial").clone();
    for c in coeffs.iter().rev().skip(1) {
        let mut next = c.clone();
        next.add_scaled(&acc, x);
        // next = c + x * acc
        acc = next;
    }
    acc
}

/// Coefficients of `p(x + d)` given those of `p(x)`.
pub fn taylor_shift<T: Coeff>(coeffs: &[T], d: f64) -> Vec<T> {
    if d == 0.0 {
        return coeffs.to_vec();
    }
    let mut out = coeffs.to_vec();
    // repeated synthetic division: n^2/2 fused updates, exact for d = 0
    let n = out.len();
    for i in 0..n {
        for k in (i..n - 1).rev() {
            let hi = out[k + 1].clone();
            out[k].add_scaled(&hi, d);
        }
    }
    out
}

pub fn antiderivative<T: Coeff>(coeffs: &[T], constant: T) -> Vec<T> {
    let mut out = Vec::with_capacity(coeffs.len() + 1);
    out.push(constant);
    for (k, c) in coeffs.iter().enumerate() {
        let mut z = c.zero_like();
        z.add_scaled(c, 1.0 / (k as f64 + 1.0));
        out.push(z);
    }
    out
}

pub fn derivative<T: Coeff>(coeffs: &[T]) -> Vec<T> {
    if coeffs.len() <= 1 {
        return vec![coeffs[0].zero_like()];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| {
            let mut z = c.zero_like();
            z.add_scaled(c, k as f64);
            z
        })
        .collect()
}

/// Cauchy product of two coefficient lists with a caller-supplied multiplication.
pub fn convolve<T: Coeff>(p: &[T], q: &[T], mul: impl Fn(&T, &T) -> T) -> Vec<T> {
    let zero = mul(&p[0], &q[0]).zero_like();
    let mut out = vec![zero; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            let prod = mul(a, b);
            out[i + j].add_scaled(&prod, 1.0);
        }
    }
    out
}

/// Piecewise polynomial on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise<T> {
    a: f64,
    b: f64,
    starts: Vec<f64>,
    pieces: Vec<Vec<T>>,
}

pub type PiecewisePoly = Piecewise<C64>;
pub type PiecewiseMatrix = Piecewise<CMatrix>;

impl<T: Coeff> Piecewise<T> {
    pub fn new(a: f64, b: f64, starts: Vec<f64>, pieces: Vec<Vec<T>>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid("interval", format!("need a < b, got [{a}, {b}]")));
        }
        if starts.is_empty() || starts.len() != pieces.len() {
            return Err(Error::invalid(
                "pieces",
                "one coefficient list per piece start is required",
            ));
        }
        if starts[0] != a {
            return Err(Error::invalid("pieces", "first piece must start at a"));
        }
        if starts.windows(2).any(|w| w[0] >= w[1]) || starts.iter().any(|&s| s >= b) {
            return Err(Error::invalid(
                "breakpoints",
                "piece starts must be strictly increasing and lie inside [a, b)",
            ));
        }
        if pieces.iter().any(|p| p.is_empty()) {
            return Err(Error::invalid("pieces", "empty coefficient list"));
        }
        Ok(Piecewise { a, b, starts, pieces })
    }

    pub fn single(a: f64, b: f64, coeffs: Vec<T>) -> Result<Self> {
        Self::new(a, b, vec![a], vec![coeffs])
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    /// Interior breakpoints.
    pub fn breakpoints(&self) -> &[f64] {
        &self.starts[1..]
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn piece(&self, i: usize) -> &[T] {
        &self.pieces[i]
    }

    pub fn piece_bounds(&self, i: usize) -> (f64, f64) {
        let end = self.starts.get(i + 1).copied().unwrap_or(self.b);
        (self.starts[i], end)
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().map(|p| p.len() - 1).max().unwrap_or(0)
    }

    /// Index of the piece containing `t` (right-limit convention, clamped to `[a, b]`).
    pub fn piece_index(&self, t: f64) -> usize {
        match self.starts.partition_point(|&s| s <= t) {
            0 => 0,
            k => k - 1,
        }
    }

    /// Index of the piece whose closure contains `t` approached from the left.
    pub fn piece_index_left(&self, t: f64) -> usize {
        match self.starts.partition_point(|&s| s < t) {
            0 => 0,
            k => k - 1,
        }
    }

    pub fn eval(&self, t: f64) -> T {
        self.eval_in_piece(self.piece_index(t), t)
    }

    /// Evaluate the polynomial of piece `i` at `t` (which may lie outside the piece).
    pub fn eval_in_piece(&self, i: usize, t: f64) -> T {
        horner(&self.pieces[i], t - self.starts[i])
    }

    /// Coefficients of piece `i` re-expanded about `t0`.
    pub fn expand_in_piece(&self, i: usize, t0: f64) -> Vec<T> {
        taylor_shift(&self.pieces[i], t0 - self.starts[i])
    }

    pub fn map<U: Coeff>(&self, f: impl Fn(&T) -> U) -> Piecewise<U> {
        Piecewise {
            a: self.a,
            b: self.b,
            starts: self.starts.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|p| p.iter().map(&f).collect())
                .collect(),
        }
    }

    /// The same function on a finer mesh. `starts` must contain every current start.
    pub fn refine(&self, starts: &[f64]) -> Self {
        let pieces = starts
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let end = starts.get(k + 1).copied().unwrap_or(self.b);
                let i = self.piece_index(0.5 * (s + end));
                self.expand_in_piece(i, s)
            })
            .collect();
        Piecewise {
            a: self.a,
            b: self.b,
            starts: starts.to_vec(),
            pieces,
        }
    }

    /// `∫_a^t` as a continuous piecewise polynomial.
    pub fn integral(&self) -> Self {
        let mut acc = self.pieces[0][0].zero_like();
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for i in 0..self.pieces.len() {
            let anti = antiderivative(&self.pieces[i], acc.clone());
            let (s, e) = self.piece_bounds(i);
            acc = horner(&anti, e - s);
            pieces.push(anti);
        }
        Piecewise {
            a: self.a,
            b: self.b,
            starts: self.starts.clone(),
            pieces,
        }
    }

    /// Combine with another piecewise polynomial on the union mesh.
    pub fn zip_with<U: Coeff, V: Coeff>(
        &self,
        other: &Piecewise<U>,
        f: impl Fn(&[T], &[U]) -> Vec<V>,
    ) -> Result<Piecewise<V>> {
        if self.a != other.a || self.b != other.b {
            return Err(Error::invalid(
                "interval",
                format!(
                    "operands live on [{}, {}] and [{}, {}]",
                    self.a, self.b, other.a, other.b
                ),
            ));
        }
        let starts = merge_starts(&self.starts, &other.starts);
        let lhs = self.refine(&starts);
        let rhs = other.refine(&starts);
        let pieces = lhs
            .pieces
            .iter()
            .zip(&rhs.pieces)
            .map(|(p, q)| f(p, q))
            .collect();
        Ok(Piecewise {
            a: self.a,
            b: self.b,
            starts,
            pieces,
        })
    }

    pub fn is_exact_zero(&self) -> bool {
        self.pieces.iter().flatten().all(Coeff::is_exact_zero)
    }

    /// Drop trailing exact-zero coefficients (keeps at least one per piece).
    pub fn trimmed(mut self) -> Self {
        for p in &mut self.pieces {
            while p.len() > 1 && p.last().is_some_and(Coeff::is_exact_zero) {
                p.pop();
            }
        }
        self
    }
}

impl PiecewisePoly {
    pub fn constant(a: f64, b: f64, c: C64) -> Result<Self> {
        Self::single(a, b, vec![c])
    }

    /// Piecewise linear interpolant through `(t_k, v_k)`, with `t_0 = a` and `t_last = b`.
    pub fn linear_interpolant(nodes: &[f64], values: &[C64]) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(Error::invalid("nodes", "need at least two nodes with values"));
        }
        let n = nodes.len();
        let starts = nodes[..n - 1].to_vec();
        let pieces = (0..n - 1)
            .map(|k| {
                let slope = (values[k + 1] - values[k]) / (nodes[k + 1] - nodes[k]);
                vec![values[k], slope]
            })
            .collect();
        Self::new(nodes[0], nodes[n - 1], starts, pieces)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |p, q| {
            let n = p.len().max(q.len());
            (0..n)
                .map(|k| {
                    p.get(k).copied().unwrap_or_default() - q.get(k).copied().unwrap_or_default()
                })
                .collect()
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |p, q| convolve(p, q, |x, y| x * y))
    }

    pub fn is_real(&self) -> bool {
        self.pieces.iter().flatten().all(|z| z.im == 0.0)
    }
}

impl PiecewiseMatrix {
    pub fn dim(&self) -> (usize, usize) {
        let c = &self.pieces[0][0];
        (c.nrows(), c.ncols())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |p, q| convolve(p, q, |x, y| x * y))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |p, q| {
            let zero = p[0].zero_like();
            let n = p.len().max(q.len());
            (0..n)
                .map(|k| p.get(k).unwrap_or(&zero) - q.get(k).unwrap_or(&zero))
                .collect()
        })
    }

    /// Scalar piecewise polynomial of entry `(r, c)`.
    pub fn entry(&self, r: usize, c: usize) -> PiecewisePoly {
        self.map(|m| m[(r, c)])
    }
}

/// Sorted union of two start lists (both begin with the same `a`).
pub fn merge_starts(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = x.iter().chain(y).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// Real roots of a real polynomial inside `[lo, hi]`, by recursive isolation
/// between critical points followed by bisection.
pub fn real_roots_in(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut p = coeffs.to_vec();
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    let eval = |x: f64| p.iter().rev().fold(0.0, |acc, c| acc * x + c);
    match p.len() {
        0 | 1 => return Vec::new(),
        2 => {
            let r = -p[0] / p[1];
            return if (lo..=hi).contains(&r) { vec![r] } else { Vec::new() };
        }
        _ => {}
    }
    let dp: Vec<f64> = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect();
    let mut pts = vec![lo];
    pts.extend(real_roots_in(&dp, lo, hi));
    pts.push(hi);

    let mut roots = Vec::new();
    for w in pts.windows(2) {
        let (mut x0, mut x1) = (w[0], w[1]);
        let (mut f0, f1) = (eval(x0), eval(x1));
        if f0 == 0.0 {
            roots.push(x0);
            continue;
        }
        if f0 * f1 < 0.0 {
            for _ in 0..200 {
                let xm = 0.5 * (x0 + x1);
                if xm <= x0 || xm >= x1 {
                    break;
                }
                let fm = eval(xm);
                if fm == 0.0 {
                    x0 = xm;
                    x1 = xm;
                    break;
                }
                if (fm < 0.0) == (f0 < 0.0) {
                    x0 = xm;
                    f0 = fm;
                } else {
                    x1 = xm;
                }
            }
            roots.push(0.5 * (x0 + x1));
        }
    }
    if eval(hi) == 0.0 {
        roots.push(hi);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
    roots
}
