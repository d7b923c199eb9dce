//! Antiderivatives `Q` of singular potentials `q = Q'`.
//!
//! `Q` is kept as an exact piecewise polynomial (jumps are implied by the
//! piece values at breakpoints), so a Dirac mass in `q` is a step in `Q`.
//! Norms of `Q` and of its antiderivative are computed in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{composite_rule, C64};
use crate::poly::{real_roots_in, PiecewisePoly};

/// Degree cap for every piece of a potential.
pub const MAX_DEGREE: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct AntiderivativeSpec {
    poly: PiecewisePoly,
}

impl AntiderivativeSpec {
    pub fn new(poly: PiecewisePoly) -> Result<Self> {
        Self::with_degree_cap(poly, MAX_DEGREE)
    }

    pub fn with_degree_cap(poly: PiecewisePoly, cap: usize) -> Result<Self> {
        let poly = poly.trimmed();
        if poly.max_degree() > cap {
            return Err(Error::invalid(
                "pieces",
                format!("degree {} exceeds the cap {cap}", poly.max_degree()),
            ));
        }
        if poly.starts().iter().chain([&poly.interval().1]).any(|x| !x.is_finite()) {
            return Err(Error::invalid("breakpoints", "non-finite value"));
        }
        Ok(AntiderivativeSpec { poly })
    }

    pub fn from_pieces(a: f64, b: f64, starts: Vec<f64>, pieces: Vec<Vec<C64>>) -> Result<Self> {
        Self::new(PiecewisePoly::new(a, b, starts, pieces)?)
    }

    pub fn zero(a: f64, b: f64) -> Result<Self> {
        Self::constant(a, b, C64::new(0.0, 0.0))
    }

    pub fn constant(a: f64, b: f64, c: C64) -> Result<Self> {
        Self::new(PiecewisePoly::constant(a, b, c)?)
    }

    /// `height · 1_{[at, b]}`: the antiderivative of `height · δ(t - at)`.
    pub fn step(a: f64, b: f64, at: f64, height: C64) -> Result<Self> {
        check_inside("step location", at, a, b)?;
        Self::from_pieces(a, b, vec![a, at], vec![vec![C64::new(0.0, 0.0)], vec![height]])
    }

    /// Continuous ramp rising linearly from 0 to `height` over `[from, from + width]`.
    pub fn ramp(a: f64, b: f64, from: f64, width: f64, height: C64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::invalid("ramp width", "must be positive"));
        }
        check_inside("ramp start", from, a, b)?;
        let end = from + width;
        if end > b {
            return Err(Error::Domain {
                what: "ramp end",
                value: end,
                lo: a,
                hi: b,
            });
        }
        let zero = C64::new(0.0, 0.0);
        let mut starts = vec![a, from];
        let mut pieces = vec![vec![zero], vec![zero, height / width]];
        if end < b {
            starts.push(end);
            pieces.push(vec![height]);
        }
        if from == a {
            starts.remove(0);
            pieces.remove(0);
        }
        Self::from_pieces(a, b, starts, pieces)
    }

    pub fn poly(&self) -> &PiecewisePoly {
        &self.poly
    }

    pub fn interval(&self) -> (f64, f64) {
        self.poly.interval()
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.poly.breakpoints()
    }

    pub fn is_real(&self) -> bool {
        self.poly.is_real()
    }

    /// `Q(t)`; at a breakpoint the right-limit value.
    pub fn eval_q(&self, t: f64) -> Result<C64> {
        let (a, b) = self.interval();
        check_inside("t", t, a, b)?;
        Ok(self.poly.eval(t))
    }

    /// `sup_t |∫_a^t Q(s) ds|`, maximised piece by piece over the critical
    /// points of `|F|^2`.
    pub fn antiderivative_sup_norm(&self) -> f64 {
        let f = self.poly.integral();
        let mut best: f64 = 0.0;
        for i in 0..f.num_pieces() {
            let (s, e) = f.piece_bounds(i);
            let coeffs = f.piece(i);
            let abs2 = abs_squared(coeffs);
            let d: Vec<f64> = abs2
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect();
            let mut xs = vec![0.0, e - s];
            xs.extend(real_roots_in(&d, 0.0, e - s));
            for x in xs {
                best = best.max(crate::poly::horner(coeffs, x).norm());
            }
        }
        best
    }

    /// `∫_a^b |Q|`: exact for real pieces (integration between sign changes),
    /// composite Gauss-Legendre for genuinely complex pieces.
    pub fn l1_norm(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.poly.num_pieces() {
            let (s, e) = self.poly.piece_bounds(i);
            let coeffs = self.poly.piece(i);
            if coeffs.iter().all(|z| z.im == 0.0) {
                let re: Vec<f64> = coeffs.iter().map(|z| z.re).collect();
                let anti = crate::poly::antiderivative(&re_as_c(&re), C64::new(0.0, 0.0));
                let mut xs = vec![0.0];
                xs.extend(real_roots_in(&re, 0.0, e - s));
                xs.push(e - s);
                for w in xs.windows(2) {
                    let v = crate::poly::horner(&anti, w[1]) - crate::poly::horner(&anti, w[0]);
                    total += v.re.abs();
                }
            } else {
                for (x, w) in composite_rule(0.0, e - s, 64, 16) {
                    total += w * crate::poly::horner(coeffs, x).norm();
                }
            }
        }
        total
    }

    pub fn subtract(&self, other: &Self) -> Result<Self> {
        if self.interval() != other.interval() {
            return Err(Error::invalid(
                "interval",
                "subtract requires potentials on identical intervals",
            ));
        }
        Self::new(self.poly.sub(&other.poly)?)
    }

    /// `Q + c`.
    pub fn shift(&self, c: C64) -> Self {
        let (a, b) = self.interval();
        let shifted = PiecewisePoly::new(
            a,
            b,
            self.poly.starts().to_vec(),
            (0..self.poly.num_pieces())
                .map(|i| {
                    let mut p = self.poly.piece(i).to_vec();
                    p[0] += c;
                    p
                })
                .collect(),
        )
        .expect("same mesh as a valid potential");
        AntiderivativeSpec { poly: shifted }
    }

    pub fn to_file(&self) -> PotentialFile {
        let (a, b) = self.interval();
        PotentialFile {
            interval: [a, b],
            pieces: (0..self.poly.num_pieces())
                .map(|i| PieceFile {
                    start: self.poly.starts()[i],
                    coeffs: self
                        .poly
                        .piece(i)
                        .iter()
                        .map(|z| ComplexValue::Pair([z.re, z.im]))
                        .collect(),
                })
                .collect(),
        }
    }
}

fn re_as_c(re: &[f64]) -> Vec<C64> {
    re.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// Coefficients of the real polynomial `|p(x)|^2`.
fn abs_squared(p: &[C64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * p.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in p.iter().enumerate() {
            out[i + j] += (a * b.conj()).re;
        }
    }
    out
}

fn check_inside(what: &'static str, t: f64, a: f64, b: f64) -> Result<()> {
    if t.is_finite() && a <= t && t <= b {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: t,
            lo: a,
            hi: b,
        })
    }
}

/// Mollified approximations of `strength · δ(t - center)`.
///
/// Each `Q_ε` is a ramp of width `ε` centred at `center`; the returned list
/// ends with the limit step `Q_0`. `sup |(Q_ε - Q_0)^∨| = |strength| ε / 8`.
pub fn make_delta_family(
    a: f64,
    b: f64,
    center: f64,
    strength: C64,
    eps_list: &[f64],
) -> Result<Vec<AntiderivativeSpec>> {
    if !(a < center && center < b) {
        return Err(Error::Domain {
            what: "center",
            value: center,
            lo: a,
            hi: b,
        });
    }
    let mut out = Vec::with_capacity(eps_list.len() + 1);
    for &eps in eps_list {
        let from = center - 0.5 * eps;
        if from <= a || center + 0.5 * eps >= b {
            return Err(Error::Domain {
                what: "ramp support",
                value: eps,
                lo: 0.0,
                hi: 2.0 * (center - a).min(b - center),
            });
        }
        out.push(AntiderivativeSpec::ramp(a, b, from, eps, strength)?);
    }
    out.push(AntiderivativeSpec::step(a, b, center, strength)?);
    Ok(out)
}

/// `Q_ε = Q_0` plus a square wave with half-period `h = ε/2` and amplitude `amplitude`.
///
/// The antiderivative of the oscillation is a triangle wave of height
/// `amplitude · h`, while its L¹ norm stays `amplitude · (b - a)` (up to the
/// final partial cell): the sup-of-antiderivative condition holds, the L¹
/// condition does not.
pub fn make_oscillating_family(
    base: &AntiderivativeSpec,
    amplitude: f64,
    eps_list: &[f64],
) -> Result<Vec<AntiderivativeSpec>> {
    let (a, b) = base.interval();
    let mut out = Vec::with_capacity(eps_list.len() + 1);
    for &eps in eps_list {
        let h = 0.5 * eps;
        let cells = ((b - a) / h).round() as usize;
        if cells < 2 || ((b - a) / h - cells as f64).abs() > 1e-9 {
            return Err(Error::invalid(
                "eps",
                "half-period must divide the interval length",
            ));
        }
        let starts: Vec<f64> = (0..cells).map(|k| a + k as f64 * h).collect();
        let pieces = (0..cells)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                vec![C64::new(sign * amplitude, 0.0)]
            })
            .collect();
        let wave = PiecewisePoly::new(a, b, starts, pieces)?;
        let sum = base.poly().zip_with(&wave, |p, q| {
            let n = p.len().max(q.len());
            (0..n)
                .map(|k| p.get(k).copied().unwrap_or_default() + q.get(k).copied().unwrap_or_default())
                .collect()
        })?;
        out.push(AntiderivativeSpec::new(sum)?);
    }
    out.push(base.clone());
    Ok(out)
}

/// A complex number in an input file: either a bare real or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexValue> for C64 {
    fn from(v: ComplexValue) -> C64 {
        match v {
            ComplexValue::Real(x) => C64::new(x, 0.0),
            ComplexValue::Pair([re, im]) => C64::new(re, im),
        }
    }
}

/// On-disk form of a potential; see `docs/formats.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    pub interval: [f64; 2],
    pub pieces: Vec<PieceFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceFile {
    /// Left end of the piece; coefficients are in powers of `t - start`.
    pub start: f64,
    pub coeffs: Vec<ComplexValue>,
}

impl TryFrom<PotentialFile> for AntiderivativeSpec {
    type Error = Error;

    fn try_from(f: PotentialFile) -> Result<Self> {
        let [a, b] = f.interval;
        let starts = f.pieces.iter().map(|p| p.start).collect();
        let pieces = f
            .pieces
            .into_iter()
            .map(|p| p.coeffs.into_iter().map(C64::from).collect())
            .collect();
        AntiderivativeSpec::from_pieces(a, b, starts, pieces)
    }
}

impl AntiderivativeSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: PotentialFile =
            toml::from_str(text).map_err(|e| Error::invalid("potential file", e.to_string()))?;
        file.try_into()
    }
}
