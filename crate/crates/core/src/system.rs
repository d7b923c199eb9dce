//! First-order system for the quasi-derivative vector
//! `w = (D⁰y, …, D^{m-1}y)`.
//!
//! The quasi-derivatives are `D^k y = y^(k)` for `k ≤ m-2`,
//! `D^{m-1} y = y^(m-1) + i^{-m} Q y` and
//! `D^m y = (D^{m-1} y)' - i^{-m} Q D¹y`, so that `i^m D^m y = i^m y^(m) + Q' y`.
//! Order `m = 2` is accepted as a reference case: there the construction
//! collapses to the classical regularization `D¹y = y' - Qy`,
//! `D²y = (D¹y)' + Q D¹y + Q² y`, which needs an extra `Q²` term in the matrix.

use crate::error::{Error, Result};
use crate::linalg::{i_pow, CMatrix, CVector, C64};
use crate::poly::{convolve, PiecewiseMatrix, PiecewisePoly};
use crate::potential::AntiderivativeSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorConfig {
    order: usize,
    potential: AntiderivativeSpec,
}

impl OperatorConfig {
    pub fn new(order: usize, potential: AntiderivativeSpec) -> Result<Self> {
        if order < 2 {
            return Err(Error::invalid("order", format!("need m >= 2, got {order}")));
        }
        Ok(OperatorConfig { order, potential })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn potential(&self) -> &AntiderivativeSpec {
        &self.potential
    }

    pub fn interval(&self) -> (f64, f64) {
        self.potential.interval()
    }

    /// `m = 2` is outside the main construction and handled as a reference model.
    pub fn is_reference_order(&self) -> bool {
        self.order == 2
    }

    /// `i^{-m}`.
    pub fn unit(&self) -> C64 {
        i_pow(-(self.order as i64))
    }

    pub fn with_potential(&self, potential: AntiderivativeSpec) -> Self {
        OperatorConfig {
            order: self.order,
            potential,
        }
    }

    fn check_t(&self, t: f64) -> Result<()> {
        let (a, b) = self.interval();
        if t.is_finite() && a <= t && t <= b {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "t",
                value: t,
                lo: a,
                hi: b,
            })
        }
    }
}

/// Fill the λ- and Q-dependent entries of `A_λ` given `Q(t)` and `Q(t)^2`.
fn matrix_from_q(m: usize, unit: C64, lambda: C64, q: C64, q2: C64, with_shift: bool) -> CMatrix {
    let mut a = CMatrix::zeros(m, m);
    if with_shift {
        for r in 0..m - 2 {
            a[(r, r + 1)] = C64::new(1.0, 0.0);
        }
        a[(m - 2, m - 1)] = C64::new(1.0, 0.0);
    }
    a[(m - 2, 0)] += -unit * q;
    a[(m - 1, 0)] += unit * lambda;
    a[(m - 1, 1)] += unit * q;
    if m == 2 {
        a[(1, 0)] -= q2;
    }
    a
}

/// `A_λ(t)`.
pub fn assemble_a(cfg: &OperatorConfig, lambda: C64, t: f64) -> Result<CMatrix> {
    cfg.check_t(t)?;
    let q = cfg.potential.eval_q(t)?;
    Ok(matrix_from_q(cfg.order, cfg.unit(), lambda, q, q * q, true))
}

/// `φ(t) = (0, …, 0, i^{-m} f(t))`.
pub fn assemble_rhs(cfg: &OperatorConfig, f: impl Fn(f64) -> C64, t: f64) -> CVector {
    let mut v = CVector::zeros(cfg.order);
    v[cfg.order - 1] = cfg.unit() * f(t);
    v
}

/// `A_λ` as a piecewise matrix polynomial on the potential's mesh.
pub fn coefficient_poly(cfg: &OperatorConfig, lambda: C64) -> PiecewiseMatrix {
    let m = cfg.order;
    let unit = cfg.unit();
    let q = cfg.potential.poly();
    let zero = C64::new(0.0, 0.0);
    // coefficientwise: constant term carries the shift chain and λ
    q.zip_with(q, |p, _| {
        let p2 = if m == 2 {
            convolve(p, p, |x, y| x * y)
        } else {
            vec![zero]
        };
        let n = p.len().max(p2.len());
        (0..n)
            .map(|k| {
                let qk = p.get(k).copied().unwrap_or(zero);
                let q2k = p2.get(k).copied().unwrap_or(zero);
                let lam = if k == 0 { lambda } else { zero };
                matrix_from_q(m, unit, lam, qk, q2k, k == 0)
            })
            .collect()
    })
    .expect("same interval")
}

/// `φ = (0, …, 0, i^{-m} f)` as a piecewise column polynomial.
pub fn forcing_poly(cfg: &OperatorConfig, f: &PiecewisePoly) -> Result<PiecewiseMatrix> {
    if f.interval() != cfg.interval() {
        return Err(Error::invalid(
            "forcing",
            "forcing must live on the operator's interval",
        ));
    }
    let m = cfg.order;
    let unit = cfg.unit();
    Ok(f.map(|c| {
        let mut v = CMatrix::zeros(m, 1);
        v[(m - 1, 0)] = unit * c;
        v
    }))
}

/// Quasi-derivative values `(D⁰y, …, D^{m-1}y)` at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceVector {
    pub at_a: CVector,
    pub at_b: CVector,
}

impl TraceVector {
    pub fn new(at_a: CVector, at_b: CVector) -> Result<Self> {
        if at_a.len() != at_b.len() {
            return Err(Error::Dimension {
                context: "trace vector",
                expected: at_a.len(),
                got: at_b.len(),
            });
        }
        Ok(TraceVector { at_a, at_b })
    }

    pub fn zeros(m: usize) -> Self {
        TraceVector {
            at_a: CVector::zeros(m),
            at_b: CVector::zeros(m),
        }
    }

    pub fn order(&self) -> usize {
        self.at_a.len()
    }

    /// `(𝒴(a) ‖ 𝒴(b))`.
    pub fn stacked(&self) -> CVector {
        let m = self.order();
        CVector::from_fn(2 * m, |k, _| {
            if k < m {
                self.at_a[k]
            } else {
                self.at_b[k - m]
            }
        })
    }

    pub fn from_stacked(v: &CVector) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(Error::Dimension {
                context: "stacked trace",
                expected: v.len() + 1,
                got: v.len(),
            });
        }
        let m = v.len() / 2;
        Ok(TraceVector {
            at_a: v.rows(0, m).into_owned(),
            at_b: v.rows(m, m).into_owned(),
        })
    }
}

/// Traces of the same function computed with `Q + c` instead of `Q`.
pub fn traces_under_shift(tr: &TraceVector, c: C64, cfg: &OperatorConfig) -> Result<TraceVector> {
    let m = cfg.order;
    if tr.order() != m {
        return Err(Error::Dimension {
            context: "traces_under_shift",
            expected: m,
            got: tr.order(),
        });
    }
    let unit = cfg.unit();
    let shift = |v: &CVector| {
        let mut out = v.clone();
        out[m - 1] += unit * c * v[0];
        out
    };
    Ok(TraceVector {
        at_a: shift(&tr.at_a),
        at_b: shift(&tr.at_b),
    })
}
