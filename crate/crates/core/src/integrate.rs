//! Cauchy problems for `w' = A(t) w + φ(t)` with piecewise polynomial `A`, `φ`.
//!
//! The integrator is an adaptive Taylor-series method. On every piece the
//! coefficients are polynomials, so the Taylor coefficients of the solution
//! follow from the recurrence `(k+1) c_{k+1} = Σ_j A_j c_{k-j} + φ_k`. Each
//! accepted step keeps its series, which doubles as dense output. Piece
//! boundaries are always mesh nodes, so no step straddles a jump of `Q`.

use crate::error::{Error, Result};
use crate::linalg::{max_abs, max_row_sum, CMatrix, CVector, C64};
use crate::poly::{horner, merge_starts, Coeff, PiecewiseMatrix, PiecewisePoly};
use crate::system::{coefficient_poly, forcing_poly, OperatorConfig, TraceVector};

/// Allowed deviation of `det M(t)` from 1 (the coefficient matrix is trace free).
pub const TOL_DET: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Local error per unit step, relative to `max(1, |w|)`.
    pub tol: f64,
    /// Truncation order of the Taylor series.
    pub order: usize,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            tol: 1e-10,
            order: 24,
            max_steps: 500_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegratorOptions {
            tol,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid("tol", format!("need 0 < tol < 1, got {}", self.tol)));
        }
        if self.order < 4 {
            return Err(Error::invalid("order", "Taylor order must be at least 4"));
        }
        Ok(())
    }
}

/// One accepted step: a truncated series in `t - origin`, valid on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    origin: f64,
    coeffs: Vec<CMatrix>,
}

impl Cell {
    pub fn eval(&self, t: f64) -> CMatrix {
        horner(&self.coeffs, t - self.origin)
    }

    pub fn derivative(&self, t: f64) -> CMatrix {
        horner(&crate::poly::derivative(&self.coeffs), t - self.origin)
    }
}

/// Piecewise series solution covering an interval.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    cells: Vec<Cell>,
}

impl DenseSolution {
    pub fn interval(&self) -> (f64, f64) {
        (self.cells[0].lo, self.cells[self.cells.len() - 1].hi)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Cell boundaries in increasing order.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.cells.iter().map(|c| c.lo).collect();
        out.push(self.cells[self.cells.len() - 1].hi);
        out
    }

    fn cell_for(&self, t: f64) -> &Cell {
        let k = self.cells.partition_point(|c| c.hi < t);
        &self.cells[k.min(self.cells.len() - 1)]
    }

    pub fn eval(&self, t: f64) -> CMatrix {
        self.cell_for(t).eval(t)
    }

    pub fn derivative(&self, t: f64) -> CMatrix {
        self.cell_for(t).derivative(t)
    }
}

fn taylor_coefficients(
    a: &[CMatrix],
    phi: Option<&[CMatrix]>,
    w0: &CMatrix,
    order: usize,
) -> Vec<CMatrix> {
    let mut c = Vec::with_capacity(order + 1);
    c.push(w0.clone());
    for k in 0..order {
        let mut s = CMatrix::zeros(w0.nrows(), w0.ncols());
        for (j, aj) in a.iter().enumerate().take(k + 1) {
            if !aj.is_exact_zero() {
                s += aj * &c[k - j];
            }
        }
        if let Some(p) = phi.and_then(|p| p.get(k)) {
            s += p;
        }
        s /= C64::new(k as f64 + 1.0, 0.0);
        c.push(s);
    }
    c
}

fn step_size(c: &[CMatrix], tol: f64) -> f64 {
    let n = c.len() - 1;
    let scale = max_abs(&c[0]).max(1.0);
    let mut h = f64::INFINITY;
    for k in n - 2..=n {
        let nk = max_abs(&c[k]);
        if nk > 0.0 {
            h = h.min((tol * scale / nk).powf(1.0 / k as f64));
        }
    }
    h
}

fn trim_zero_tail(mut v: Vec<CMatrix>) -> Vec<CMatrix> {
    while v.len() > 1 && v.last().is_some_and(|m| m.is_exact_zero()) {
        v.pop();
    }
    v
}

/// Integrate `w' = A w + φ` from `t_start` (where `w = init`) to `t_end`.
/// `init` may be a column or a full matrix; `φ` requires a column state.
pub fn integrate_linear(
    coef: &PiecewiseMatrix,
    forcing: Option<&PiecewiseMatrix>,
    t_start: f64,
    init: &CMatrix,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<DenseSolution> {
    opts.validate()?;
    let (a, b) = coef.interval();
    let mesh = match forcing {
        Some(f) => {
            if f.interval() != (a, b) {
                return Err(Error::invalid("forcing", "interval differs from coefficients"));
            }
            merge_starts(coef.starts(), f.starts())
        }
        None => coef.starts().to_vec(),
    };
    let coef = coef.refine(&mesh);
    let forcing = forcing.map(|f| f.refine(&mesh));

    if t_start == t_end {
        return Ok(DenseSolution {
            cells: vec![Cell {
                lo: t_start,
                hi: t_end,
                origin: t_start,
                coeffs: vec![init.clone()],
            }],
        });
    }
    let forward = t_end > t_start;
    let h_min = 1e-13 * (b - a);
    let mut t = t_start;
    let mut w = init.clone();
    let mut cells = Vec::new();

    while if forward { t < t_end } else { t > t_end } {
        if cells.len() >= opts.max_steps {
            return Err(Error::Integration {
                t,
                reason: format!("exceeded {} steps", opts.max_steps),
            });
        }
        let piece = if forward {
            coef.piece_index(t)
        } else {
            coef.piece_index_left(t)
        };
        let (ps, pe) = coef.piece_bounds(piece);
        let stop = if forward { pe.min(t_end) } else { ps.max(t_end) };
        let a_j = trim_zero_tail(coef.expand_in_piece(piece, t));
        let phi_j = forcing.as_ref().map(|f| trim_zero_tail(f.expand_in_piece(piece, t)));
        let c = taylor_coefficients(&a_j, phi_j.as_deref(), &w, opts.order);
        let remaining = (stop - t).abs();
        let h = step_size(&c, opts.tol);
        let t_new = if h >= remaining * (1.0 - 1e-12) {
            stop
        } else {
            if h < h_min || !h.is_finite() {
                return Err(Error::Integration {
                    t,
                    reason: format!("step size {h:e} underflows (tol = {:e})", opts.tol),
                });
            }
            if forward {
                t + h
            } else {
                t - h
            }
        };
        let w_new = horner(&c, t_new - t);
        if w_new.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Integration {
                t,
                reason: "solution overflowed".into(),
            });
        }
        cells.push(Cell {
            lo: t.min(t_new),
            hi: t.max(t_new),
            origin: t,
            coeffs: c,
        });
        t = t_new;
        w = w_new;
    }
    if !forward {
        cells.reverse();
    }
    Ok(DenseSolution { cells })
}

/// Fundamental matrix `M(t; λ)` of `w' = A_λ w`, `M(a) = I`.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub lambda: C64,
    dense: DenseSolution,
}

impl Propagator {
    pub fn grid(&self) -> Vec<f64> {
        self.dense.nodes()
    }

    pub fn matrices(&self) -> Vec<CMatrix> {
        self.grid().into_iter().map(|t| self.at(t)).collect()
    }

    pub fn at(&self, t: f64) -> CMatrix {
        self.dense.eval(t)
    }

    /// `M(b; λ)`.
    pub fn end(&self) -> CMatrix {
        self.at(self.dense.interval().1)
    }

    pub fn dense(&self) -> &DenseSolution {
        &self.dense
    }

    /// `max_t |det M(t) - 1|` over the grid.
    pub fn det_defect(&self) -> f64 {
        self.matrices()
            .iter()
            .map(|m| (m.determinant() - C64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }
}

/// Quasi-derivative vector of a solution of `l[y] - λy = f`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub order: usize,
    pub lambda: C64,
    unit: C64,
    forcing: Option<PiecewisePoly>,
    dense: DenseSolution,
}

impl Trajectory {
    pub fn grid(&self) -> Vec<f64> {
        self.dense.nodes()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.dense.interval()
    }

    pub fn dense(&self) -> &DenseSolution {
        &self.dense
    }

    pub fn forcing(&self) -> Option<&PiecewisePoly> {
        self.forcing.as_ref()
    }

    /// `w(t) = (D⁰y(t), …, D^{m-1}y(t))`.
    pub fn state(&self, t: f64) -> CVector {
        self.dense.eval(t).column(0).into_owned()
    }

    pub fn states(&self) -> Vec<CVector> {
        self.grid().into_iter().map(|t| self.state(t)).collect()
    }

    pub fn y(&self, t: f64) -> C64 {
        self.dense.eval(t)[(0, 0)]
    }

    pub fn f(&self, t: f64) -> C64 {
        self.forcing
            .as_ref()
            .map_or(C64::new(0.0, 0.0), |f| f.eval(t))
    }

    /// `D^m y = i^{-m} (λ y + f)`.
    pub fn top_quasi_derivative(&self, t: f64) -> C64 {
        self.unit * (self.lambda * self.y(t) + self.f(t))
    }

    pub fn traces(&self) -> TraceVector {
        let (a, b) = self.interval();
        TraceVector {
            at_a: self.state(a),
            at_b: self.state(b),
        }
    }
}

fn check_point(cfg: &OperatorConfig, c: f64) -> Result<()> {
    let (a, b) = cfg.interval();
    if c.is_finite() && a <= c && c <= b {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "c",
            value: c,
            lo: a,
            hi: b,
        })
    }
}

/// Solve `l[y] - λy = f`, `w(c) = init`, on the whole interval.
pub fn solve_cauchy(
    cfg: &OperatorConfig,
    lambda: C64,
    f: Option<&PiecewisePoly>,
    c: f64,
    init: &CVector,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    check_point(cfg, c)?;
    let m = cfg.order();
    if init.len() != m {
        return Err(Error::Dimension {
            context: "initial trace",
            expected: m,
            got: init.len(),
        });
    }
    let (a, b) = cfg.interval();
    let coef = coefficient_poly(cfg, lambda);
    let phi = f.map(|f| forcing_poly(cfg, f)).transpose()?;
    let w0 = CMatrix::from_column_slice(m, 1, init.as_slice());

    let mut cells = Vec::new();
    if c > a {
        cells.extend(integrate_linear(&coef, phi.as_ref(), c, &w0, a, opts)?.cells);
    }
    if c < b {
        cells.extend(integrate_linear(&coef, phi.as_ref(), c, &w0, b, opts)?.cells);
    }
    Ok(Trajectory {
        order: m,
        lambda,
        unit: cfg.unit(),
        forcing: f.cloned(),
        dense: DenseSolution { cells },
    })
}

pub fn fundamental_matrix(
    cfg: &OperatorConfig,
    lambda: C64,
    opts: &IntegratorOptions,
) -> Result<Propagator> {
    let (a, b) = cfg.interval();
    let m = cfg.order();
    let coef = coefficient_poly(cfg, lambda);
    let dense = integrate_linear(&coef, None, a, &CMatrix::identity(m, m), b, opts)?;
    Ok(Propagator { lambda, dense })
}

/// For each `(ε, R(·; ε))`: `sup_t ‖Z(t; ε) - I‖` (max-row-sum norm) where
/// `Z' = R Z`, `Z(a) = I`.
pub fn class_m_indicator(
    family: &[(f64, PiecewiseMatrix)],
    opts: &IntegratorOptions,
) -> Result<Vec<(f64, f64)>> {
    family
        .iter()
        .map(|(eps, r)| {
            let (rows, cols) = r.dim();
            if rows != cols {
                return Err(Error::Dimension {
                    context: "class_m_indicator",
                    expected: rows,
                    got: cols,
                });
            }
            let (a, b) = r.interval();
            let id = CMatrix::identity(rows, rows);
            let z = integrate_linear(r, None, a, &id, b, opts)?;
            let mut sup: f64 = 0.0;
            for cell in z.cells() {
                for k in 0..=4 {
                    let t = cell.lo + (cell.hi - cell.lo) * k as f64 / 4.0;
                    sup = sup.max(max_row_sum(&(cell.eval(t) - &id)));
                }
            }
            Ok((*eps, sup))
        })
        .collect()
}
