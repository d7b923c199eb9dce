use std::io::Write;

use crate::error::{Error, Result};
use crate::integrate::{fundamental_matrix, IntegratorOptions, Propagator};
use crate::linalg::{gauss_legendre, inverse, reciprocal_condition, CMatrix, C64};
use crate::poly::{merge_starts, PiecewisePoly};
use crate::spectral::TwoPointBC;
use crate::system::OperatorConfig;

/// Characteristic matrices with a smaller reciprocal condition number are refused.
pub const MIN_RCOND: f64 = 1e-13;

/// Green matrix of `w' = A_λ w + φ`, `α w(a) + β w(b) = 0`:
///
/// ```text
/// G(t, s) =  M(t) C⁻¹ α M(s)⁻¹             for t ≥ s
/// G(t, s) = −M(t) C⁻¹ β M(b) M(s)⁻¹        for t < s,   C = α + β M(b)
/// ```
///
/// The scalar kernel of `l[y] − λy = f` is `Γ = i⁻ᵐ G_{1m}`.
#[derive(Debug, Clone)]
pub struct GreenFunction {
    m: usize,
    unit: C64,
    lambda: C64,
    prop: Propagator,
    left: CMatrix,
    right: CMatrix,
}

impl GreenFunction {
    pub fn new(
        cfg: &OperatorConfig,
        lambda: C64,
        bc: &TwoPointBC,
        opts: &IntegratorOptions,
    ) -> Result<Self> {
        if bc.order() != cfg.order() {
            return Err(Error::Dimension {
                context: "boundary condition",
                expected: cfg.order(),
                got: bc.order(),
            });
        }
        let prop = fundamental_matrix(cfg, lambda, opts)?;
        let mb = prop.end();
        let c = bc.alpha() + bc.beta() * &mb;
        let rcond = reciprocal_condition(&c);
        if rcond < MIN_RCOND {
            return Err(Error::Conditioning {
                context: "characteristic matrix",
                rcond,
            });
        }
        let cinv = inverse(&c, "characteristic matrix")?;
        Ok(GreenFunction {
            m: cfg.order(),
            unit: cfg.unit(),
            lambda,
            left: &cinv * bc.alpha(),
            right: &cinv * bc.beta() * &mb,
            prop,
        })
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    fn m_inv(&self, s: f64) -> CMatrix {
        self.prop
            .at(s)
            .try_inverse()
            .expect("fundamental matrices are unimodular")
    }

    fn matrix_with(&self, t: f64, mt: &CMatrix, s: f64, ms_inv: &CMatrix) -> CMatrix {
        if t >= s {
            mt * &self.left * ms_inv
        } else {
            -(mt * &self.right * ms_inv)
        }
    }

    pub fn matrix(&self, t: f64, s: f64) -> CMatrix {
        self.matrix_with(t, &self.prop.at(t), s, &self.m_inv(s))
    }

    pub fn scalar(&self, t: f64, s: f64) -> C64 {
        self.unit * self.matrix(t, s)[(0, self.m - 1)]
    }

    /// `∫ Γ(t, s) f(s) ds` at each of `ts`, by Gauss-Legendre quadrature on the
    /// propagator cells split at `t` and at the breakpoints of `f`.
    pub fn apply(&self, f: &PiecewisePoly, ts: &[f64]) -> Vec<C64> {
        self.apply_fn(|s| f.eval(s), f.starts(), ts)
    }

    /// As [`apply`](Self::apply) for a load that is smooth between `nodes`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64, nodes: &[f64], ts: &[f64]) -> Vec<C64> {
        let m = self.m;
        let base = merge_starts(&self.prop.grid(), nodes);
        let (x, w) = gauss_legendre(20);
        ts.iter()
            .map(|&t| {
                let mt = self.prop.at(t);
                let nodes = merge_starts(&base, &[t]);
                let mut acc = C64::new(0.0, 0.0);
                for pair in nodes.windows(2) {
                    let (lo, hi) = (pair[0], pair[1]);
                    if hi <= lo {
                        continue;
                    }
                    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                    // panels never straddle t, so the branch is fixed per panel
                    let branch = if c >= t { -&self.right } else { self.left.clone() };
                    let row = mt.row(0) * branch;
                    for (xi, wi) in x.iter().zip(&w) {
                        let s = c + h * xi;
                        let g = (&row * self.m_inv(s))[(0, m - 1)];
                        acc += self.unit * g * f(s) * (h * wi);
                    }
                }
                acc
            })
            .collect()
    }
}

/// Tabulated Green matrix and scalar kernel on a tensor grid.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    pub lambda: C64,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    gmat: Vec<CMatrix>,
    scalar: Vec<C64>,
}

impl GreenKernel {
    pub fn matrix(&self, i: usize, j: usize) -> &CMatrix {
        &self.gmat[i * self.s.len() + j]
    }

    pub fn scalar(&self, i: usize, j: usize) -> C64 {
        self.scalar[i * self.s.len() + j]
    }

    pub fn scalars(&self) -> &[C64] {
        &self.scalar
    }

    /// Max of `|Γ − Γ'|` over a shared grid.
    pub fn distance(&self, other: &GreenKernel) -> Result<f64> {
        if self.t != other.t || self.s != other.s {
            return Err(Error::invalid("grid", "kernels are tabulated on different grids"));
        }
        Ok(self
            .scalar
            .iter()
            .zip(&other.scalar)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// CSV with header `t,s,re_gamma,im_gamma`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,s,re_gamma,im_gamma")?;
        for (i, t) in self.t.iter().enumerate() {
            for (j, s) in self.s.iter().enumerate() {
                let g = self.scalar(i, j);
                writeln!(out, "{t:.16e},{s:.16e},{:.16e},{:.16e}", g.re, g.im)?;
            }
        }
        Ok(())
    }
}

pub const DEFAULT_KERNEL_NODES: usize = 257;

pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|k| if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

pub fn greens_matrix(
    cfg: &OperatorConfig,
    lambda: C64,
    bc: &TwoPointBC,
    t_nodes: &[f64],
    s_nodes: &[f64],
    opts: &IntegratorOptions,
) -> Result<GreenKernel> {
    let (a, b) = cfg.interval();
    for &x in t_nodes.iter().chain(s_nodes) {
        if !(a <= x && x <= b) {
            return Err(Error::Domain {
                what: "kernel node",
                value: x,
                lo: a,
                hi: b,
            });
        }
    }
    let green = GreenFunction::new(cfg, lambda, bc, opts)?;
    let m = cfg.order();
    let mt: Vec<CMatrix> = t_nodes.iter().map(|&t| green.prop.at(t)).collect();
    let ms: Vec<CMatrix> = s_nodes.iter().map(|&s| green.m_inv(s)).collect();
    let mut gmat = Vec::with_capacity(t_nodes.len() * s_nodes.len());
    let mut scalar = Vec::with_capacity(t_nodes.len() * s_nodes.len());
    for (t, mti) in t_nodes.iter().zip(&mt) {
        for (s, msj) in s_nodes.iter().zip(&ms) {
            let g = green.matrix_with(*t, mti, *s, msj);
            scalar.push(green.unit * g[(0, m - 1)]);
            gmat.push(g);
        }
    }
    Ok(GreenKernel {
        lambda,
        t: t_nodes.to_vec(),
        s: s_nodes.to_vec(),
        gmat,
        scalar,
    })
}
