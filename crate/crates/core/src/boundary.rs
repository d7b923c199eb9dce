//! Boundary triplet `(ℂᵐ, Γ₁, Γ₂)` for the maximal operator, canonical
//! boundary conditions and the Lagrange identity.
//!
//! `Γ₁`, `Γ₂` are stored as `m × 2m` matrices acting on the stacked trace
//! `(𝒴(a) ‖ 𝒴(b))`. With `(x, y) = Σ x_k ȳ_k` the abstract Green identity is
//!
//! ```text
//! (Ly, z) - (y, Lz) = (Γ₁u, Γ₂v) - (Γ₂u, Γ₁v),   u = 𝒴y, v = 𝒴z.
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate_linear, IntegratorOptions, Trajectory};
use crate::linalg::{
    gauss_legendre, i_pow, least_squares, max_abs_vec, reciprocal_condition, singular_values, solve, CMatrix,
    CVector, C64, I,
};
use crate::poly::{merge_starts, PiecewisePoly};
use crate::potential::ComplexValue;
use crate::spectral::TwoPointBC;
use crate::system::{coefficient_poly, OperatorConfig, TraceVector};

/// Default tolerance for [`classify_parameter`].
pub const TOL_K: f64 = 1e-10;

/// Coefficients of the coupling rows used for odd order `m = 2n + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingCoefficients {
    pub n: usize,
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

impl CouplingCoefficients {
    pub fn default_for(n: usize) -> Self {
        let s = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        CouplingCoefficients {
            n,
            alpha: C64::new(1.0, 0.0),
            beta: C64::new(1.0, 0.0),
            gamma: C64::new(s / 2.0, 1.0),
            delta: C64::new(-s / 2.0, 1.0),
        }
    }
}

/// Checks the five relations that make the coupling rows compatible with the
/// Green identity, at absolute tolerance `1e-12`.
pub fn pgz_verify(c: &CouplingCoefficients) -> bool {
    const TOL: f64 = 1e-12;
    let sign = if c.n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let (a, b, g, d) = (c.alpha, c.beta, c.gamma, c.delta);
    let r1 = a * g.conj() + a.conj() * g - sign;
    let r2 = b * d.conj() + b.conj() * d + sign;
    let r3 = a * d.conj() + b.conj() * g;
    let r4 = b * g.conj() + a.conj() * d;
    let det = a * d - b * g;
    r1.norm() < TOL && r2.norm() < TOL && r3.norm() < TOL && r4.norm() < TOL && det.norm() > TOL
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTriplet {
    m: usize,
    g1: CMatrix,
    g2: CMatrix,
    coeffs: Option<CouplingCoefficients>,
}

impl BoundaryTriplet {
    /// Triplet with the default coupling coefficients when `m` is odd.
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("order", format!("need m >= 2, got {m}")));
        }
        let coeffs = (m % 2 == 1).then(|| CouplingCoefficients::default_for(m / 2));
        Self::build(m, coeffs)
    }

    /// Odd-order triplet with caller-supplied coupling coefficients.
    pub fn with_coefficients(m: usize, coeffs: CouplingCoefficients) -> Result<Self> {
        if m < 3 || m.is_multiple_of(2) || coeffs.n != m / 2 {
            return Err(Error::invalid(
                "coefficients",
                format!("coupling coefficients need odd m = 2n + 1 with n = {}", coeffs.n),
            ));
        }
        if !pgz_verify(&coeffs) {
            return Err(Error::invalid(
                "coefficients",
                "coupling coefficients violate the compatibility relations",
            ));
        }
        Self::build(m, Some(coeffs))
    }

    fn build(m: usize, coeffs: Option<CouplingCoefficients>) -> Result<Self> {
        let n = m / 2;
        let im = i_pow(m as i64);
        let one = C64::new(1.0, 0.0);
        let mut g1 = CMatrix::zeros(m, 2 * m);
        let mut g2 = CMatrix::zeros(m, 2 * m);
        for j in 1..=n {
            let sa = if j % 2 == 0 { 1.0 } else { -1.0 };
            g1[(j - 1, m - j)] = im * sa;
            g1[(n + j - 1, m + m - j)] = -im * sa;
            g2[(j - 1, j - 1)] = one;
            g2[(n + j - 1, m + j - 1)] = one;
        }
        if let Some(c) = coeffs {
            let r = 2 * n;
            g1[(r, m + n)] = im * c.alpha;
            g1[(r, n)] = im * c.beta;
            g2[(r, m + n)] = c.gamma;
            g2[(r, n)] = c.delta;
        }
        Ok(BoundaryTriplet { m, g1, g2, coeffs })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn g1(&self) -> &CMatrix {
        &self.g1
    }

    pub fn g2(&self) -> &CMatrix {
        &self.g2
    }

    pub fn coefficients(&self) -> Option<&CouplingCoefficients> {
        self.coeffs.as_ref()
    }

    /// `(Γ₁ ; Γ₂)` as a `2m × 2m` matrix.
    pub fn stacked(&self) -> CMatrix {
        let m = self.m;
        let mut out = CMatrix::zeros(2 * m, 2 * m);
        out.rows_mut(0, m).copy_from(&self.g1);
        out.rows_mut(m, m).copy_from(&self.g2);
        out
    }

    /// `(Γ₁u, Γ₂v) - (Γ₂u, Γ₁v)` for stacked traces `u`, `v`.
    pub fn form(&self, u: &CVector, v: &CVector) -> C64 {
        let (g1u, g2u) = (&self.g1 * u, &self.g2 * u);
        let (g1v, g2v) = (&self.g1 * v, &self.g2 * v);
        inner(&g1u, &g2v) - inner(&g2u, &g1v)
    }
}

fn inner(x: &CVector, y: &CVector) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Triplet form on trace vectors.
pub fn triplet_form(tri: &BoundaryTriplet, u: &TraceVector, v: &TraceVector) -> C64 {
    tri.form(&u.stacked(), &v.stacked())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// `(K − I)Γ₁y ± i(K + I)Γ₂y = 0` as a two-point condition.
pub fn canonical_bc(tri: &BoundaryTriplet, k: &CMatrix, sign: Sign) -> Result<TwoPointBC> {
    let m = tri.m;
    if k.nrows() != m || k.ncols() != m {
        return Err(Error::Dimension {
            context: "extension parameter",
            expected: m,
            got: k.nrows().max(k.ncols()),
        });
    }
    let id = CMatrix::identity(m, m);
    let s = I * sign.value();
    let stacked = (k - &id) * &tri.g1 + (k + &id) * &tri.g2 * s;
    TwoPointBC::from_stacked(&stacked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterClass {
    Unitary,
    ContractionStrict,
    ContractionBoundary,
    Other,
}

impl ParameterClass {
    pub fn is_contraction(self) -> bool {
        self != ParameterClass::Other
    }
}

pub fn classify_parameter(k: &CMatrix, tol_k: f64) -> ParameterClass {
    if !k.is_square() || k.nrows() == 0 {
        return ParameterClass::Other;
    }
    let s = singular_values(k);
    let (hi, lo) = (s[0], s[s.len() - 1]);
    let n = k.nrows();
    let gram_defect = (k.adjoint() * k - CMatrix::identity(n, n)).norm();
    if hi <= 1.0 + tol_k && lo >= 1.0 - tol_k && gram_defect <= 10.0 * tol_k {
        ParameterClass::Unitary
    } else if hi < 1.0 - tol_k {
        ParameterClass::ContractionStrict
    } else if hi <= 1.0 + tol_k {
        ParameterClass::ContractionBoundary
    } else {
        ParameterClass::Other
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionParameter {
    k: CMatrix,
    class: ParameterClass,
}

impl ExtensionParameter {
    pub fn new(k: CMatrix) -> Result<Self> {
        if !k.is_square() || k.nrows() == 0 {
            return Err(Error::invalid(
                "K",
                format!("must be square, got {}x{}", k.nrows(), k.ncols()),
            ));
        }
        let class = classify_parameter(&k, TOL_K);
        Ok(ExtensionParameter { k, class })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.k
    }

    pub fn class(&self) -> ParameterClass {
        self.class
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ParameterFile =
            toml::from_str(text).map_err(|e| Error::invalid("K file", e.to_string()))?;
        file.try_into()
    }

    pub fn to_file(&self) -> ParameterFile {
        ParameterFile {
            dim: self.k.nrows(),
            entries: self
                .k
                .transpose()
                .iter()
                .map(|z| ComplexValue::Pair([z.re, z.im]))
                .collect(),
        }
    }
}

/// On-disk layout: `dim` and `dim²` row-major entries, each a real or `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterFile {
    pub dim: usize,
    pub entries: Vec<ComplexValue>,
}

impl TryFrom<ParameterFile> for ExtensionParameter {
    type Error = Error;

    fn try_from(f: ParameterFile) -> Result<Self> {
        if f.entries.len() != f.dim * f.dim {
            return Err(Error::invalid(
                "entries",
                format!("expected {} values for dim = {}, got {}", f.dim * f.dim, f.dim, f.entries.len()),
            ));
        }
        let vals: Vec<C64> = f.entries.into_iter().map(C64::from).collect();
        ExtensionParameter::new(CMatrix::from_row_slice(f.dim, f.dim, &vals))
    }
}

/// Both sides of the Lagrange identity for a pair of trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeTerms {
    /// `∫ (D^m y · z̄ − (−1)^m y · conj(D^m z))`.
    pub integral: C64,
    /// `Σ_k (−1)^{k−1} D^{[m−k]}y · conj(D^{[k−1]}z) |_a^b`.
    pub boundary: C64,
}

impl LagrangeTerms {
    pub fn defect(&self) -> f64 {
        (self.integral - self.boundary).norm()
    }
}

fn boundary_sum(m: usize, y: &CVector, z: &CVector) -> C64 {
    (1..=m)
        .map(|k| {
            let s = if k % 2 == 1 { 1.0 } else { -1.0 };
            y[m - k] * z[k - 1].conj() * s
        })
        .sum()
}

/// Lagrange boundary sum at both ends, `b` part minus `a` part.
pub fn lagrange_boundary(u: &TraceVector, v: &TraceVector) -> C64 {
    let m = u.order();
    boundary_sum(m, &u.at_b, &v.at_b) - boundary_sum(m, &u.at_a, &v.at_a)
}

/// The right-hand sides `l[y] = λy + f` are read from the trajectories.
pub fn lagrange_terms(cfg: &OperatorConfig, y: &Trajectory, z: &Trajectory) -> Result<LagrangeTerms> {
    let m = cfg.order();
    for tr in [y, z] {
        if tr.order != m {
            return Err(Error::Dimension {
                context: "lagrange_defect",
                expected: m,
                got: tr.order,
            });
        }
        if tr.interval() != cfg.interval() {
            return Err(Error::invalid("trajectory", "interval differs from the operator"));
        }
    }
    let nodes = merge_starts(&y.grid(), &z.grid());
    let (x, w) = gauss_legendre(20);
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut integral = C64::new(0.0, 0.0);
    for pair in nodes.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (xi, wi) in x.iter().zip(&w) {
            let t = c + h * xi;
            let val = y.top_quasi_derivative(t) * z.y(t).conj()
                - y.y(t) * z.top_quasi_derivative(t).conj() * sign;
            integral += val * (h * wi);
        }
    }
    let boundary = lagrange_boundary(&y.traces(), &z.traces());
    Ok(LagrangeTerms { integral, boundary })
}

pub fn lagrange_defect(cfg: &OperatorConfig, y: &Trajectory, z: &Trajectory) -> Result<f64> {
    Ok(lagrange_terms(cfg, y, z)?.defect())
}

/// A function with prescribed quasi-derivative traces at both ends.
///
/// The function solves `D^m y = g` with `g` a polynomial; its coefficients are
/// fitted so that `𝒴(b)` matches, starting from degree `m − 1`.
pub fn construct_with_traces(
    cfg: &OperatorConfig,
    target: &TraceVector,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let m = cfg.order();
    if target.order() != m {
        return Err(Error::Dimension {
            context: "construct_with_traces",
            expected: m,
            got: target.order(),
        });
    }
    let (a, b) = cfg.interval();
    let zero = C64::new(0.0, 0.0);
    let lambda = zero;
    let coef = coefficient_poly(cfg, lambda);
    let scale = max_abs_vec(&target.stacked()).max(1.0);
    let im = i_pow(m as i64);

    let init = CMatrix::from_column_slice(m, 1, target.at_a.as_slice());
    let free = integrate_linear(&coef, None, a, &init, b, opts)?.eval(b);
    let gap: CMatrix = CMatrix::from_column_slice(m, 1, target.at_b.as_slice()) - free;

    let monomial = |k: usize| -> PiecewisePoly {
        let mut c = vec![zero; k + 1];
        c[k] = im / (b - a).powi(k as i32);
        PiecewisePoly::single(a, b, c).expect("valid interval")
    };
    let mut responses: Vec<CVector> = Vec::new();
    for degree in (m - 1)..=(2 * m + 4) {
        while responses.len() <= degree {
            let k = responses.len();
            let forcing = crate::system::forcing_poly(cfg, &monomial(k))?;
            let w = integrate_linear(&coef, Some(&forcing), a, &CMatrix::zeros(m, 1), b, opts)?;
            responses.push(w.eval(b).column(0).into_owned());
        }
        let v = CMatrix::from_columns(&responses);
        let c = if degree + 1 == m && reciprocal_condition(&v) > 1e-10 {
            solve(&v, &gap, "trace map")?
        } else {
            least_squares(&v, &gap, 1e-13)
        };
        let mut coeffs = vec![zero; degree + 1];
        for (k, ck) in c.column(0).iter().enumerate() {
            coeffs[k] = im * ck / (b - a).powi(k as i32);
        }
        let f = PiecewisePoly::single(a, b, coeffs)?;
        let traj =
            crate::integrate::solve_cauchy(cfg, lambda, Some(&f), a, &target.at_a, opts)?;
        let tr = traj.traces();
        let err = max_abs_vec(&(tr.stacked() - target.stacked()));
        if err <= 1e-9 * scale {
            return Ok(traj);
        }
    }
    Err(Error::Construction(format!(
        "no polynomial of degree <= {} reproduces the traces",
        2 * m + 4
    )))
}
