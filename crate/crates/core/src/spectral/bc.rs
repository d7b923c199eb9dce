use crate::error::{Error, Result};
use crate::linalg::{max_row_sum, singular_values, CMatrix, CVector, C64};
use crate::system::TraceVector;

/// Relative threshold below which `(α ‖ β)` counts as rank deficient.
const RANK_TOL: f64 = 1e-12;

/// Two-point condition `α 𝒴(a) + β 𝒴(b) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointBC {
    alpha: CMatrix,
    beta: CMatrix,
}

impl TwoPointBC {
    pub fn new(alpha: CMatrix, beta: CMatrix) -> Result<Self> {
        let m = alpha.nrows();
        for (name, mat) in [("alpha_bc", &alpha), ("beta_bc", &beta)] {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::invalid(
                    name,
                    format!("expected {m}x{m}, got {}x{}", mat.nrows(), mat.ncols()),
                ));
            }
        }
        if m == 0 {
            return Err(Error::invalid("alpha_bc", "empty matrix"));
        }
        let s = singular_values(&Self::join(&alpha, &beta));
        if s[0] == 0.0 || s[m - 1] < RANK_TOL * s[0] {
            return Err(Error::invalid(
                "bc",
                "rank of (alpha_bc | beta_bc) is below m, every lambda would be an eigenvalue",
            ));
        }
        Ok(TwoPointBC { alpha, beta })
    }

    /// From an `m × 2m` matrix acting on `(𝒴(a) ‖ 𝒴(b))`.
    pub fn from_stacked(mat: &CMatrix) -> Result<Self> {
        let m = mat.nrows();
        if mat.ncols() != 2 * m {
            return Err(Error::Dimension {
                context: "stacked boundary matrix",
                expected: 2 * m,
                got: mat.ncols(),
            });
        }
        Self::new(mat.columns(0, m).into_owned(), mat.columns(m, m).into_owned())
    }

    pub fn periodic(m: usize) -> Self {
        TwoPointBC {
            alpha: CMatrix::identity(m, m),
            beta: -CMatrix::identity(m, m),
        }
    }

    pub fn antiperiodic(m: usize) -> Self {
        TwoPointBC {
            alpha: CMatrix::identity(m, m),
            beta: CMatrix::identity(m, m),
        }
    }

    /// `y(a) = y(b) = 0` for the second-order reference operator.
    pub fn dirichlet() -> Self {
        let one = C64::new(1.0, 0.0);
        let mut alpha = CMatrix::zeros(2, 2);
        let mut beta = CMatrix::zeros(2, 2);
        alpha[(0, 0)] = one;
        beta[(1, 0)] = one;
        TwoPointBC { alpha, beta }
    }

    fn join(alpha: &CMatrix, beta: &CMatrix) -> CMatrix {
        let m = alpha.nrows();
        let mut out = CMatrix::zeros(m, 2 * m);
        out.columns_mut(0, m).copy_from(alpha);
        out.columns_mut(m, m).copy_from(beta);
        out
    }

    pub fn order(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn alpha(&self) -> &CMatrix {
        &self.alpha
    }

    pub fn beta(&self) -> &CMatrix {
        &self.beta
    }

    pub fn stacked(&self) -> CMatrix {
        Self::join(&self.alpha, &self.beta)
    }

    /// `‖α 𝒴(a) + β 𝒴(b)‖₂`.
    pub fn residual(&self, tr: &TraceVector) -> f64 {
        let r: CVector = &self.alpha * &tr.at_a + &self.beta * &tr.at_b;
        r.norm()
    }

    /// `max(‖α − α'‖, ‖β − β'‖)` in the max-row-sum norm.
    pub fn distance(&self, other: &TwoPointBC) -> f64 {
        max_row_sum(&(&self.alpha - &other.alpha)).max(max_row_sum(&(&self.beta - &other.beta)))
    }
}
