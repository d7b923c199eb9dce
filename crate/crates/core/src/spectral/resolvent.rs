use crate::boundary::{canonical_bc, BoundaryTriplet, Sign, TOL_K};
use crate::error::{Error, Result};
use crate::integrate::{fundamental_matrix, integrate_linear, solve_cauchy, IntegratorOptions, Trajectory};
use crate::linalg::{reciprocal_condition, solve, spectral_norm, CMatrix, CVector, C64};
use crate::poly::PiecewisePoly;
use crate::spectral::green::MIN_RCOND;
use crate::spectral::TwoPointBC;
use crate::system::{coefficient_poly, forcing_poly, OperatorConfig};

/// Solves `l[y] − λy = f` under `bc` by superposition: the particular solution
/// with `w(a) = 0` is corrected by `M(t)c`, `(α + βM(b))c = −β w_p(b)`.
pub fn apply_resolvent(
    cfg: &OperatorConfig,
    lambda: C64,
    bc: &TwoPointBC,
    f: &PiecewisePoly,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let m = cfg.order();
    if bc.order() != m {
        return Err(Error::Dimension {
            context: "boundary condition",
            expected: m,
            got: bc.order(),
        });
    }
    if f.interval() != cfg.interval() {
        return Err(Error::invalid("f", "interval differs from the operator"));
    }
    let (a, b) = cfg.interval();
    let mb = fundamental_matrix(cfg, lambda, opts)?.end();
    let coef = coefficient_poly(cfg, lambda);
    let phi = forcing_poly(cfg, f)?;
    let wp = integrate_linear(&coef, Some(&phi), a, &CMatrix::zeros(m, 1), b, opts)?.eval(b);
    let c = bc.alpha() + bc.beta() * mb;
    let rcond = reciprocal_condition(&c);
    if rcond < MIN_RCOND {
        return Err(Error::Conditioning {
            context: "characteristic matrix",
            rcond,
        });
    }
    let rhs = -(bc.beta() * wp);
    let init: CVector = solve(&c, &rhs, "characteristic matrix")?.column(0).into_owned();
    solve_cauchy(cfg, lambda, Some(f), a, &init, opts)
}

/// Solution of `l(y) = λy + f` with the λ-dependent condition
/// `(K(λ) − I)Γ₁y ± i(K(λ) + I)Γ₂y = 0`: `+` below the real axis, `−` above it.
pub fn generalized_resolvent(
    cfg: &OperatorConfig,
    tri: &BoundaryTriplet,
    lambda: C64,
    kfun: impl Fn(C64) -> CMatrix,
    f: &PiecewisePoly,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if tri.order() != cfg.order() {
        return Err(Error::Dimension {
            context: "boundary triplet",
            expected: cfg.order(),
            got: tri.order(),
        });
    }
    if lambda.im == 0.0 || !lambda.im.is_finite() {
        return Err(Error::invalid(
            "lambda",
            format!("needs Im lambda != 0, got {lambda}"),
        ));
    }
    let k = kfun(lambda);
    let norm = spectral_norm(&k);
    if norm > 1.0 + TOL_K {
        return Err(Error::invalid(
            "K(lambda)",
            format!("not a contraction: norm {norm} at lambda = {lambda}"),
        ));
    }
    let sign = if lambda.im < 0.0 { Sign::Plus } else { Sign::Minus };
    let bc = canonical_bc(tri, &k, sign)?;
    apply_resolvent(cfg, lambda, &bc, f, opts)
}

/// `‖α 𝒴(a) + β 𝒴(b)‖ / max(1, ‖𝒴‖)` for the traces of `y`.
pub fn bc_residual(bc: &TwoPointBC, y: &Trajectory) -> f64 {
    let tr = y.traces();
    bc.residual(&tr) / tr.stacked().norm().max(1.0)
}
