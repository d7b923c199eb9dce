//! Families `L_ε → L_0` of two-point operators: the smallness conditions on
//! `Q_ε − Q_0` and on the boundary matrices, Levin's sufficient conditions for
//! the class of coefficient perturbations that preserve Green matrices, and
//! the observable consequences (kernel distances, resolvent bounds, eigenvalue
//! drift).

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrate::{IntegratorOptions, Trajectory};
use crate::linalg::{composite_rule, max_row_sum, C64};
use crate::poly::{PiecewiseMatrix, PiecewisePoly};
use crate::potential::{make_delta_family, make_oscillating_family, AntiderivativeSpec};
use crate::spectral::{
    apply_resolvent, find_real_eigenvalues, greens_matrix, GreenKernel, SearchOptions, TwoPointBC,
};
use crate::system::{coefficient_poly, OperatorConfig};

pub const DEFAULT_EPS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub eps: f64,
    pub potential: AntiderivativeSpec,
    pub bc: TwoPointBC,
}

#[derive(Debug, Clone)]
pub struct FamilySpec {
    order: usize,
    members: Vec<FamilyMember>,
    limit: AntiderivativeSpec,
    limit_bc: TwoPointBC,
}

impl FamilySpec {
    pub fn new(
        order: usize,
        members: Vec<FamilyMember>,
        limit: AntiderivativeSpec,
        limit_bc: TwoPointBC,
    ) -> Result<Self> {
        OperatorConfig::new(order, limit.clone())?;
        if members.is_empty() {
            return Err(Error::invalid("eps_list", "family has no members"));
        }
        let mut prev = f64::INFINITY;
        for mem in &members {
            if !(mem.eps > 0.0 && mem.eps < prev) {
                return Err(Error::invalid(
                    "eps_list",
                    "eps values must be positive and strictly decreasing",
                ));
            }
            prev = mem.eps;
            if mem.potential.interval() != limit.interval() {
                return Err(Error::invalid("potential", "family members live on different intervals"));
            }
            if mem.bc.order() != order {
                return Err(Error::Dimension {
                    context: "family boundary condition",
                    expected: order,
                    got: mem.bc.order(),
                });
            }
        }
        if limit_bc.order() != order {
            return Err(Error::Dimension {
                context: "family boundary condition",
                expected: order,
                got: limit_bc.order(),
            });
        }
        Ok(FamilySpec {
            order,
            members,
            limit,
            limit_bc,
        })
    }

    fn from_potentials(order: usize, eps: &[f64], mut qs: Vec<AntiderivativeSpec>, bc: TwoPointBC) -> Result<Self> {
        let limit = qs.pop().expect("family constructors append the limit");
        let members = eps
            .iter()
            .zip(qs)
            .map(|(&eps, potential)| FamilyMember {
                eps,
                potential,
                bc: bc.clone(),
            })
            .collect();
        Self::new(order, members, limit, bc)
    }

    /// Mollified ramps converging to `strength · δ(t − center)`, fixed `bc`.
    pub fn delta(
        order: usize,
        interval: (f64, f64),
        center: f64,
        strength: C64,
        eps: &[f64],
        bc: TwoPointBC,
    ) -> Result<Self> {
        let qs = make_delta_family(interval.0, interval.1, center, strength, eps)?;
        Self::from_potentials(order, eps, qs, bc)
    }

    /// `Q_ε = Q_0 + ` square wave of half-period `ε/2`.
    pub fn oscillating(
        order: usize,
        base: &AntiderivativeSpec,
        amplitude: f64,
        eps: &[f64],
        bc: TwoPointBC,
    ) -> Result<Self> {
        let qs = make_oscillating_family(base, amplitude, eps)?;
        Self::from_potentials(order, eps, qs, bc)
    }

    /// Every member equal to the limit.
    pub fn constant(order: usize, q: AntiderivativeSpec, eps: &[f64], bc: TwoPointBC) -> Result<Self> {
        let qs = vec![q; eps.len() + 1];
        Self::from_potentials(order, eps, qs, bc)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub fn eps(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.eps).collect()
    }

    pub fn limit(&self) -> &AntiderivativeSpec {
        &self.limit
    }

    pub fn limit_bc(&self) -> &TwoPointBC {
        &self.limit_bc
    }

    pub fn interval(&self) -> (f64, f64) {
        self.limit.interval()
    }

    pub fn limit_config(&self) -> OperatorConfig {
        OperatorConfig::new(self.order, self.limit.clone()).expect("validated on construction")
    }

    pub fn config(&self, i: usize) -> OperatorConfig {
        OperatorConfig::new(self.order, self.members[i].potential.clone())
            .expect("validated on construction")
    }

    /// `R(·; ε) = A(·; ε) − A(·; 0)` at `λ = 0`.
    pub fn difference_matrix(&self, i: usize) -> PiecewiseMatrix {
        let c0 = self.limit_config();
        let ce = self.config(i);
        coefficient_poly(&ce, C64::new(0.0, 0.0))
            .sub(&coefficient_poly(&c0, C64::new(0.0, 0.0)))
            .expect("shared interval")
    }

    /// `(ε, R(·; ε))` pairs, ready for the class indicator.
    pub fn difference_family(&self) -> Vec<(f64, PiecewiseMatrix)> {
        (0..self.members.len())
            .map(|i| (self.members[i].eps, self.difference_matrix(i)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionNorms {
    pub eps: f64,
    /// `‖(Q_ε − Q_0)^∨‖_C`.
    pub antiderivative_sup: f64,
    /// `‖Q_ε − Q_0‖₁`.
    pub l1: f64,
    /// `max(‖α(ε) − α(0)‖, ‖β(ε) − β(0)‖)`.
    pub bc_distance: f64,
}

pub fn thm2_condition_norms(fam: &FamilySpec) -> Vec<ConditionNorms> {
    fam.members
        .iter()
        .map(|mem| {
            let d = mem.potential.subtract(&fam.limit).expect("shared interval");
            ConditionNorms {
                eps: mem.eps,
                antiderivative_sup: d.antiderivative_sup_norm(),
                l1: d.l1_norm(),
                bc_distance: mem.bc.distance(&fam.limit_bc),
            }
        })
        .collect()
}

/// `∫_a^b ‖X(t)‖ dt` with the max-row-sum norm; exactly 0 for an exact-zero `X`.
pub fn matrix_l1_norm(x: &PiecewiseMatrix) -> f64 {
    if x.is_exact_zero() {
        return 0.0;
    }
    (0..x.num_pieces())
        .map(|i| {
            let (lo, hi) = x.piece_bounds(i);
            composite_rule(lo, hi, 8, 16)
                .into_iter()
                .map(|(t, w)| w * max_row_sum(&x.eval_in_piece(i, t)))
                .sum::<f64>()
        })
        .sum()
}

/// `sup_t ‖X(t)‖` sampled on 257 points per piece plus the piece ends.
pub fn matrix_sup_norm(x: &PiecewiseMatrix) -> f64 {
    if x.is_exact_zero() {
        return 0.0;
    }
    let mut sup: f64 = 0.0;
    for i in 0..x.num_pieces() {
        let (lo, hi) = x.piece_bounds(i);
        for k in 0..=256 {
            let t = lo + (hi - lo) * k as f64 / 256.0;
            sup = sup.max(max_row_sum(&x.eval_in_piece(i, t)));
        }
    }
    sup
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevinRow {
    pub eps: f64,
    pub r_l1: f64,
    /// `‖R^∨‖_C`.
    pub r_vee_sup: f64,
    pub r_vee_r_l1: f64,
    pub r_r_vee_l1: f64,
    pub commutator_l1: f64,
    /// Both products vanish identically as matrix polynomials.
    pub products_vanish: bool,
    pub commutator_vanishes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevinReport {
    pub rows: Vec<LevinRow>,
    /// `‖R‖₁` stays bounded.
    pub alpha: bool,
    pub beta: bool,
    pub gamma: bool,
    pub delta: bool,
}

pub fn levin_row(eps: f64, r: &PiecewiseMatrix) -> LevinRow {
    let rv = r.integral();
    let rvr = rv.mul(r).expect("shared mesh");
    let rrv = r.mul(&rv).expect("shared mesh");
    let comm = rvr.sub(&rrv).expect("shared mesh");
    LevinRow {
        eps,
        r_l1: matrix_l1_norm(r),
        r_vee_sup: matrix_sup_norm(&rv),
        r_vee_r_l1: matrix_l1_norm(&rvr),
        r_r_vee_l1: matrix_l1_norm(&rrv),
        commutator_l1: matrix_l1_norm(&comm),
        products_vanish: rvr.is_exact_zero() && rrv.is_exact_zero(),
        commutator_vanishes: comm.is_exact_zero(),
    }
}

/// Exact zeros, or a decreasing sequence that has at least halved.
fn tends_to_zero(v: &[f64]) -> bool {
    if v.iter().all(|&x| x == 0.0) {
        return true;
    }
    let decreasing = v.windows(2).all(|w| w[1] <= w[0]);
    decreasing && v.len() >= 2 && v[v.len() - 1] < 0.5 * v[0]
}

pub fn levin_conditions(fam: &FamilySpec) -> LevinReport {
    let rows: Vec<LevinRow> = fam
        .difference_family()
        .iter()
        .map(|(eps, r)| levin_row(*eps, r))
        .collect();
    let col = |f: fn(&LevinRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let r1 = col(|r| r.r_l1);
    let first = r1.first().copied().unwrap_or(0.0);
    let alpha = r1.iter().all(|&x| x.is_finite() && x <= 10.0 * first.max(f64::MIN_POSITIVE));
    LevinReport {
        alpha: alpha || r1.iter().all(|&x| x == 0.0),
        beta: tends_to_zero(&col(|r| r.r_vee_r_l1)),
        gamma: tends_to_zero(&col(|r| r.r_r_vee_l1)),
        delta: tends_to_zero(&col(|r| r.commutator_l1)),
        rows,
    }
}

fn kernels(
    fam: &FamilySpec,
    lambda: C64,
    grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<(GreenKernel, Vec<Result<GreenKernel>>)> {
    let k0 = greens_matrix(&fam.limit_config(), lambda, &fam.limit_bc, grid, grid, opts)?;
    let ks = (0..fam.members.len())
        .into_par_iter()
        .map(|i| greens_matrix(&fam.config(i), lambda, &fam.members[i].bc, grid, grid, opts))
        .collect();
    Ok((k0, ks))
}

/// `max |Γ_ε − Γ_0|` on the tensor grid, per member; an `Err` marks a member
/// for which `λ` is (numerically) an eigenvalue.
pub fn kernel_distance(
    fam: &FamilySpec,
    lambda: C64,
    grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<Result<f64>>> {
    let (k0, ks) = kernels(fam, lambda, grid, opts)?;
    Ok(ks.into_iter().map(|k| k.and_then(|k| k.distance(&k0))).collect())
}

/// `(b − a) · max |Γ_ε − Γ_0|`, an upper bound for the resolvent distance.
pub fn resolvent_distance_bound(
    fam: &FamilySpec,
    lambda: C64,
    grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<Result<f64>>> {
    let (a, b) = fam.interval();
    Ok(kernel_distance(fam, lambda, grid, opts)?
        .into_iter()
        .map(|d| d.map(|d| (b - a) * d))
        .collect())
}

pub fn l2_norm_poly(f: &PiecewisePoly) -> f64 {
    (0..f.num_pieces())
        .map(|i| {
            let (lo, hi) = f.piece_bounds(i);
            composite_rule(lo, hi, 4, 16)
                .into_iter()
                .map(|(t, w)| w * f.eval_in_piece(i, t).norm_sqr())
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// `‖y − z‖₂` on the merged cell mesh.
pub fn l2_distance(y: &Trajectory, z: &Trajectory) -> f64 {
    let nodes = crate::poly::merge_starts(&y.grid(), &z.grid());
    nodes
        .windows(2)
        .filter(|p| p[1] > p[0])
        .map(|p| {
            composite_rule(p[0], p[1], 1, 20)
                .into_iter()
                .map(|(t, w)| w * (y.y(t) - z.y(t)).norm_sqr())
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// For each member: `max_f ‖(L_ε − λ)⁻¹f − (L_0 − λ)⁻¹f‖₂ / ‖f‖₂` over the loads.
pub fn sampled_resolvent_distance(
    fam: &FamilySpec,
    lambda: C64,
    loads: &[PiecewisePoly],
    opts: &IntegratorOptions,
) -> Result<Vec<f64>> {
    let c0 = fam.limit_config();
    let base: Vec<Trajectory> = loads
        .iter()
        .map(|f| apply_resolvent(&c0, lambda, &fam.limit_bc, f, opts))
        .collect::<Result<_>>()?;
    (0..fam.members.len())
        .into_par_iter()
        .map(|i| {
            let ce = fam.config(i);
            let mut worst: f64 = 0.0;
            for (f, y0) in loads.iter().zip(&base) {
                let norm = l2_norm_poly(f);
                if norm == 0.0 {
                    continue;
                }
                let ye = apply_resolvent(&ce, lambda, &fam.members[i].bc, f, opts)?;
                worst = worst.max(l2_distance(&ye, y0) / norm);
            }
            Ok(worst)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatch {
    pub lambda0: f64,
    pub lambda_eps: Option<f64>,
    pub drift: f64,
    /// Unmatched, or another limit eigenvalue lies within twice the drift.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRow {
    pub eps: f64,
    pub matches: Vec<DriftMatch>,
}

impl DriftRow {
    pub fn max_drift(&self) -> f64 {
        self.matches.iter().map(|m| m.drift).fold(0.0, f64::max)
    }
}

/// Nearest-neighbour matching of real eigenvalues in `window` against the limit.
pub fn eigenvalue_drift(
    fam: &FamilySpec,
    window: (f64, f64),
    opts: &SearchOptions,
) -> Result<(Vec<f64>, Vec<DriftRow>)> {
    let reference: Vec<f64> =
        find_real_eigenvalues(&fam.limit_config(), &fam.limit_bc, window, opts)?
            .iter()
            .map(|e| e.lambda.re)
            .collect();
    let rows = (0..fam.members.len())
        .into_par_iter()
        .map(|i| -> Result<DriftRow> {
            let found: Vec<f64> =
                find_real_eigenvalues(&fam.config(i), &fam.members[i].bc, window, opts)?
                    .iter()
                    .map(|e| e.lambda.re)
                    .collect();
            let matches = reference
                .iter()
                .map(|&l0| {
                    let nearest = found
                        .iter()
                        .copied()
                        .min_by(|x, y| (x - l0).abs().total_cmp(&(y - l0).abs()));
                    match nearest {
                        None => DriftMatch {
                            lambda0: l0,
                            lambda_eps: None,
                            drift: f64::INFINITY,
                            flagged: true,
                        },
                        Some(le) => {
                            let drift = (le - l0).abs();
                            let ambiguous = reference
                                .iter()
                                .any(|&other| other != l0 && (other - le).abs() <= 2.0 * drift);
                            DriftMatch {
                                lambda0: l0,
                                lambda_eps: Some(le),
                                drift,
                                flagged: ambiguous,
                            }
                        }
                    }
                })
                .collect();
            Ok(DriftRow {
                eps: fam.members[i].eps,
                matches,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((reference, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub norms: ConditionNorms,
    pub kernel_distance: Option<f64>,
    pub resolvent_bound: Option<f64>,
    pub max_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub lambda: C64,
    pub rows: Vec<ReportRow>,
}

impl ConvergenceReport {
    /// CSV with header
    /// `eps,antiderivative_sup,l1_norm,bc_distance,kernel_distance,resolvent_bound,max_eigen_drift`;
    /// failed entries are written as `error`, skipped ones as `nan`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "eps,antiderivative_sup,l1_norm,bc_distance,kernel_distance,resolvent_bound,max_eigen_drift"
        )?;
        let cell = |v: Option<f64>| v.map_or_else(|| "error".to_string(), |x| format!("{x:.16e}"));
        for r in &self.rows {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
                r.norms.eps,
                r.norms.antiderivative_sup,
                r.norms.l1,
                r.norms.bc_distance,
                cell(r.kernel_distance),
                cell(r.resolvent_bound),
                r.max_drift.map_or_else(|| "nan".to_string(), |x| format!("{x:.16e}")),
            )?;
        }
        Ok(())
    }
}

/// Rows ordered by decreasing `ε`. Drift is computed only when `window` is given.
pub fn convergence_report(
    fam: &FamilySpec,
    lambda: C64,
    grid: &[f64],
    window: Option<(f64, f64)>,
    opts: &SearchOptions,
) -> Result<ConvergenceReport> {
    let norms = thm2_condition_norms(fam);
    let (a, b) = fam.interval();
    let kd = kernel_distance(fam, lambda, grid, &opts.integrator)?;
    let drift = match window {
        Some(w) => Some(eigenvalue_drift(fam, w, opts)?.1),
        None => None,
    };
    let rows = norms
        .into_iter()
        .zip(kd)
        .enumerate()
        .map(|(i, (n, k))| {
            let k = k.ok();
            ReportRow {
                norms: n,
                kernel_distance: k,
                resolvent_bound: k.map(|d| (b - a) * d),
                max_drift: drift.as_ref().map(|d| d[i].max_drift()),
            }
        })
        .collect();
    Ok(ConvergenceReport { lambda, rows })
}
