//! Eigenvalues as zeros of `det(α + β M(b; λ))`.
//!
//! On the real line the smallest singular value is scanned and minimized;
//! each candidate is confirmed by a winding number on a small circle. In the
//! plane the argument principle on rectangles is combined with recursive
//! subdivision and Newton on the log-scaled determinant.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrate::{fundamental_matrix, IntegratorOptions};
use crate::linalg::{log_det, reciprocal_condition, CMatrix, LogDet, C64};
use crate::spectral::TwoPointBC;
use crate::system::OperatorConfig;

const CONTOUR_RCOND: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub tol_eig: f64,
    pub integrator: IntegratorOptions,
    /// Initial samples per real window or per rectangle edge.
    pub samples: usize,
    /// Density factor of the local resampling near a dip.
    pub refine: usize,
    /// Samples per edge of subdivided rectangles.
    pub sub_samples: usize,
    pub max_depth: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            tol_eig: 1e-8,
            integrator: IntegratorOptions::with_tol(1e-14),
            samples: 400,
            refine: 4,
            sub_samples: 24,
            max_depth: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenRecord {
    pub lambda: C64,
    pub multiplicity: usize,
    /// `σ_min / σ_max` of the characteristic matrix at `lambda`.
    pub residual: f64,
}

/// Axis-aligned rectangle in the λ-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Rect {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Result<Self> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(re) || !ok(im) {
            return Err(Error::invalid("rectangle", format!("degenerate rectangle {re:?} x {im:?}")));
        }
        Ok(Rect { re, im })
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re.0, self.im.0),
            C64::new(self.re.1, self.im.0),
            C64::new(self.re.1, self.im.1),
            C64::new(self.re.0, self.im.1),
        ]
    }

    fn center(&self) -> C64 {
        C64::new(0.5 * (self.re.0 + self.re.1), 0.5 * (self.im.0 + self.im.1))
    }

    fn diameter(&self) -> f64 {
        (self.re.1 - self.re.0).hypot(self.im.1 - self.im.0)
    }

    fn contains(&self, z: C64) -> bool {
        self.re.0 <= z.re && z.re <= self.re.1 && self.im.0 <= z.im && z.im <= self.im.1
    }

    fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let x = self.re.0 + fx * (self.re.1 - self.re.0);
        let y = self.im.0 + fy * (self.im.1 - self.im.0);
        [
            Rect { re: (self.re.0, x), im: (self.im.0, y) },
            Rect { re: (x, self.re.1), im: (self.im.0, y) },
            Rect { re: (x, self.re.1), im: (y, self.im.1) },
            Rect { re: (self.re.0, x), im: (y, self.im.1) },
        ]
    }
}

fn check_dims(cfg: &OperatorConfig, bc: &TwoPointBC) -> Result<()> {
    if bc.order() != cfg.order() {
        return Err(Error::Dimension {
            context: "boundary condition",
            expected: cfg.order(),
            got: bc.order(),
        });
    }
    Ok(())
}

/// `α + β M(b; λ)`.
pub fn characteristic_matrix(
    cfg: &OperatorConfig,
    lambda: C64,
    bc: &TwoPointBC,
    opts: &IntegratorOptions,
) -> Result<CMatrix> {
    check_dims(cfg, bc)?;
    let mb = fundamental_matrix(cfg, lambda, opts)?.end();
    Ok(bc.alpha() + bc.beta() * mb)
}

struct Evaluator<'a> {
    cfg: &'a OperatorConfig,
    bc: &'a TwoPointBC,
    opts: &'a SearchOptions,
}

impl Evaluator<'_> {
    fn matrix(&self, lambda: C64) -> Result<CMatrix> {
        characteristic_matrix(self.cfg, lambda, self.bc, &self.opts.integrator)
    }

    fn residual(&self, lambda: C64) -> Result<f64> {
        Ok(reciprocal_condition(&self.matrix(lambda)?))
    }

    /// Log-determinant at a contour point; refuses points that sit on a zero.
    fn contour_value(&self, lambda: C64) -> Result<LogDet> {
        let c = self.matrix(lambda)?;
        let ld = log_det(&c);
        // Below this the LU phase carries no digits; above it the adaptive
        // argument tracking resolves even a nearby zero.
        if ld.is_zero() || reciprocal_condition(&c) < CONTOUR_RCOND {
            return Err(Error::ZeroOnContour { lambda });
        }
        Ok(ld)
    }

    fn contour_values(&self, pts: &[C64]) -> Result<Vec<LogDet>> {
        pts.par_iter().map(|&z| self.contour_value(z)).collect()
    }

    /// Change of `arg det` along the segment, refining until each increment is
    /// below π/4. A step is only trusted when both of its halves are small too;
    /// otherwise a turn of nearly 2π between samples reads as a small one.
    fn arg_change(&self, z0: C64, d0: LogDet, z1: C64, d1: LogDet, depth: usize) -> Result<f64> {
        let small = |a: &LogDet, b: &LogDet| (b.phase / a.phase).arg().abs() <= std::f64::consts::FRAC_PI_4;
        let zm = 0.5 * (z0 + z1);
        let dm = self.contour_value(zm)?;
        if small(&d0, &d1) && small(&d0, &dm) && small(&dm, &d1) {
            return Ok((d1.phase / d0.phase).arg());
        }
        if depth == 0 {
            return Err(Error::ZeroOnContour { lambda: zm });
        }
        Ok(self.arg_change(z0, d0, zm, dm, depth - 1)? + self.arg_change(zm, dm, z1, d1, depth - 1)?)
    }

    /// Winding number of `det` along the closed polygon through `pts`.
    fn winding(&self, pts: &[C64]) -> Result<i64> {
        let vals = self.contour_values(pts)?;
        let n = pts.len();
        let mut total = 0.0;
        for k in 0..n {
            let j = (k + 1) % n;
            total += self.arg_change(pts[k], vals[k], pts[j], vals[j], 30)?;
        }
        Ok((total / std::f64::consts::TAU).round() as i64)
    }

    /// `per_edge` samples on the shorter sides; the longer sides get the same
    /// spacing, up to 4 times as many points.
    fn rect_winding(&self, rect: &Rect, per_edge: usize) -> Result<i64> {
        let c = rect.corners();
        let (w, h) = (rect.re.1 - rect.re.0, rect.im.1 - rect.im.0);
        let short = w.min(h);
        let mut pts = Vec::new();
        for k in 0..4 {
            let (z0, z1) = (c[k], c[(k + 1) % 4]);
            let len = if k % 2 == 0 { w } else { h };
            let n = ((per_edge as f64 * len / short).ceil() as usize).clamp(per_edge, 4 * per_edge);
            for s in 0..n {
                pts.push(z0 + (z1 - z0) * (s as f64 / n as f64));
            }
        }
        self.winding(&pts)
    }

    fn circle_winding(&self, center: C64, radius: f64, n: usize) -> Result<i64> {
        let pts: Vec<C64> = (0..n)
            .map(|k| center + C64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64))
            .collect();
        self.winding(&pts)
    }

    /// Newton on `det` for a zero of order `multiplicity`; `det'/det` comes from
    /// a central difference of ratios, which stays smooth across the zero.
    fn newton(&self, start: C64, multiplicity: usize) -> Option<C64> {
        let mut z = start;
        let mut prev = f64::INFINITY;
        for _ in 0..60 {
            let h = 1e-6 * z.norm().max(1.0);
            let l0 = log_det(&self.matrix(z).ok()?);
            if l0.is_zero() {
                return Some(z);
            }
            let lp = log_det(&self.matrix(z + h).ok()?);
            let lm = log_det(&self.matrix(z - h).ok()?);
            let dlog = (lp.ln_ratio(&l0).exp() - lm.ln_ratio(&l0).exp()) / (2.0 * h);
            if dlog.norm() == 0.0 || !dlog.re.is_finite() {
                return None;
            }
            let delta = -(multiplicity as f64) / dlog;
            z += delta;
            if !(z.re.is_finite() && z.im.is_finite()) {
                return None;
            }
            let scale = z.norm().max(1.0);
            // stalled steps mean the determinant's rounding floor is reached
            if delta.norm() < 1e-13 * scale || (delta.norm() < 1e-9 * scale && delta.norm() >= 0.5 * prev) {
                return Some(z);
            }
            prev = delta.norm();
        }
        None
    }
}

fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn sample(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn sort_records(v: &mut [EigenRecord]) {
    v.sort_by(|x, y| x.lambda.re.total_cmp(&y.lambda.re).then(x.lambda.im.total_cmp(&y.lambda.im)));
}

/// Real eigenvalues in `[lo, hi]`.
pub fn find_real_eigenvalues(
    cfg: &OperatorConfig,
    bc: &TwoPointBC,
    window: (f64, f64),
    opts: &SearchOptions,
) -> Result<Vec<EigenRecord>> {
    check_dims(cfg, bc)?;
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid("window", format!("degenerate window [{lo}, {hi}]")));
    }
    if opts.samples < 3 {
        return Err(Error::invalid("samples", "need at least 3 samples"));
    }
    let ev = Evaluator { cfg, bc, opts };
    let xs = sample(lo, hi, opts.samples);
    let spacing = xs[1] - xs[0];
    let ss: Vec<f64> = xs
        .par_iter()
        .map(|&x| ev.residual(C64::new(x, 0.0)))
        .collect::<Result<_>>()?;

    let n = xs.len();
    let dips: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || ss[i] < ss[i - 1];
            let right = i == n - 1 || ss[i] <= ss[i + 1];
            left && right
        })
        .collect();

    let refine = |i: usize| -> Result<Option<(f64, f64)>> {
        let (a, b) = (xs[i.saturating_sub(1)], xs[(i + 1).min(n - 1)]);
        let fine = sample(a, b, 2 * opts.refine + 1);
        let fs: Vec<f64> = fine
            .iter()
            .map(|&x| ev.residual(C64::new(x, 0.0)))
            .collect::<Result<_>>()?;
        let j = (0..fs.len()).min_by(|&p, &q| fs[p].total_cmp(&fs[q])).unwrap_or(0);
        let (a, b) = (fine[j.saturating_sub(1)], fine[(j + 1).min(fine.len() - 1)]);
        let f = |x: f64| ev.residual(C64::new(x, 0.0)).unwrap_or(f64::INFINITY);
        let (x, r) = golden_section(&f, a, b);
        Ok((r < opts.tol_eig).then_some((x, r)))
    };
    let candidates: Vec<(f64, f64)> = dips
        .par_iter()
        .map(|&i| refine(i))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let radius = 0.25 * spacing;
    let mut out: Vec<EigenRecord> = Vec::new();
    for (x, r) in candidates {
        if x < lo || x > hi || out.iter().any(|e| (e.lambda.re - x).abs() < radius) {
            continue;
        }
        let w = ev.circle_winding(C64::new(x, 0.0), radius, 32)?;
        if w >= 1 {
            // The minimizer is only as sharp as σ_min/σ_max is steep; Newton
            // on the determinant polishes it when it stays inside the circle.
            let mut best = (x, r);
            if let Some(z) = ev.newton(C64::new(x, 0.0), w as usize) {
                if (z - x).norm() < radius {
                    let rz = ev.residual(C64::new(z.re, 0.0))?;
                    if rz < opts.tol_eig {
                        best = (z.re, rz);
                    }
                }
            }
            out.push(EigenRecord {
                lambda: C64::new(best.0, 0.0),
                multiplicity: w as usize,
                residual: best.1,
            });
        }
    }
    sort_records(&mut out);
    Ok(out)
}

/// Zeros of the characteristic determinant inside `rect`.
pub fn find_complex_eigenvalues(
    cfg: &OperatorConfig,
    bc: &TwoPointBC,
    rect: Rect,
    opts: &SearchOptions,
) -> Result<Vec<EigenRecord>> {
    check_dims(cfg, bc)?;
    let rect = Rect::new(rect.re, rect.im)?;
    let ev = Evaluator { cfg, bc, opts };
    let w = ev.rect_winding(&rect, opts.samples.max(4))?;
    if w < 0 {
        return Err(Error::Construction(format!("negative winding {w} for an entire function")));
    }
    let mut out = Vec::new();
    search_box(&ev, rect, w as usize, 0, &mut out)?;
    sort_records(&mut out);
    Ok(out)
}

fn record(ev: &Evaluator, z: C64, multiplicity: usize) -> Result<EigenRecord> {
    let residual = ev.residual(z)?;
    if residual >= ev.opts.tol_eig {
        return Err(Error::Conditioning {
            context: "eigenvalue refinement",
            rcond: residual,
        });
    }
    Ok(EigenRecord {
        lambda: z,
        multiplicity,
        residual,
    })
}

fn search_box(
    ev: &Evaluator,
    rect: Rect,
    w: usize,
    depth: usize,
    out: &mut Vec<EigenRecord>,
) -> Result<()> {
    if w == 0 {
        return Ok(());
    }
    let c = rect.center();
    let tiny = rect.diameter() < 1e-9 * c.norm().max(1.0);
    if w == 1 || tiny || depth >= ev.opts.max_depth {
        if let Some(z) = ev.newton(c, w) {
            if rect.contains(z) {
                out.push(record(ev, z, w)?);
                return Ok(());
            }
        }
        if tiny || depth >= ev.opts.max_depth {
            out.push(record(ev, c, w)?);
            return Ok(());
        }
    }
    // off-center split points keep symmetric spectra away from the new edges
    let splits = [(0.5, 0.5), (0.4871, 0.5129), (0.5313, 0.4687)];
    let mut last_err = None;
    for (fx, fy) in splits {
        let kids = rect.split(fx, fy);
        let windings: Result<Vec<i64>> =
            kids.iter().map(|k| ev.rect_winding(k, ev.opts.sub_samples)).collect();
        match windings {
            Ok(ws) if ws.iter().all(|&x| x >= 0) && ws.iter().sum::<i64>() == w as i64 => {
                for (k, wk) in kids.iter().zip(ws) {
                    search_box(ev, *k, wk as usize, depth + 1, out)?;
                }
                return Ok(());
            }
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(Error::ZeroOnContour { lambda: c }))
}
