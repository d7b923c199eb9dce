use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quasidiff::boundary::{lagrange_terms, triplet_form};
use quasidiff::convergence::{convergence_report, levin_row, DEFAULT_EPS};
use quasidiff::linalg::i_pow;
use quasidiff::spectral::{uniform_grid, write_spectrum_csv, DEFAULT_KERNEL_NODES};
use quasidiff::{
    apply_resolvent, canonical_bc, construct_with_traces, find_complex_eigenvalues,
    find_real_eigenvalues, greens_matrix, pgz_verify, AntiderivativeSpec, BoundaryTriplet,
    CMatrix, CVector, CouplingCoefficients, ExtensionParameter, FamilySpec, IntegratorOptions,
    OperatorConfig, ParameterClass, Rect, SearchOptions, TraceVector, TwoPointBC, C64,
};

use crate::config::{
    resolve, BcKind, ConvergeSection, ExtensionSection, FamilyFile, FamilyKind, GreenSection,
    OperatorSection, ResolventSection, RunConfig, SpectrumSection, VerifySection,
};
use crate::error::CliError;

/// What a command produced: files written and lines for stdout.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub passed: bool,
}

pub struct Context<'a> {
    pub base: &'a Path,
    pub out: &'a Path,
}

impl Context<'_> {
    fn create(&self, name: &str, field: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        std::fs::create_dir_all(self.out).map_err(|e| {
            CliError::validation("out", format!("cannot create {}: {e}", self.out.display()))
        })?;
        let path = self.out.join(name);
        let f = File::create(&path).map_err(|e| {
            CliError::validation(field, format!("cannot write {}: {e}", path.display()))
        })?;
        Ok((path, BufWriter::new(f)))
    }
}

fn io_err(field: &str) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::validation(field, format!("write failed: {e}"))
}

fn core(section: &'static str) -> impl Fn(quasidiff::Error) -> CliError {
    move |e| CliError::from_core(section, e)
}

fn section<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    v.as_ref()
        .ok_or_else(|| CliError::validation(name, format!("missing [{name}] section")))
}

fn integrator(tol: Option<f64>, field: &str) -> Result<IntegratorOptions, CliError> {
    match tol {
        None => Ok(IntegratorOptions::with_tol(1e-13)),
        Some(t) if t > 0.0 && t < 1.0 => Ok(IntegratorOptions::with_tol(t)),
        Some(t) => Err(CliError::validation(field, format!("tolerance must lie in (0, 1), got {t}"))),
    }
}

fn potential(op: &OperatorSection, base: &Path) -> Result<AntiderivativeSpec, CliError> {
    match (&op.potential, op.interval) {
        (Some(_), Some(_)) => Err(CliError::validation(
            "operator.interval",
            "give either a potential or an interval, not both",
        )),
        (Some(src), None) => {
            let (file, _) = resolve(src, base, "operator.potential")?;
            AntiderivativeSpec::try_from(file).map_err(core("operator.potential"))
        }
        (None, Some([a, b])) => AntiderivativeSpec::zero(a, b).map_err(core("operator.interval")),
        (None, None) => Err(CliError::validation(
            "operator.potential",
            "operator needs a potential or an interval",
        )),
    }
}

fn operator(cfg: &RunConfig, base: &Path, out: &mut Outcome) -> Result<OperatorConfig, CliError> {
    let op = section(&cfg.operator, "operator")?;
    let q = potential(op, base)?;
    let oc = OperatorConfig::new(op.order, q).map_err(core("operator"))?;
    if oc.order() == 2 {
        out.lines.push(
            "note: order 2 is the second-order reference operator, outside the m >= 3 theory".into(),
        );
    }
    Ok(oc)
}

fn complex_matrix(rows: &[Vec<quasidiff::potential::ComplexValue>], m: usize, field: &str) -> Result<CMatrix, CliError> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::validation(field, format!("expected a {m}x{m} matrix")));
    }
    Ok(CMatrix::from_fn(m, m, |i, j| C64::from(rows[i][j])))
}

fn triplet(ext: &ExtensionSection, m: usize) -> Result<BoundaryTriplet, CliError> {
    match &ext.coefficients {
        None => BoundaryTriplet::new(m).map_err(core("extension")),
        Some(c) => {
            let coeffs = CouplingCoefficients {
                n: m / 2,
                alpha: c.alpha.into(),
                beta: c.beta.into(),
                gamma: c.gamma.into(),
                delta: c.delta.into(),
            };
            BoundaryTriplet::with_coefficients(m, coeffs).map_err(core("extension.coefficients"))
        }
    }
}

fn boundary_condition(cfg: &RunConfig, base: &Path, m: usize) -> Result<TwoPointBC, CliError> {
    let ext = section(&cfg.extension, "extension")?;
    if ext.self_adjoint && ext.kind != BcKind::Parameter {
        return Err(CliError::validation(
            "extension.self_adjoint",
            "self_adjoint can only be checked for kind = \"parameter\"",
        ));
    }
    match ext.kind {
        BcKind::Periodic => Ok(TwoPointBC::periodic(m)),
        BcKind::Antiperiodic => Ok(TwoPointBC::antiperiodic(m)),
        BcKind::Dirichlet if m == 2 => Ok(TwoPointBC::dirichlet()),
        BcKind::Dirichlet => Err(CliError::validation(
            "extension.kind",
            format!("dirichlet needs order 2, got {m}"),
        )),
        BcKind::Matrices => {
            let alpha = ext.alpha.as_ref().ok_or_else(|| CliError::validation("extension.alpha", "missing"))?;
            let beta = ext.beta.as_ref().ok_or_else(|| CliError::validation("extension.beta", "missing"))?;
            TwoPointBC::new(
                complex_matrix(alpha, m, "extension.alpha")?,
                complex_matrix(beta, m, "extension.beta")?,
            )
            .map_err(core("extension"))
        }
        BcKind::Parameter => {
            let src = ext
                .parameter
                .as_ref()
                .ok_or_else(|| CliError::validation("extension.parameter", "missing"))?;
            let (file, _) = resolve(src, base, "extension.parameter")?;
            let k = ExtensionParameter::try_from(file).map_err(core("extension.parameter"))?;
            if ext.self_adjoint && k.class() != ParameterClass::Unitary {
                return Err(CliError::validation(
                    "extension.parameter",
                    format!(
                        "self_adjoint requested but K is {:?}, not unitary; self-adjoint extensions need unitary K",
                        k.class()
                    ),
                ));
            }
            let sign = ext
                .sign
                .ok_or_else(|| CliError::validation("extension.sign", "missing; use \"plus\" or \"minus\""))?;
            canonical_bc(&triplet(ext, m)?, k.matrix(), sign).map_err(core("extension"))
        }
    }
}

pub fn spectrum(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let mut out = Outcome { passed: true, ..Default::default() };
    let oc = operator(cfg, ctx.base, &mut out)?;
    let bc = boundary_condition(cfg, ctx.base, oc.order())?;
    let sec: &SpectrumSection = section(&cfg.spectrum, "spectrum")?;
    let mut opts = SearchOptions {
        integrator: integrator(sec.tol, "spectrum.tol")?,
        ..Default::default()
    };
    if let Some(t) = sec.tol_eig {
        opts.tol_eig = t;
    }
    if let Some(n) = sec.samples {
        opts.samples = n;
    }
    let records = match (sec.window, &sec.rectangle) {
        (Some([lo, hi]), None) => find_real_eigenvalues(&oc, &bc, (lo, hi), &opts),
        (None, Some(r)) => {
            let rect = Rect::new((r.re[0], r.re[1]), (r.im[0], r.im[1])).map_err(core("spectrum.rectangle"))?;
            find_complex_eigenvalues(&oc, &bc, rect, &opts)
        }
        _ => {
            return Err(CliError::validation(
                "spectrum.window",
                "give exactly one of window or rectangle",
            ))
        }
    }
    .map_err(core("spectrum"))?;
    let (path, mut w) = ctx.create(sec.file.as_deref().unwrap_or("spectrum.csv"), "spectrum.file")?;
    write_spectrum_csv(&records, &mut w).map_err(io_err("spectrum.file"))?;
    w.flush().map_err(io_err("spectrum.file"))?;
    out.lines.push(format!("spectrum: {} eigenvalue(s)", records.len()));
    for r in &records {
        out.lines.push(format!(
            "  lambda = {:.10} {:+.10}i  (multiplicity {}, residual {:.2e})",
            r.lambda.re, r.lambda.im, r.multiplicity, r.residual
        ));
    }
    out.files.push(path);
    Ok(out)
}

pub fn resolvent(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let mut out = Outcome { passed: true, ..Default::default() };
    let oc = operator(cfg, ctx.base, &mut out)?;
    let bc = boundary_condition(cfg, ctx.base, oc.order())?;
    let sec: &ResolventSection = section(&cfg.resolvent, "resolvent")?;
    let opts = integrator(sec.tol, "resolvent.tol")?;
    let (file, _) = resolve(&sec.load, ctx.base, "resolvent.load")?;
    let f = AntiderivativeSpec::try_from(file).map_err(core("resolvent.load"))?;
    let y = apply_resolvent(&oc, sec.lambda.into(), &bc, f.poly(), &opts).map_err(core("resolvent"))?;
    let (a, b) = oc.interval();
    let nodes = uniform_grid(a, b, sec.nodes.unwrap_or(101).max(2));
    let (path, mut w) = ctx.create(sec.file.as_deref().unwrap_or("resolvent.csv"), "resolvent.file")?;
    let err = io_err("resolvent.file");
    writeln!(w, "t,re_y,im_y").map_err(&err)?;
    for t in nodes {
        let v = y.y(t);
        writeln!(w, "{t:.16e},{:.16e},{:.16e}", v.re, v.im).map_err(&err)?;
    }
    w.flush().map_err(&err)?;
    out.lines.push(format!(
        "resolvent: boundary residual {:.2e}",
        quasidiff::spectral::bc_residual(&bc, &y)
    ));
    out.files.push(path);
    Ok(out)
}

pub fn green(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let mut out = Outcome { passed: true, ..Default::default() };
    let oc = operator(cfg, ctx.base, &mut out)?;
    let bc = boundary_condition(cfg, ctx.base, oc.order())?;
    let sec: &GreenSection = section(&cfg.green, "green")?;
    let opts = integrator(sec.tol, "green.tol")?;
    let (a, b) = oc.interval();
    let grid = uniform_grid(a, b, sec.nodes.unwrap_or(DEFAULT_KERNEL_NODES).max(2));
    let k = greens_matrix(&oc, sec.lambda.into(), &bc, &grid, &grid, &opts).map_err(core("green"))?;
    let (path, mut w) = ctx.create(sec.file.as_deref().unwrap_or("green.csv"), "green.file")?;
    k.write_csv(&mut w).map_err(io_err("green.file"))?;
    w.flush().map_err(io_err("green.file"))?;
    out.lines.push(format!("green: {}x{} kernel samples", grid.len(), grid.len()));
    out.files.push(path);
    Ok(out)
}

fn family(file: &FamilyFile, dir: &Path, m: usize, bc: TwoPointBC) -> Result<FamilySpec, CliError> {
    match file.kind {
        FamilyKind::Delta => {
            let [a, b] = file
                .interval
                .ok_or_else(|| CliError::validation("family.interval", "delta family needs an interval"))?;
            let center = file
                .center
                .ok_or_else(|| CliError::validation("family.center", "delta family needs a center"))?;
            let strength = file
                .strength
                .ok_or_else(|| CliError::validation("family.strength", "delta family needs a strength"))?;
            FamilySpec::delta(m, (a, b), center, strength.into(), &file.eps, bc).map_err(core("family"))
        }
        FamilyKind::Oscillating => {
            let src = file
                .base
                .as_ref()
                .ok_or_else(|| CliError::validation("family.base", "oscillating family needs a base potential"))?;
            let (pf, _) = resolve(src, dir, "family.base")?;
            let q = AntiderivativeSpec::try_from(pf).map_err(core("family.base"))?;
            let amp = file
                .amplitude
                .ok_or_else(|| CliError::validation("family.amplitude", "oscillating family needs an amplitude"))?;
            FamilySpec::oscillating(m, &q, amp, &file.eps, bc).map_err(core("family"))
        }
    }
}

pub fn converge(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let mut out = Outcome { passed: true, ..Default::default() };
    let op = section(&cfg.operator, "operator")?;
    if op.potential.is_some() || op.interval.is_some() {
        return Err(CliError::validation(
            "operator.potential",
            "converge takes its potentials from the family file",
        ));
    }
    let m = op.order;
    let bc = boundary_condition(cfg, ctx.base, m)?;
    let sec: &ConvergeSection = section(&cfg.converge, "converge")?;
    let (file, dir) = resolve(&sec.family, ctx.base, "converge.family")?;
    let fam = family(&file, &dir, m, bc)?;
    let (a, b) = fam.interval();
    let grid = uniform_grid(a, b, sec.nodes.unwrap_or(129).max(2));
    let opts = SearchOptions {
        integrator: integrator(sec.tol, "converge.tol")?,
        ..Default::default()
    };
    let window = sec.window.map(|[lo, hi]| (lo, hi));
    let report = convergence_report(&fam, sec.lambda.into(), &grid, window, &opts).map_err(core("converge"))?;
    let (path, mut w) = ctx.create(sec.file.as_deref().unwrap_or("converge.csv"), "converge.file")?;
    report.write_csv(&mut w).map_err(io_err("converge.file"))?;
    w.flush().map_err(io_err("converge.file"))?;
    out.files.push(path);

    let lev = quasidiff::levin_conditions(&fam);
    let (lpath, mut lw) = ctx.create(sec.levin_file.as_deref().unwrap_or("levin.csv"), "converge.levin_file")?;
    let err = io_err("converge.levin_file");
    writeln!(lw, "eps,r_l1,r_vee_sup,r_vee_r_l1,r_r_vee_l1,commutator_l1").map_err(&err)?;
    for r in &lev.rows {
        writeln!(
            lw,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.eps, r.r_l1, r.r_vee_sup, r.r_vee_r_l1, r.r_r_vee_l1, r.commutator_l1
        )
        .map_err(&err)?;
    }
    lw.flush().map_err(&err)?;
    out.files.push(lpath);

    out.lines.push(format!("converge: {} members at lambda = {}", report.rows.len(), report.lambda));
    out.lines.push(format!(
        "levin: alpha {} beta {} gamma {} delta {}",
        lev.alpha, lev.beta, lev.gamma, lev.delta
    ));
    Ok(out)
}

fn random_potential(rng: &mut ChaCha8Rng) -> AntiderivativeSpec {
    let cut = rng.random_range(0.3..0.7);
    let mut piece = || -> Vec<C64> { (0..3).map(|_| C64::new(rng.random_range(-2.0..2.0), 0.0)).collect() };
    let pieces = vec![piece(), piece()];
    AntiderivativeSpec::from_pieces(0.0, 1.0, vec![0.0, cut], pieces).expect("valid mesh")
}

fn random_traces(rng: &mut ChaCha8Rng, m: usize) -> TraceVector {
    let mut v = || CVector::from_fn(m, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let (at_a, at_b) = (v(), v());
    TraceVector::new(at_a, at_b).expect("equal lengths")
}

struct Check {
    name: String,
    passed: bool,
    value: f64,
}

pub fn verify(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let default = VerifySection { seed: None, pairs: None, orders: None, file: None };
    let sec = cfg.verify.as_ref().unwrap_or(&default);
    let orders = sec.orders.clone().unwrap_or_else(|| vec![3, 4, 5]);
    if let Some(&m) = orders.iter().find(|&&m| m < 2) {
        return Err(CliError::validation("verify.orders", format!("orders must be >= 2, got {m}")));
    }
    let pairs = sec.pairs.unwrap_or(20);
    let mut rng = ChaCha8Rng::seed_from_u64(sec.seed.unwrap_or(7));
    let opts = IntegratorOptions::with_tol(1e-13);
    let mut checks = Vec::new();

    for n in 1..=5 {
        checks.push(Check {
            name: format!("coupling relations n={n}"),
            passed: pgz_verify(&CouplingCoefficients::default_for(n)),
            value: 0.0,
        });
    }

    for &m in &orders {
        let tri = BoundaryTriplet::new(m).map_err(core("verify"))?;
        let (mut worst_l, mut worst_t) = (0.0f64, 0.0f64);
        for _ in 0..pairs {
            let oc = OperatorConfig::new(m, random_potential(&mut rng)).map_err(core("verify"))?;
            let (u, v) = (random_traces(&mut rng, m), random_traces(&mut rng, m));
            let y = construct_with_traces(&oc, &u, &opts).map_err(core("verify"))?;
            let z = construct_with_traces(&oc, &v, &opts).map_err(core("verify"))?;
            let terms = lagrange_terms(&oc, &y, &z).map_err(core("verify"))?;
            let scale = terms.boundary.norm().max(1.0);
            worst_l = worst_l.max(terms.defect() / scale);
            let form = triplet_form(&tri, &y.traces(), &z.traces());
            worst_t = worst_t.max((form - i_pow(m as i64) * terms.boundary).norm() / scale);
        }
        checks.push(Check { name: format!("lagrange identity m={m}"), passed: worst_l < 1e-8, value: worst_l });
        checks.push(Check { name: format!("triplet form m={m}"), passed: worst_t < 1e-8, value: worst_t });
    }

    for &m in &orders {
        let fam = FamilySpec::delta(m, (0.0, 1.0), 0.5, C64::new(1.0, 0.0), &DEFAULT_EPS, TwoPointBC::periodic(m))
            .map_err(core("verify"))?;
        let rows: Vec<_> = fam.difference_family().iter().map(|(e, r)| levin_row(*e, r)).collect();
        let comm = rows.iter().all(|r| r.commutator_vanishes);
        let prods = rows.iter().all(|r| r.products_vanish);
        let worst = rows.iter().map(|r| r.r_vee_r_l1.max(r.r_r_vee_l1)).fold(0.0, f64::max);
        checks.push(Check { name: format!("levin commutator zero m={m}"), passed: comm, value: 0.0 });
        // Informational: the products are nonzero at m = 3 even though the
        // commutator vanishes.
        checks.push(Check { name: format!("levin products zero m={m}"), passed: prods, value: worst });
    }

    let (path, mut w) = ctx.create(sec.file.as_deref().unwrap_or("verify.csv"), "verify.file")?;
    let err = io_err("verify.file");
    writeln!(w, "check,status,value").map_err(&err)?;
    let mut out = Outcome { passed: true, ..Default::default() };
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        writeln!(w, "{},{status},{:.16e}", c.name, c.value).map_err(&err)?;
        let informational = c.name.starts_with("levin products");
        let tag = if informational && !c.passed { "INFO" } else { status };
        out.lines.push(format!("{tag} {} ({:.2e})", c.name, c.value));
        if !informational {
            out.passed &= c.passed;
        }
    }
    w.flush().map_err(&err)?;
    out.lines.push(if out.passed { "PASS".into() } else { "FAIL".into() });
    out.files.push(path);
    Ok(out)
}

pub fn dispatch(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, CliError> {
    use crate::config::Command::*;
    match cfg.command {
        Spectrum => spectrum(cfg, ctx),
        Resolvent => resolvent(cfg, ctx),
        Green => green(cfg, ctx),
        Converge => converge(cfg, ctx),
        Verify => verify(cfg, ctx),
    }
}
