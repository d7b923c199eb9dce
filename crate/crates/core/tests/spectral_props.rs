mod common;

use common::{rand_c, rand_real_potential, re};
use quasidiff::linalg::i_pow;
use quasidiff::spectral::resolvent::bc_residual;
use quasidiff::{
    apply_resolvent, find_real_eigenvalues, greens_matrix, AntiderivativeSpec, GreenFunction,
    IntegratorOptions, OperatorConfig, PiecewisePoly, SearchOptions, TwoPointBC, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_load(rng: &mut ChaCha8Rng, a: f64, b: f64) -> PiecewisePoly {
    let nodes: Vec<f64> = (0..=4).map(|k| a + (b - a) * k as f64 / 4.0).collect();
    let vals: Vec<C64> = nodes.iter().map(|_| rand_c(rng)).collect();
    PiecewisePoly::linear_interpolant(&nodes, &vals).unwrap()
}

fn opts() -> IntegratorOptions {
    IntegratorOptions::with_tol(1e-13)
}

#[test]
fn eigenvalues_stable_under_tighter_tolerance() {
    let q = AntiderivativeSpec::step(0.0, 1.0, 0.4, re(3.0)).unwrap();
    let cfg = OperatorConfig::new(2, q).unwrap();
    let bc = TwoPointBC::dirichlet();
    let loose = SearchOptions {
        integrator: IntegratorOptions::with_tol(1e-12),
        ..Default::default()
    };
    let tight = SearchOptions {
        integrator: IntegratorOptions::with_tol(5e-13),
        ..Default::default()
    };
    let e1 = find_real_eigenvalues(&cfg, &bc, (0.0, 200.0), &loose).unwrap();
    let e2 = find_real_eigenvalues(&cfg, &bc, (0.0, 200.0), &tight).unwrap();
    assert_eq!(e1.len(), e2.len());
    assert!(e1.len() >= 4);
    for (x, y) in e1.iter().zip(&e2) {
        assert!((x.lambda - y.lambda).norm() < 1e-6 * x.lambda.norm().max(1.0));
        assert_eq!(x.multiplicity, y.multiplicity);
    }
}

#[test]
fn scalar_kernel_is_corner_entry() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for m in 2..=5 {
        let cfg = OperatorConfig::new(m, rand_real_potential(&mut rng, 0.0, 1.0)).unwrap();
        let bc = TwoPointBC::periodic(m);
        let lambda = C64::new(0.3, 2.5);
        let grid: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        let k = greens_matrix(&cfg, lambda, &bc, &grid, &grid, &opts()).unwrap();
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                let want = i_pow(-(m as i64)) * k.matrix(i, j)[(0, m - 1)];
                assert_eq!(k.scalar(i, j), want);
            }
        }
    }
}

#[test]
fn kernel_matches_direct_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for m in 2..=5 {
        let cfg = OperatorConfig::new(m, rand_real_potential(&mut rng, 0.0, 1.0)).unwrap();
        let bc = if m == 2 { TwoPointBC::dirichlet() } else { TwoPointBC::antiperiodic(m) };
        let lambda = C64::new(rng.random_range(-2.0..2.0), 1.5);
        let g = GreenFunction::new(&cfg, lambda, &bc, &opts()).unwrap();
        let f = rand_load(&mut rng, 0.0, 1.0);
        let y = apply_resolvent(&cfg, lambda, &bc, &f, &opts()).unwrap();
        assert!(bc_residual(&bc, &y) < 1e-9);
        let ts: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let via_kernel = g.apply(&f, &ts);
        for (t, v) in ts.iter().zip(&via_kernel) {
            assert!((y.y(*t) - v).norm() < 1e-9, "m = {m}, t = {t}");
        }
    }
}

/// `R(λ) − R(μ) = (λ − μ) R(λ) R(μ)`.
#[test]
fn first_resolvent_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for m in [2, 3, 4] {
        let cfg = OperatorConfig::new(m, rand_real_potential(&mut rng, 0.0, 1.0)).unwrap();
        let bc = TwoPointBC::periodic(m);
        let (lambda, mu) = (C64::new(0.5, 2.0), C64::new(-1.0, -3.0));
        let f = rand_load(&mut rng, 0.0, 1.0);
        let y_l = apply_resolvent(&cfg, lambda, &bc, &f, &opts()).unwrap();
        let y_m = apply_resolvent(&cfg, mu, &bc, &f, &opts()).unwrap();
        let g = GreenFunction::new(&cfg, lambda, &bc, &opts()).unwrap();
        let ts: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let nodes = y_m.grid();
        let rr = g.apply_fn(|s| y_m.y(s), &nodes, &ts);
        for (t, v) in ts.iter().zip(&rr) {
            let lhs = y_l.y(*t) - y_m.y(*t);
            assert!((lhs - (lambda - mu) * v).norm() < 1e-8, "m = {m}, t = {t}");
        }
    }
}

#[test]
fn kernel_adjoint_symmetry_for_real_potential() {
    // Self-adjoint periodic problem: Γ_λ(t, s) = conj(Γ_λ̄(s, t)).
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for m in [2, 3, 4] {
        let cfg = OperatorConfig::new(m, rand_real_potential(&mut rng, 0.0, 1.0)).unwrap();
        let bc = TwoPointBC::periodic(m);
        let lambda = C64::new(0.7, 1.3);
        let g = GreenFunction::new(&cfg, lambda, &bc, &opts()).unwrap();
        let h = GreenFunction::new(&cfg, lambda.conj(), &bc, &opts()).unwrap();
        for _ in 0..10 {
            let (t, s) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let d = (g.scalar(t, s) - h.scalar(s, t).conj()).norm();
            assert!(d < 1e-9, "m = {m}: {d:e}");
        }
    }
}
