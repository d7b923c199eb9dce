#![allow(dead_code)]

use quasidiff::{AntiderivativeSpec, CMatrix, CVector, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| rand_c(rng))
}

/// Real piecewise polynomial potential with 1–3 pieces of degree ≤ 2.
pub fn rand_real_potential(rng: &mut ChaCha8Rng, a: f64, b: f64) -> AntiderivativeSpec {
    let pieces = rng.random_range(1..=3);
    let mut starts = vec![a];
    for k in 1..pieces {
        let lo = a + (b - a) * k as f64 / pieces as f64;
        starts.push(lo + rng.random_range(-0.1..0.1) * (b - a) / pieces as f64);
    }
    let coeffs = (0..pieces)
        .map(|_| {
            let deg = rng.random_range(0..=2);
            (0..=deg).map(|_| re(rng.random_range(-2.0..2.0))).collect()
        })
        .collect();
    AntiderivativeSpec::from_pieces(a, b, starts, coeffs).unwrap()
}

/// Haar-ish random unitary from the QR factorization of a complex Gaussian-like matrix.
pub fn rand_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| rand_c(rng));
    g.qr().q()
}

/// Random contraction with spectral norm in `[0.2, 0.9]`.
pub fn rand_contraction(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| rand_c(rng));
    let s = g.clone().singular_values().max();
    g * re(rng.random_range(0.2..0.9) / s)
}
