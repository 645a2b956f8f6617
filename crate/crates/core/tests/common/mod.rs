#![allow(dead_code)]

use fastcoll::{to_fourier, DomainConfig, FourierField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Hermitian coefficients with entries in the unit square.
pub fn random_hermitian(config: &DomainConfig, rng: &mut ChaCha8Rng) -> FourierField {
    let lat = config.lattice();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); lat.len()];
    for i in 0..lat.len() {
        let j = lat.negate(i);
        if j < i {
            continue;
        }
        let z = if i == j {
            Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
        } else {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        coeffs[i] = z;
        coeffs[j] = z.conj();
    }
    FourierField::from_coeffs(*config, coeffs).unwrap()
}

/// Grid samples of a smooth positive bump, transformed.
pub fn positive_field(config: &DomainConfig, rng: &mut ChaCha8Rng) -> FourierField {
    let shift: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let width = rng.gen_range(0.3..0.6);
    let values: Vec<f64> = (0..config.len())
        .map(|i| {
            let v = config.node(i);
            let r2: f64 = (0..config.dim()).map(|a| (v[a] - shift[a]).powi(2)).sum();
            (-r2 / (2.0 * width * width)).exp()
        })
        .collect();
    to_fourier(config, &values).unwrap()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn sup(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Adaptive Simpson with Richardson correction, absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}
