mod common;

use common::{max_abs_diff, random_hermitian, rng, sup};
use fastcoll::{from_fourier, to_fourier, truncated_convolution, DomainConfig, FourierField};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn brute_force(g: &FourierField, h: &FourierField) -> Vec<Complex64> {
    let lat = g.config().lattice();
    let mut out = vec![Complex64::new(0.0, 0.0); lat.len()];
    for (i, l) in lat.modes().enumerate() {
        for (j, m) in lat.modes().enumerate() {
            let k = [l[0] + m[0], l[1] + m[1], l[2] + m[2]];
            if let Some(idx) = lat.index(&k) {
                out[idx] += g.coeffs()[i] * h.coeffs()[j];
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convolution_matches_double_sum(n in 1usize..=8, seed in any::<u64>()) {
        let c = DomainConfig::new(2, n, 1.0).unwrap();
        let mut r = rng(seed);
        let g = random_hermitian(&c, &mut r);
        let h = random_hermitian(&c, &mut r);
        let fast = truncated_convolution(&g, &h).unwrap();
        let slow = brute_force(&g, &h);
        prop_assert!(max_abs_diff(fast.coeffs(), &slow) <= 1e-13 * sup(&slow));
        prop_assert!(fast.hermitian_residue() <= 1e-13 * sup(&slow));
    }

    #[test]
    fn transforms_round_trip(n in 1usize..=10, dim in 2usize..=3, seed in any::<u64>()) {
        let n = if dim == 3 { n.min(5) } else { n };
        let c = DomainConfig::new(dim, n, 1.0).unwrap();
        let mut r = rng(seed);
        let values: Vec<f64> = (0..c.len()).map(|_| r.gen_range(-2.0..2.0)).collect();
        let back = from_fourier(&to_fourier(&c, &values).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}


#[test]
fn three_dimensional_convolution_matches_double_sum() {
    let c = DomainConfig::new(3, 3, 1.0).unwrap();
    let mut r = rng(11);
    for _ in 0..3 {
        let g = random_hermitian(&c, &mut r);
        let h = random_hermitian(&c, &mut r);
        let slow = brute_force(&g, &h);
        let fast = truncated_convolution(&g, &h).unwrap();
        assert!(max_abs_diff(fast.coeffs(), &slow) <= 1e-13 * sup(&slow));
    }
}
