//! The projected collision operator
//! `Q̂_k = Σ_{l+m=k} β̂(l, m) f̂_l f̂_m`, `β̂(l, m) = β(l, m) − β(m, m)`.
//!
//! [`eval_fast`] uses the factorized kernel modes: one padded FFT convolution
//! per direction for the gain part and one with the diagonal `D` for the loss
//! part. [`eval_direct`] is the literal double sum.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::decomposition::{BetaOracle2d, Decomposition};
use crate::fft::FftNd;
use crate::grid::{cube_position, DomainConfig, FourierField};
use crate::kernels::KernelModel;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One convolution `w · (A ⋆ B)` with `A = α ⊙ f̂`, `B = α' ⊙ f̂`.
struct Term<'a> {
    weight: f64,
    left: Option<&'a [f64]>,
    right: &'a [f64],
}

struct Workspace {
    pair: Vec<Complex64>,
    product: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// Fast evaluation of `P_N Q^{R,M}(f_N, f_N)`.
///
/// `f` must be Hermitian: each modulated spectrum is transformed as the real
/// and imaginary parts of a single complex array, and two real products share
/// one forward transform. Terms are grouped in fixed pairs and reduced in
/// ascending order, so the result does not depend on the thread count.
pub fn eval_fast(f: &FourierField, dec: &Decomposition) -> Result<FourierField> {
    f.check_same_config(dec.config())?;
    let config = *dec.config();
    let dim = config.dim();
    let pad = config.padded_side();
    let lat = config.lattice();
    let plan = FftNd::get(pad, dim);
    let positions: Vec<usize> = lat.modes().map(|k| cube_position(&k, dim, pad)).collect();
    let negated: Vec<usize> = lat.modes().map(|k| cube_position(&[-k[0], -k[1], -k[2]], dim, pad)).collect();
    let coeffs = f.coeffs();

    let mut terms: Vec<Term<'_>> = (0..dec.terms())
        .map(|p| Term { weight: dec.weight(p), left: Some(dec.alpha(p)), right: dec.alpha_prime(p) })
        .collect();
    terms.push(Term { weight: -1.0, left: None, right: dec.diag() });

    let norm = 1.0 / plan.len() as f64;
    let partials: Vec<Vec<Complex64>> = terms
        .par_chunks(2)
        .map_init(
            || Workspace {
                pair: vec![ZERO; plan.len()],
                product: vec![ZERO; plan.len()],
                scratch: Vec::new(),
            },
            |ws, chunk| {
                ws.product.iter_mut().for_each(|z| *z = ZERO);
                for (slot, term) in chunk.iter().enumerate() {
                    ws.pair.iter_mut().for_each(|z| *z = ZERO);
                    for (i, &pos) in positions.iter().enumerate() {
                        let a = match term.left {
                            Some(alpha) => coeffs[i] * alpha[i],
                            None => coeffs[i],
                        };
                        let b = coeffs[i] * term.right[i];
                        // a + i b
                        ws.pair[pos] = Complex64::new(a.re - b.im, a.im + b.re);
                    }
                    plan.inverse(&mut ws.pair, &mut ws.scratch);
                    for (out, z) in ws.product.iter_mut().zip(&ws.pair) {
                        let v = z.re * z.im;
                        if slot == 0 {
                            out.re = v;
                        } else {
                            out.im = v;
                        }
                    }
                }
                plan.forward(&mut ws.product, &mut ws.scratch);
                let w0 = chunk[0].weight * norm;
                let w1 = chunk.get(1).map(|t| t.weight * norm);
                positions
                    .iter()
                    .zip(&negated)
                    .map(|(&pos, &neg)| {
                        let x = ws.product[pos];
                        let y = ws.product[neg].conj();
                        let first = 0.5 * (x + y);
                        match w1 {
                            Some(w1) => {
                                let d = 0.5 * (x - y);
                                // (x - conj x_{-k}) / (2i)
                                let second = Complex64::new(d.im, -d.re);
                                first * w0 + second * w1
                            }
                            None => first * w0,
                        }
                    })
                    .collect()
            },
        )
        .collect();

    let mut out = vec![ZERO; lat.len()];
    for part in &partials {
        for (o, z) in out.iter_mut().zip(part) {
            *o += z;
        }
    }
    FourierField::from_coeffs(config, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableSource {
    Decomposition,
    OracleQuadrature,
}

/// Dense `β̂(l, m)` over all lattice pairs, row `l`, column `m`.
#[derive(Debug, Clone)]
pub struct DirectKernelTable {
    config: DomainConfig,
    beta_hat: Vec<f64>,
    source: TableSource,
}

impl DirectKernelTable {
    fn check_size(config: &DomainConfig) -> Result<()> {
        let cap = if config.dim() == 2 { 12 } else { 5 };
        if config.n_modes() > cap {
            return Err(Error::TooLargeForOracle { dim: config.dim(), n: config.n_modes() });
        }
        Ok(())
    }

    /// `β̂(l, m) = β(l, m) − β(m, m)` from the factorized modes.
    pub fn from_decomposition(dec: &Decomposition) -> Result<Self> {
        let config = *dec.config();
        Self::check_size(&config)?;
        let len = config.len();
        let beta_hat = (0..len * len)
            .into_par_iter()
            .map(|ij| {
                let (l, m) = (ij / len, ij % len);
                dec.beta_at(l, m) - dec.diag()[m]
            })
            .collect();
        Ok(DirectKernelTable { config, beta_hat, source: TableSource::Decomposition })
    }

    /// `β̂` from adaptive quadrature of the angular integral (2D only).
    pub fn from_oracle(config: &DomainConfig, kernel: &KernelModel, tol: f64) -> Result<Self> {
        Self::check_size(config)?;
        let oracle = BetaOracle2d::new(config, kernel)?;
        let lat = config.lattice();
        let modes: Vec<_> = lat.modes().collect();
        // β depends on l and m only through |l|², |m|² and |l·m|.
        let key = |l: &[i64; 3], m: &[i64; 3]| {
            (l[0] * l[0] + l[1] * l[1], m[0] * m[0] + m[1] * m[1], (l[0] * m[0] + l[1] * m[1]).abs())
        };
        let mut reps: HashMap<(i64, i64, i64), (usize, usize)> = HashMap::new();
        for (i, l) in modes.iter().enumerate() {
            for (j, m) in modes.iter().enumerate() {
                reps.entry(key(l, m)).or_insert((i, j));
            }
        }
        let mut keys: Vec<_> = reps.into_iter().collect();
        keys.sort();
        let values: Vec<f64> = keys
            .par_iter()
            .map(|(_, (i, j))| oracle.beta(&modes[*i], &modes[*j], tol))
            .collect::<Result<_>>()?;
        let beta: HashMap<_, _> = keys.iter().map(|(k, _)| *k).zip(values).collect();
        let len = lat.len();
        let mut beta_hat = vec![0.0; len * len];
        for (i, l) in modes.iter().enumerate() {
            for (j, m) in modes.iter().enumerate() {
                beta_hat[i * len + j] = beta[&key(l, m)] - beta[&key(m, m)];
            }
        }
        Ok(DirectKernelTable { config: *config, beta_hat, source: TableSource::OracleQuadrature })
    }

    pub fn config(&self) -> &DomainConfig {
        &self.config
    }

    pub fn source(&self) -> TableSource {
        self.source
    }

    pub fn beta_hat(&self, l: usize, m: usize) -> f64 {
        self.beta_hat[l * self.config.len() + m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.beta_hat
    }
}

/// Build the direct table from a decomposition.
pub fn build_direct_table(dec: &Decomposition) -> Result<DirectKernelTable> {
    DirectKernelTable::from_decomposition(dec)
}

/// `Q̂_k = Σ_{l+m=k} β̂(l, m) f̂_l f̂_m` by explicit double loop.
pub fn eval_direct(f: &FourierField, table: &DirectKernelTable) -> Result<FourierField> {
    f.check_same_config(table.config())?;
    let config = *table.config();
    let lat = config.lattice();
    let len = lat.len();
    let modes: Vec<_> = lat.modes().collect();
    let coeffs = f.coeffs();
    let mut out = vec![ZERO; len];
    for (li, l) in modes.iter().enumerate() {
        let fl = coeffs[li];
        if fl == ZERO {
            continue;
        }
        let row = &table.beta_hat[li * len..(li + 1) * len];
        for (mi, m) in modes.iter().enumerate() {
            let k = [l[0] + m[0], l[1] + m[1], l[2] + m[2]];
            if let Some(ki) = lat.index(&k) {
                out[ki] += fl * coeffs[mi] * row[mi];
            }
        }
    }
    FourierField::from_coeffs(config, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose_2d;

    #[test]
    fn zero_and_constant_fields_give_zero() {
        let c = DomainConfig::new(2, 4, 1.0).unwrap();
        let dec = decompose_2d(&c, &KernelModel::maxwell2d(), 4, Default::default()).unwrap();
        let table = build_direct_table(&dec).unwrap();
        let zero = FourierField::zeros(c);
        assert!(eval_fast(&zero, &dec).unwrap().sup_norm() == 0.0);
        assert!(eval_direct(&zero, &table).unwrap().sup_norm() == 0.0);
        let mut constant = FourierField::zeros(c);
        constant.coeffs_mut()[c.len() / 2] = Complex64::new(0.3, 0.0);
        assert!(eval_fast(&constant, &dec).unwrap().sup_norm() < 1e-15);
        assert!(eval_direct(&constant, &table).unwrap().sup_norm() == 0.0);
    }

    #[test]
    fn table_diagonal_and_antidiagonal_vanish() {
        let c = DomainConfig::new(2, 3, 1.0).unwrap();
        let dec = decompose_2d(&c, &KernelModel::maxwell2d(), 6, Default::default()).unwrap();
        let t = build_direct_table(&dec).unwrap();
        let lat = c.lattice();
        for i in 0..lat.len() {
            assert_eq!(t.beta_hat(i, i), 0.0);
            assert_eq!(t.beta_hat(i, lat.negate(i)), 0.0);
        }
        assert_eq!(t.source(), TableSource::Decomposition);
    }

    #[test]
    fn single_mode_pair() {
        let c = DomainConfig::new(2, 4, 1.0).unwrap();
        let dec = decompose_2d(&c, &KernelModel::maxwell2d(), 4, Default::default()).unwrap();
        let t = build_direct_table(&dec).unwrap();
        let lat = c.lattice();
        let mut f = FourierField::zeros(c);
        let l0 = [1, 2, 0];
        f.coeffs_mut()[lat.index(&l0).unwrap()] = Complex64::new(0.4, 0.1);
        f.coeffs_mut()[lat.index(&[-1, -2, 0]).unwrap()] = Complex64::new(0.4, -0.1);
        let q = eval_direct(&f, &t).unwrap();
        for k in lat.modes() {
            let allowed = k == [0, 0, 0] || k == [2, 4, 0] || k == [-2, -4, 0];
            if !allowed {
                assert_eq!(q.get(&k).unwrap(), ZERO);
            }
        }
        assert_eq!(q.get(&[0, 0, 0]).unwrap(), ZERO);
    }

    #[test]
    fn oversized_tables_are_refused() {
        let c = DomainConfig::new(2, 13, 1.0).unwrap();
        let dec = decompose_2d(&c, &KernelModel::maxwell2d(), 1, Default::default()).unwrap();
        assert!(matches!(build_direct_table(&dec), Err(Error::TooLargeForOracle { .. })));
        let c3 = DomainConfig::new(3, 6, 1.0).unwrap();
        assert!(matches!(
            DirectKernelTable::from_oracle(&c3, &KernelModel::maxwell2d(), 1e-10),
            Err(Error::TooLargeForOracle { .. })
        ));
    }

    #[test]
    fn mismatched_configs_are_rejected() {
        let c = DomainConfig::new(2, 3, 1.0).unwrap();
        let other = DomainConfig::new(2, 4, 1.0).unwrap();
        let dec = decompose_2d(&c, &KernelModel::maxwell2d(), 2, Default::default()).unwrap();
        assert!(matches!(eval_fast(&FourierField::zeros(other), &dec), Err(Error::ConfigMismatch)));
    }
}
