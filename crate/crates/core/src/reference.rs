//! The BKW self-similar solution for two-dimensional Maxwell molecules and
//! error norms against it.
//!
//! With `B = 1/(2π)`,
//!
//! ```text
//! f(t, v) = exp(−|v|²/2s) / (2π s²) · [2s − 1 + (1 − s)/(2s) |v|²],
//! s(t)    = 1 − exp(−t/8) / 2.
//! ```
//!
//! The solution has unbounded support, so it is sampled on the box under the
//! mass-preserving rescaling `g(w) = λ² f(t, λw)`, with `λ` chosen so that
//! `f < 1e-12` outside `|v| = λ S`. For Maxwell molecules this rescaling
//! commutes with the collision operator, so `g` solves the same equation on
//! the same clock.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::collision::eval_fast;
use crate::decomposition::{decompose_2d, Decomposition, DecompositionOptions};
use crate::grid::{from_fourier, to_fourier, DomainConfig, FourierField};
use crate::kernels::KernelModel;
use crate::solver::grid_values;
use crate::{Error, Result};

/// Density level defining the effective support radius.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Bound on the residual accepted by [`verify_bkw_residual`].
pub const RESIDUAL_LIMIT: f64 = 1e-6;

/// Directions used by [`verify_bkw_residual`].
pub const RESIDUAL_DIRECTIONS: usize = 64;

/// `s(t) = 1 − exp(−t/8)/2`.
pub fn bkw_s(t: f64) -> f64 {
    1.0 - 0.5 * (-t / 8.0).exp()
}

fn density(s: f64, r2: f64) -> f64 {
    (-r2 / (2.0 * s)).exp() / (2.0 * PI * s * s) * (2.0 * s - 1.0 + (1.0 - s) / (2.0 * s) * r2)
}

/// `∂f/∂s` at fixed `|v|²`.
fn density_ds(s: f64, r2: f64) -> f64 {
    let e = (-r2 / (2.0 * s)).exp();
    let p = 2.0 * s - 1.0 + (1.0 - s) / (2.0 * s) * r2;
    let dp = 2.0 - r2 / (2.0 * s * s);
    let s2 = s * s;
    (e * r2 / (2.0 * s2) * p / s2 + e * dp / s2 - 2.0 * e * p / (s2 * s)) / (2.0 * PI)
}

/// BKW density at time `t` and physical velocity `v`.
pub fn bkw(t: f64, v: [f64; 2]) -> f64 {
    density(bkw_s(t), v[0] * v[0] + v[1] * v[1])
}

/// `∂_t f(t, v)`.
pub fn bkw_dt(t: f64, v: [f64; 2]) -> f64 {
    let ds_dt = (-t / 8.0).exp() / 16.0;
    density_ds(bkw_s(t), v[0] * v[0] + v[1] * v[1]) * ds_dt
}

/// Smallest radius beyond which `f(t, ·) < SUPPORT_THRESHOLD` for every `t ≥ 0`.
pub fn effective_radius() -> f64 {
    static RADIUS: OnceLock<f64> = OnceLock::new();
    *RADIUS.get_or_init(|| {
        let sup = |r: f64| {
            (0..=400)
                .map(|i| density(0.5 + 0.5 * i as f64 / 400.0, r * r))
                .fold(0.0f64, f64::max)
        };
        let (mut lo, mut hi) = (3.0, 20.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sup(mid) < SUPPORT_THRESHOLD {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    })
}

/// BKW sampled on the box of a 2D configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BkwReference {
    config: DomainConfig,
    scale: f64,
}

impl BkwReference {
    /// The kernel must be 2D Maxwell with `C = 1/(2π)`: the clock of `s(t)`
    /// is tied to that constant.
    pub fn new(config: &DomainConfig, kernel: &KernelModel) -> Result<Self> {
        let clock = 1.0 / (2.0 * PI);
        match *kernel {
            KernelModel::Maxwell2D { constant } if (constant - clock).abs() <= 1e-14 * clock => {}
            _ => return Err(Error::WrongKernelClock),
        }
        if config.dim() != 2 {
            return Err(Error::InvalidConfig("BKW reference is two-dimensional".into()));
        }
        Ok(BkwReference { config: *config, scale: effective_radius() / config.support() })
    }

    pub fn config(&self) -> &DomainConfig {
        &self.config
    }

    /// Physical velocity per box unit, `λ`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn sample_with(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        let lam2 = self.scale * self.scale;
        (0..self.config.len())
            .map(|i| {
                let w = self.config.node(i);
                lam2 * g(lam2 * (w[0] * w[0] + w[1] * w[1]))
            })
            .collect()
    }

    /// Box samples of `λ² f(t, λw)`.
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let s = bkw_s(t);
        self.sample_with(|r2| density(s, r2))
    }

    /// Box samples of `λ² ∂_t f(t, λw)`.
    pub fn sample_dt(&self, t: f64) -> Vec<f64> {
        let s = bkw_s(t);
        let ds_dt = (-t / 8.0).exp() / 16.0;
        self.sample_with(|r2| density_ds(s, r2) * ds_dt)
    }

    /// Box samples of the `t → ∞` limit, the unit Maxwellian.
    pub fn sample_equilibrium(&self) -> Vec<f64> {
        self.sample_with(|r2| density(1.0, r2))
    }

    pub fn field(&self, t: f64) -> Result<FourierField> {
        to_fourier(&self.config, &self.sample(t))
    }

    /// `‖P_N Q(f_N, f_N) − ∂_t f_N‖_∞` on the grid.
    pub fn residual(&self, dec: &Decomposition, t: f64) -> Result<f64> {
        let f = self.field(t)?;
        let dfdt = to_fourier(&self.config, &self.sample_dt(t))?;
        let q = eval_fast(&f, dec)?;
        sup_on_grid(&q.axpy(-1.0, &dfdt))
    }

    /// `‖P_N Q(M_N, M_N)‖_∞` on the grid for the equilibrium `M`.
    pub fn equilibrium_residual(&self, dec: &Decomposition) -> Result<f64> {
        let f = to_fourier(&self.config, &self.sample_equilibrium())?;
        sup_on_grid(&eval_fast(&f, dec)?)
    }
}

fn sup_on_grid(field: &FourierField) -> Result<f64> {
    Ok(from_fourier(field)?.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Residual of the BKW solution against the implemented operator with
/// `M = 64`, failing above [`RESIDUAL_LIMIT`]. Needs `N ≥ 32`.
pub fn verify_bkw_residual(config: &DomainConfig, t: f64) -> Result<f64> {
    if config.dim() != 2 || config.n_modes() < 32 {
        return Err(Error::InvalidConfig("BKW verification needs d = 2 and N >= 32".into()));
    }
    let kernel = KernelModel::maxwell2d();
    let reference = BkwReference::new(config, &kernel)?;
    let dec = decompose_2d(config, &kernel, RESIDUAL_DIRECTIONS, DecompositionOptions::default())?;
    let residual = reference.residual(&dec, t)?;
    if residual > RESIDUAL_LIMIT {
        return Err(Error::ResidualTooLarge { residual, limit: RESIDUAL_LIMIT });
    }
    Ok(residual)
}

/// `Σ|f_j − g_j| / Σ|g_j|` over the grid.
pub fn rel_l1_error(f: &FourierField, exact: &[f64]) -> Result<f64> {
    let values = grid_values(f);
    if values.len() != exact.len() {
        return Err(Error::ShapeMismatch { expected: values.len(), actual: exact.len() });
    }
    let denom: f64 = exact.iter().map(|g| g.abs()).sum();
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    let num: f64 = values.iter().zip(exact).map(|(a, b)| (a - b).abs()).sum();
    Ok(num / denom)
}
