//! Explicit Runge–Kutta integration of `f̂' = P_N Q^{R,M}(f_N, f_N)` and
//! moment diagnostics.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::collision::eval_fast;
use crate::decomposition::Decomposition;
use crate::fft::FftNd;
use crate::grid::{cube_position, to_fourier, DomainConfig, FourierField};
use crate::{Error, Result};

/// Clipping floor for `f log f`.
pub const ENTROPY_FLOOR: f64 = 1e-14;

/// Growth factor of the sup norm that counts as a blow-up within one step.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub dim: usize,
    pub mass: f64,
    pub momentum: [f64; 3],
    /// `∫ |v|² f`.
    pub energy: f64,
    /// `(energy/ρ − |u|²) / d`.
    pub temperature: f64,
    /// `−∫ f log f`.
    pub entropy: f64,
}

impl MomentSet {
    pub fn velocity(&self) -> [f64; 3] {
        let m = self.mass;
        [self.momentum[0] / m, self.momentum[1] / m, self.momentum[2] / m]
    }
}

/// `∫_{-π}^{π} v e^{ikv} dv`.
fn first_moment_weight(k: i64) -> Complex64 {
    if k == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Complex64::new(0.0, -2.0 * PI * sign / k as f64)
}

/// `∫_{-π}^{π} v² e^{ikv} dv`.
fn second_moment_weight(k: i64) -> f64 {
    if k == 0 {
        return 2.0 * PI.powi(3) / 3.0;
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    4.0 * PI * sign / (k * k) as f64
}

/// Real part of the truncated series on the grid, without the Hermitian check.
pub(crate) fn grid_values(field: &FourierField) -> Vec<f64> {
    let config = field.config();
    let side = config.side();
    let dim = config.dim();
    let lat = config.lattice();
    let plan = FftNd::get(side, dim);
    let mut buf = vec![Complex64::new(0.0, 0.0); lat.len()];
    for (i, &z) in field.coeffs().iter().enumerate() {
        buf[cube_position(&lat.mode(i), dim, side)] = z;
    }
    let mut scratch = Vec::new();
    plan.inverse(&mut buf, &mut scratch);
    (0..lat.len()).map(|i| buf[cube_position(&lat.mode(i), dim, side)].re).collect()
}

/// Grid quadrature of `−f log f` with `f` clipped at [`ENTROPY_FLOOR`].
pub fn entropy_of_values(config: &DomainConfig, values: &[f64]) -> f64 {
    let sum: f64 = values
        .iter()
        .map(|&v| {
            let v = v.max(ENTROPY_FLOOR);
            v * v.ln()
        })
        .sum();
    -config.cell_volume() * sum
}

/// Mass, momentum and energy from the coefficients with exact box integrals
/// of `1`, `v_j`, `|v|²` against `e^{ik·v}`; entropy on the grid.
pub fn moments(f: &FourierField) -> MomentSet {
    let config = f.config();
    let dim = config.dim();
    let lat = config.lattice();
    let n = config.n_modes() as i64;
    let box_len = 2.0 * PI;
    let transverse = box_len.powi(dim as i32 - 1);

    let mass = box_len.powi(dim as i32) * f.get(&[0, 0, 0]).unwrap().re;
    let mut momentum = [0.0; 3];
    let mut energy = 0.0;
    for axis in 0..dim {
        for k in -n..=n {
            let mut mode = [0i64; 3];
            mode[axis] = k;
            let c = f.coeffs()[lat.index(&mode).unwrap()];
            momentum[axis] += (c * first_moment_weight(k)).re * transverse;
            energy += c.re * second_moment_weight(k) * transverse;
        }
    }
    let u2: f64 = momentum[..dim].iter().map(|p| (p / mass).powi(2)).sum();
    let temperature = (energy / mass - u2) / dim as f64;
    let entropy = entropy_of_values(config, &grid_values(f));
    MomentSet { dim, mass, momentum, energy, temperature, entropy }
}

/// Sample `ρ (2πT)^{-d/2} exp(−|v − u|² / 2T)` on the grid and transform.
pub fn moments_to_maxwellian(ms: &MomentSet, config: &DomainConfig) -> Result<FourierField> {
    if !(ms.temperature > 0.0) {
        return Err(Error::NonPositiveTemperature(ms.temperature));
    }
    if !(ms.mass > 0.0) {
        return Err(Error::InvalidConfig(format!("density must be positive, got {}", ms.mass)));
    }
    let dim = config.dim();
    let t = ms.temperature;
    let u = ms.velocity();
    let norm = ms.mass / (2.0 * PI * t).powf(dim as f64 / 2.0);
    let values: Vec<f64> = (0..config.len())
        .map(|i| {
            let v = config.node(i);
            let r2: f64 = (0..dim).map(|a| (v[a] - u[a]).powi(2)).sum();
            norm * (-r2 / (2.0 * t)).exp()
        })
        .collect();
    to_fourier(config, &values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk2,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Emit a diagnostic record every `stride` steps.
    pub stride: usize,
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Step sizes reaching `t_end` exactly: uniform `dt`, last step shortened.
    pub fn step_sizes(&self) -> Vec<f64> {
        if self.t_end == 0.0 {
            return Vec::new();
        }
        let steps = ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize;
        let mut out = vec![self.dt; steps];
        out[steps - 1] = self.t_end - (steps - 1) as f64 * self.dt;
        out
    }
}

/// One explicit Runge–Kutta step; Hermitian symmetry is re-imposed after.
pub fn step(f: &FourierField, dec: &Decomposition, dt: f64, scheme: Scheme) -> Result<FourierField> {
    let rhs = |g: &FourierField| eval_fast(g, dec);
    let mut next = match scheme {
        Scheme::Rk2 => {
            let k1 = rhs(f)?;
            let k2 = rhs(&f.axpy(0.5 * dt, &k1))?;
            f.axpy(dt, &k2)
        }
        Scheme::Rk4 => {
            let k1 = rhs(f)?;
            let k2 = rhs(&f.axpy(0.5 * dt, &k1))?;
            let k3 = rhs(&f.axpy(0.5 * dt, &k2))?;
            let k4 = rhs(&f.axpy(dt, &k3))?;
            let mut acc = k1.axpy(2.0, &k2);
            acc = acc.axpy(2.0, &k3);
            acc = acc.axpy(1.0, &k4);
            f.axpy(dt / 6.0, &acc)
        }
    };
    next.enforce_hermitian();
    let limit = BLOWUP_FACTOR * f.sup_norm();
    let norm = next.sup_norm();
    if !norm.is_finite() || (limit > 0.0 && norm > limit) {
        return Err(Error::BlowUp { norm, limit });
    }
    Ok(next)
}

/// A snapshot handed to the diagnostic sink.
#[derive(Debug, Clone)]
pub struct Snapshot<'a> {
    pub step: usize,
    pub time: f64,
    pub field: &'a FourierField,
}

/// Advance `f0` to `t_end`, calling `sink` at step 0, every `stride` steps,
/// and at the final time. Records arrive in order.
pub fn integrate<S>(f0: &FourierField, dec: &Decomposition, icfg: &IntegratorConfig, mut sink: S) -> Result<FourierField>
where
    S: FnMut(Snapshot<'_>) -> Result<()>,
{
    icfg.validate()?;
    f0.check_same_config(dec.config())?;
    let initial = f0.sup_norm();
    let mut f = f0.clone();
    sink(Snapshot { step: 0, time: 0.0, field: &f })?;
    let sizes = icfg.step_sizes();
    for (i, &dt) in sizes.iter().enumerate() {
        f = step(&f, dec, dt, icfg.scheme)?;
        let limit = BLOWUP_FACTOR * initial;
        if initial > 0.0 && f.sup_norm() > limit {
            return Err(Error::BlowUp { norm: f.sup_norm(), limit });
        }
        let n = i + 1;
        let time = if n == sizes.len() { icfg.t_end } else { n as f64 * icfg.dt };
        if n % icfg.stride == 0 || n == sizes.len() {
            sink(Snapshot { step: n, time, field: &f })?;
        }
    }
    Ok(f)
}
