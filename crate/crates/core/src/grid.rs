//! Velocity-box geometry, the Fourier mode lattice, and transforms.
//!
//! The box is `[-π, π)^d`. Modes run over `k ∈ {-N..N}^d`; coefficients are
//! stored row-major with each component offset by `+N` (first axis slowest).
//! Physical samples live on the `n = 2N + 1` point grid `v_j = 2π j / n`,
//! `j ∈ {-N..N}` per axis, stored in the same order.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::fft::FftNd;
use crate::{Error, Result};

/// A lattice point; components past the dimension are zero.
pub type Mode = [i64; 3];

/// Box geometry and truncation radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainConfig {
    dim: usize,
    n_modes: usize,
    support: f64,
}

impl DomainConfig {
    /// Half length of the periodic box.
    pub const HALF_LENGTH: f64 = PI;

    /// Largest support radius allowed by `T ≥ (1 + 3√2) S / 2` with `T = π`.
    pub fn max_support() -> f64 {
        2.0 * PI / (1.0 + 3.0 * 2f64.sqrt())
    }

    pub fn new(dim: usize, n_modes: usize, support: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidConfig(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n_modes < 1 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if !(support > 0.0) || !support.is_finite() {
            return Err(Error::InvalidConfig(format!("support radius must be positive, got {support}")));
        }
        let bound = Self::max_support();
        if support > bound + 1e-12 {
            return Err(Error::DealiasingViolation { support, bound });
        }
        Ok(DomainConfig { dim, n_modes, support })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N`, the largest mode per axis.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Support radius `S` of the data.
    pub fn support(&self) -> f64 {
        self.support
    }

    /// Collision truncation radius `R = 2S`.
    pub fn radius(&self) -> f64 {
        2.0 * self.support
    }

    /// Points per axis of the physical grid, `2N + 1`.
    pub fn side(&self) -> usize {
        2 * self.n_modes + 1
    }

    pub fn len(&self) -> usize {
        self.lattice().len()
    }

    pub fn lattice(&self) -> Lattice {
        Lattice { dim: self.dim, n: self.n_modes }
    }

    /// Per-axis size of the zero-padded convolution grid: the smallest power
    /// of two no less than `4N + 1`.
    pub fn padded_side(&self) -> usize {
        (4 * self.n_modes + 1).next_power_of_two()
    }

    /// Coordinates of grid node `index` (same ordering as the coefficients).
    pub fn node(&self, index: usize) -> [f64; 3] {
        let k = self.lattice().mode(index);
        let h = 2.0 * PI / self.side() as f64;
        [k[0] as f64 * h, k[1] as f64 * h, k[2] as f64 * h]
    }

    /// Cell volume of the physical grid.
    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI / self.side() as f64).powi(self.dim as i32)
    }
}

/// The mode set `{-N..N}^d` with its row-major, `+N`-offset ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub dim: usize,
    pub n: usize,
}

impl Lattice {
    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: &Mode) -> bool {
        let n = self.n as i64;
        k[..self.dim].iter().all(|&c| c.abs() <= n) && k[self.dim..].iter().all(|&c| c == 0)
    }

    /// Storage index of `k`, or `None` outside the lattice.
    pub fn index(&self, k: &Mode) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let side = self.side();
        let n = self.n as i64;
        Some(k[..self.dim].iter().fold(0usize, |acc, &c| acc * side + (c + n) as usize))
    }

    pub fn mode(&self, mut index: usize) -> Mode {
        let side = self.side();
        let mut k = [0i64; 3];
        for a in (0..self.dim).rev() {
            k[a] = (index % side) as i64 - self.n as i64;
            index /= side;
        }
        k
    }

    /// Index of `-k` for the mode stored at `index`.
    pub fn negate(&self, index: usize) -> usize {
        self.len() - 1 - index
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.len()).map(move |i| self.mode(i))
    }
}

/// Fourier coefficients `f̂_k` of a distribution on the periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    config: DomainConfig,
    coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn zeros(config: DomainConfig) -> Self {
        FourierField { config, coeffs: vec![Complex64::new(0.0, 0.0); config.len()] }
    }

    pub fn from_coeffs(config: DomainConfig, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != config.len() {
            return Err(Error::ShapeMismatch { expected: config.len(), actual: coeffs.len() });
        }
        Ok(FourierField { config, coeffs })
    }

    pub fn config(&self) -> &DomainConfig {
        &self.config
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn get(&self, k: &Mode) -> Option<Complex64> {
        self.config.lattice().index(k).map(|i| self.coeffs[i])
    }

    /// Largest coefficient modulus.
    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_k |f̂_k - conj(f̂_{-k})|`.
    pub fn hermitian_residue(&self) -> f64 {
        let lat = self.config.lattice();
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[i] - self.coeffs[lat.negate(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Replace `f̂_k` by `(f̂_k + conj f̂_{-k}) / 2`.
    pub fn enforce_hermitian(&mut self) {
        let lat = self.config.lattice();
        let len = self.coeffs.len();
        for i in 0..len / 2 {
            let j = lat.negate(i);
            let avg = 0.5 * (self.coeffs[i] + self.coeffs[j].conj());
            self.coeffs[i] = avg;
            self.coeffs[j] = avg.conj();
        }
        let mid = len / 2;
        self.coeffs[mid] = Complex64::new(self.coeffs[mid].re, 0.0);
    }

    pub(crate) fn check_same_config(&self, other: &DomainConfig) -> Result<()> {
        if &self.config != other {
            return Err(Error::ConfigMismatch);
        }
        Ok(())
    }

    /// `self + scale * other`, both on the same configuration.
    pub fn axpy(&self, scale: f64, other: &FourierField) -> FourierField {
        debug_assert_eq!(self.config, other.config);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b * scale).collect();
        FourierField { config: self.config, coeffs }
    }

    pub fn scaled(&self, scale: f64) -> FourierField {
        FourierField { config: self.config, coeffs: self.coeffs.iter().map(|z| z * scale).collect() }
    }
}

/// Wrap a signed coordinate into `0..side`.
#[inline]
pub(crate) fn wrap(c: i64, side: usize) -> usize {
    c.rem_euclid(side as i64) as usize
}

/// Position of lattice mode `k` inside a periodic cube of the given side.
pub(crate) fn cube_position(k: &Mode, dim: usize, side: usize) -> usize {
    k[..dim].iter().fold(0usize, |acc, &c| acc * side + wrap(c, side))
}

/// Discrete Fourier coefficients of real samples on the `2N+1` grid. Exact
/// for trigonometric polynomials of degree at most `N`.
pub fn to_fourier(config: &DomainConfig, values: &[f64]) -> Result<FourierField> {
    let len = config.len();
    if values.len() != len {
        return Err(Error::ShapeMismatch { expected: len, actual: values.len() });
    }
    let side = config.side();
    let lat = config.lattice();
    let plan = FftNd::get(side, config.dim());
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (i, &v) in values.iter().enumerate() {
        buf[cube_position(&lat.mode(i), config.dim(), side)] = Complex64::new(v, 0.0);
    }
    let mut scratch = Vec::new();
    plan.forward(&mut buf, &mut scratch);
    let norm = 1.0 / len as f64;
    let mut coeffs: Vec<Complex64> = (0..len)
        .map(|i| buf[cube_position(&lat.mode(i), config.dim(), side)] * norm)
        .collect();
    // Real input: make the symmetry exact rather than accurate to roundoff.
    for i in 0..len / 2 {
        let j = lat.negate(i);
        let avg = 0.5 * (coeffs[i] + coeffs[j].conj());
        coeffs[i] = avg;
        coeffs[j] = avg.conj();
    }
    coeffs[len / 2].im = 0.0;
    Ok(FourierField { config: *config, coeffs })
}

/// Evaluate the truncated series at the grid nodes.
pub fn from_fourier(field: &FourierField) -> Result<Vec<f64>> {
    let config = field.config();
    let len = config.len();
    let side = config.side();
    let lat = config.lattice();
    let plan = FftNd::get(side, config.dim());
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (i, &z) in field.coeffs().iter().enumerate() {
        buf[cube_position(&lat.mode(i), config.dim(), side)] = z;
    }
    let mut scratch = Vec::new();
    plan.inverse(&mut buf, &mut scratch);
    let scale = field.sup_norm().max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(len);
    let mut residue = 0.0f64;
    for i in 0..len {
        let z = buf[cube_position(&lat.mode(i), config.dim(), side)];
        residue = residue.max(z.im.abs());
        out.push(z.re);
    }
    if residue > 1e-8 * scale.max(1.0) {
        return Err(Error::NonHermitian { residue });
    }
    Ok(out)
}

/// `(g ⋆ h)_k = Σ_{l+m=k} g_l h_m` over the lattice, truncated to the
/// lattice, computed exactly by zero padding to [`DomainConfig::padded_side`].
pub fn truncated_convolution(g: &FourierField, h: &FourierField) -> Result<FourierField> {
    if g.config != h.config {
        return Err(Error::ConfigMismatch);
    }
    let config = g.config;
    let dim = config.dim();
    let pad = config.padded_side();
    let lat = config.lattice();
    let plan = FftNd::get(pad, dim);
    let mut scratch = Vec::new();

    let positions: Vec<usize> = lat.modes().map(|k| cube_position(&k, dim, pad)).collect();
    let mut a = vec![Complex64::new(0.0, 0.0); plan.len()];
    let mut b = vec![Complex64::new(0.0, 0.0); plan.len()];
    for (i, &p) in positions.iter().enumerate() {
        a[p] = g.coeffs[i];
        b[p] = h.coeffs[i];
    }
    plan.inverse(&mut a, &mut scratch);
    plan.inverse(&mut b, &mut scratch);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    plan.forward(&mut a, &mut scratch);
    let norm = 1.0 / plan.len() as f64;
    let coeffs = positions.iter().map(|&p| a[p] * norm).collect();
    Ok(FourierField { config, coeffs })
}
