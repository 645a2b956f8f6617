//! Factorized kernel modes `β(l, m) ≈ Σ_p w_p α_p(l) α'_p(m)`.
//!
//! The collision directions `e` are sampled by the rectangular rule on the
//! half circle (2D) or on the `(θ, φ) ∈ [0, π)²` parametrization of the half
//! sphere (3D). Per-term arrays are stored dense over the mode lattice.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::grid::{DomainConfig, Mode};
use crate::kernels::{KernelModel, RadialFactor, RadialTransform, DEFAULT_ORDER};
use crate::quadrature::adaptive_gauss_kronrod;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecompositionOptions {
    /// 2D only: use `M` directions on `[0, π/2)` with weight `π/M`; needs `a = b`.
    pub symmetric_half: bool,
    /// 3D only: include the `sin θ` surface Jacobian in the weights.
    pub jacobian: bool,
    /// Gauss–Legendre order per panel for radial quadratures.
    pub order: usize,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        DecompositionOptions { symmetric_half: false, jacobian: false, order: DEFAULT_ORDER }
    }
}

impl DecompositionOptions {
    pub(crate) fn flags(&self) -> u64 {
        (self.symmetric_half as u64) | ((self.jacobian as u64) << 1)
    }

    pub(crate) fn from_flags(flags: u64, order: usize) -> Self {
        DecompositionOptions { symmetric_half: flags & 1 != 0, jacobian: flags & 2 != 0, order }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub(crate) config: DomainConfig,
    pub(crate) directions_per_axis: usize,
    pub(crate) options: DecompositionOptions,
    pub(crate) weights: Vec<f64>,
    pub(crate) directions: Vec<[f64; 3]>,
    pub(crate) alpha: Vec<f64>,
    pub(crate) alpha_prime: Vec<f64>,
    pub(crate) diag: Vec<f64>,
}

impl Decomposition {
    pub fn config(&self) -> &DomainConfig {
        &self.config
    }

    /// `M`, directions per angular coordinate.
    pub fn m(&self) -> usize {
        self.directions_per_axis
    }

    pub fn options(&self) -> &DecompositionOptions {
        &self.options
    }

    /// Number of terms `P = M^{d-1}`.
    pub fn terms(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, p: usize) -> f64 {
        self.weights[p]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn direction(&self, p: usize) -> [f64; 3] {
        self.directions[p]
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    pub fn alpha(&self, p: usize) -> &[f64] {
        let len = self.config.len();
        &self.alpha[p * len..(p + 1) * len]
    }

    pub fn alpha_prime(&self, p: usize) -> &[f64] {
        let len = self.config.len();
        &self.alpha_prime[p * len..(p + 1) * len]
    }

    /// Loss diagonal `D_m = β(m, m)`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `Σ_p w_p α_p(l) α'_p(m)`.
    pub fn reconstruct_beta(&self, l: &Mode, m: &Mode) -> Result<f64> {
        let lat = self.config.lattice();
        let out_of_range = |k: &Mode| Error::IndexOutOfRange { mode: k[..lat.dim].to_vec(), n: lat.n };
        let li = lat.index(l).ok_or_else(|| out_of_range(l))?;
        let mi = lat.index(m).ok_or_else(|| out_of_range(m))?;
        Ok(self.beta_at(li, mi))
    }

    pub(crate) fn beta_at(&self, li: usize, mi: usize) -> f64 {
        let len = self.config.len();
        let mut acc = 0.0;
        for (p, w) in self.weights.iter().enumerate() {
            acc += w * self.alpha[p * len + li] * self.alpha_prime[p * len + mi];
        }
        acc
    }

    fn with_diag(mut self) -> Self {
        let len = self.config.len();
        self.diag = (0..len).map(|i| self.beta_at(i, i)).collect();
        self
    }

    /// The `2M` decomposition, reusing the terms whose directions coincide
    /// with the current ones (every even index in each angular coordinate).
    pub fn refine_doubled(&self, kernel: &KernelModel) -> Result<Decomposition> {
        let m2 = 2 * self.directions_per_axis;
        let plan = Plan::new(&self.config, kernel, m2, self.options)?;
        let len = self.config.len();
        let dim = self.config.dim();
        let terms: Vec<(Vec<f64>, Vec<f64>)> = (0..plan.terms())
            .into_par_iter()
            .map(|p| {
                let reused = if dim == 2 {
                    (p % 2 == 0).then_some(p / 2)
                } else {
                    let (i, j) = (p / m2, p % m2);
                    (i % 2 == 0 && j % 2 == 0).then(|| (i / 2) * self.directions_per_axis + j / 2)
                };
                match reused {
                    Some(old) => (self.alpha(old).to_vec(), self.alpha_prime(old).to_vec()),
                    None => plan.term(p),
                }
            })
            .collect();
        Ok(plan.assemble(terms, len))
    }
}

/// Direction table and radial transforms for one decomposition.
struct Plan {
    config: DomainConfig,
    m: usize,
    options: DecompositionOptions,
    a: RadialFactor,
    b: RadialFactor,
    ta: RadialTransform,
    tb: RadialTransform,
    weights: Vec<f64>,
    directions: Vec<[f64; 3]>,
}

impl Plan {
    fn new(config: &DomainConfig, kernel: &KernelModel, m: usize, options: DecompositionOptions) -> Result<Plan> {
        let dim = config.dim();
        if kernel.dim() != dim {
            return Err(Error::InvalidConfig(format!(
                "kernel dimension {} does not match domain dimension {dim}",
                kernel.dim()
            )));
        }
        if m < 1 {
            return Err(Error::InvalidConfig("M must be at least 1".into()));
        }
        if dim == 3 && options.symmetric_half {
            return Err(Error::InvalidConfig("the half-interval rule applies to 2D only".into()));
        }
        let (a, b) = kernel.factors(options.symmetric_half)?;
        let radius = config.radius();
        let ta = RadialTransform::for_factor(dim, radius, &a, options.order)?;
        let tb = RadialTransform::for_factor(dim, radius, &b, options.order)?;

        let mut weights = Vec::new();
        let mut directions = Vec::new();
        if dim == 2 {
            let span = if options.symmetric_half { 0.5 * PI } else { PI };
            for p in 0..m {
                let theta = span * p as f64 / m as f64;
                directions.push([theta.cos(), theta.sin(), 0.0]);
                weights.push(PI / m as f64);
            }
        } else {
            let base = PI * PI / (m * m) as f64;
            for p in 0..m {
                let theta = PI * p as f64 / m as f64;
                for q in 0..m {
                    let phi = PI * q as f64 / m as f64;
                    let (st, ct) = theta.sin_cos();
                    let (sp, cp) = phi.sin_cos();
                    directions.push([st * cp, st * sp, ct]);
                    weights.push(if options.jacobian { base * st } else { base });
                }
            }
        }
        Ok(Plan { config: *config, m, options, a, b, ta, tb, weights, directions })
    }

    fn terms(&self) -> usize {
        self.weights.len()
    }

    fn term(&self, p: usize) -> (Vec<f64>, Vec<f64>) {
        let e = self.directions[p];
        let lat = self.config.lattice();
        let dot = |k: &Mode, v: &[f64; 3]| k[0] as f64 * v[0] + k[1] as f64 * v[1] + k[2] as f64 * v[2];
        let mut alpha = Vec::with_capacity(lat.len());
        let mut alpha_prime = Vec::with_capacity(lat.len());
        if self.config.dim() == 2 {
            let perp = [-e[1], e[0], 0.0];
            for k in lat.modes() {
                alpha.push(self.ta.phi(&self.a, dot(&k, &e)));
                alpha_prime.push(self.tb.phi(&self.b, dot(&k, &perp)));
            }
        } else {
            for k in lat.modes() {
                let along = dot(&k, &e);
                alpha.push(self.ta.phi(&self.a, along));
                let norm2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                let proj = (norm2 - along * along).max(0.0).sqrt();
                alpha_prime.push(self.tb.psi(&self.b, proj));
            }
        }
        (alpha, alpha_prime)
    }

    fn assemble(self, terms: Vec<(Vec<f64>, Vec<f64>)>, len: usize) -> Decomposition {
        let mut alpha = Vec::with_capacity(terms.len() * len);
        let mut alpha_prime = Vec::with_capacity(terms.len() * len);
        for (a, b) in terms {
            alpha.extend_from_slice(&a);
            alpha_prime.extend_from_slice(&b);
        }
        Decomposition {
            config: self.config,
            directions_per_axis: self.m,
            options: self.options,
            weights: self.weights,
            directions: self.directions,
            alpha,
            alpha_prime,
            diag: Vec::new(),
        }
        .with_diag()
    }

    fn build(self) -> Decomposition {
        let len = self.config.len();
        let terms: Vec<_> = (0..self.terms()).into_par_iter().map(|p| self.term(p)).collect();
        self.assemble(terms, len)
    }
}

/// Two-dimensional decomposition: `α_p(l) = φ²_{R,a}(l·e_{θ_p})`,
/// `α'_p(m) = φ²_{R,b}(m·e_{θ_p+π/2})`, `θ_p = πp/M`, weight `π/M`.
pub fn decompose_2d(
    config: &DomainConfig,
    kernel: &KernelModel,
    m: usize,
    options: DecompositionOptions,
) -> Result<Decomposition> {
    if config.dim() != 2 {
        return Err(Error::InvalidConfig("decompose_2d needs a 2D domain".into()));
    }
    Ok(Plan::new(config, kernel, m, options)?.build())
}

/// Three-dimensional decomposition over `M²` directions
/// `e = (sin θ_p cos φ_q, sin θ_p sin φ_q, cos θ_p)`:
/// `α(l) = φ³_{R,a}(l·e)`, `α'(m) = ψ³_{R,b}(|Π_{e⊥} m|)`.
pub fn decompose_3d(
    config: &DomainConfig,
    kernel: &KernelModel,
    m: usize,
    options: DecompositionOptions,
) -> Result<Decomposition> {
    if config.dim() != 3 {
        return Err(Error::InvalidConfig("decompose_3d needs a 3D domain".into()));
    }
    Ok(Plan::new(config, kernel, m, options)?.build())
}

/// Dispatch on the domain dimension.
pub fn decompose(
    config: &DomainConfig,
    kernel: &KernelModel,
    m: usize,
    options: DecompositionOptions,
) -> Result<Decomposition> {
    match config.dim() {
        2 => decompose_2d(config, kernel, m, options),
        _ => decompose_3d(config, kernel, m, options),
    }
}

/// Adaptive-quadrature evaluation of the 2D kernel modes
/// `β(l, m) = ∫_0^π φ²_{R,a}(l·e_θ) φ²_{R,b}(m·e_{θ+π/2}) dθ`.
pub struct BetaOracle2d {
    a: RadialFactor,
    b: RadialFactor,
    ta: RadialTransform,
    tb: RadialTransform,
    max_segments: usize,
}

impl BetaOracle2d {
    pub fn new(config: &DomainConfig, kernel: &KernelModel) -> Result<Self> {
        if config.dim() != 2 || kernel.dim() != 2 {
            return Err(Error::InvalidConfig("the β oracle is two-dimensional".into()));
        }
        let (a, b) = kernel.factors(false)?;
        let radius = config.radius();
        Ok(BetaOracle2d {
            ta: RadialTransform::for_factor(2, radius, &a, DEFAULT_ORDER)?,
            tb: RadialTransform::for_factor(2, radius, &b, DEFAULT_ORDER)?,
            a,
            b,
            max_segments: 20_000,
        })
    }

    pub fn beta(&self, l: &Mode, m: &Mode, tol: f64) -> Result<f64> {
        let (l0, l1) = (l[0] as f64, l[1] as f64);
        let (m0, m1) = (m[0] as f64, m[1] as f64);
        adaptive_gauss_kronrod(
            |theta| {
                let (s, c) = theta.sin_cos();
                let along = l0 * c + l1 * s;
                let across = -m0 * s + m1 * c;
                self.ta.phi(&self.a, along) * self.tb.phi(&self.b, across)
            },
            0.0,
            PI,
            tol,
            self.max_segments,
        )
    }
}

/// One-shot form of [`BetaOracle2d::beta`].
pub fn beta_oracle_2d(config: &DomainConfig, kernel: &KernelModel, l: &Mode, m: &Mode, tol: f64) -> Result<f64> {
    BetaOracle2d::new(config, kernel)?.beta(l, m, tol)
}
