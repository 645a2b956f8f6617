//! Collision kernels with a decoupled reduced kernel `B̃(x, y) = a(|x|) b(|y|)`
//! and the radial transforms built from `a` and `b`:
//!
//! * `φ^d_{R,a}(s) = ∫_{-R}^{R} |ρ|^{d-2} a(ρ) e^{iρs} dρ`
//! * `ψ^3_{R,b}(r) = ∫_0^π φ^3_{R,b}(r cos θ) dθ`

use std::f64::consts::PI;

use crate::quadrature::GaussRule;
use crate::{Error, Result};

/// Default Gauss–Legendre order per panel.
pub const DEFAULT_ORDER: usize = 64;

/// `sin(x) / x`, with a Taylor expansion near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0
    } else {
        x.sin() / x
    }
}

/// `φ²_R(s) = 2R Sinc(Rs)`.
pub fn phi2_closed(radius: f64, s: f64) -> f64 {
    2.0 * radius * sinc(radius * s.abs())
}

/// `φ³_R(s) = R² [2 Sinc(Rs) − Sinc²(Rs/2)]`.
pub fn phi3_closed(radius: f64, s: f64) -> f64 {
    let x = radius * s.abs();
    let half = sinc(0.5 * x);
    radius * radius * (2.0 * sinc(x) - half * half)
}

/// A radial factor `ρ ↦ coeff · |ρ|^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialFactor {
    pub coeff: f64,
    pub exponent: f64,
}

impl RadialFactor {
    pub fn constant(coeff: f64) -> Self {
        RadialFactor { coeff, exponent: 0.0 }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        if self.exponent == 0.0 {
            self.coeff
        } else {
            self.coeff * rho.abs().powf(self.exponent)
        }
    }

    pub fn is_constant(&self) -> bool {
        self.exponent == 0.0
    }
}

/// Collision kernel families satisfying the decoupling assumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelModel {
    /// `B = C` in two dimensions.
    Maxwell2D { constant: f64 },
    /// `B = C |u|` in three dimensions.
    HardSphere3D { constant: f64 },
    /// Variable hard spheres: `B = C sin^{γ-1}(θ/2) |u|^γ` in 3D and
    /// `B = C sin^γ(θ/2) |u|^γ` in 2D, with `γ ∈ (-1, 1]`.
    Vhs { gamma: f64, dim: usize, constant: f64 },
}

impl KernelModel {
    /// Maxwell molecules with `C = 1/(2π)`, the normalization of the BKW clock.
    pub fn maxwell2d() -> Self {
        KernelModel::Maxwell2D { constant: 1.0 / (2.0 * PI) }
    }

    /// Hard spheres with `C = 1/(4π)`.
    pub fn hard_sphere3d() -> Self {
        KernelModel::HardSphere3D { constant: 1.0 / (4.0 * PI) }
    }

    pub fn vhs(dim: usize, gamma: f64, constant: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidConfig(format!("VHS dimension must be 2 or 3, got {dim}")));
        }
        if !(gamma > -1.0 && gamma <= 1.0) {
            return Err(Error::NonIntegrable { exponent: gamma });
        }
        Ok(KernelModel::Vhs { gamma, dim, constant })
    }

    pub fn dim(&self) -> usize {
        match *self {
            KernelModel::Maxwell2D { .. } => 2,
            KernelModel::HardSphere3D { .. } => 3,
            KernelModel::Vhs { dim, .. } => dim,
        }
    }

    pub fn constant(&self) -> f64 {
        match *self {
            KernelModel::Maxwell2D { constant }
            | KernelModel::HardSphere3D { constant }
            | KernelModel::Vhs { constant, .. } => constant,
        }
    }

    /// The factors `(a, b)` of `B̃ = 2^{d-1} B(...) |x+y|^{2-d}`. By default the
    /// whole constant sits in `a` and `b ≡ 1`; with `symmetric` both get
    /// `√(2^{d-1} C)`, which needs `a` to be constant.
    pub fn factors(&self, symmetric: bool) -> Result<(RadialFactor, RadialFactor)> {
        let dim = self.dim();
        let c = 2f64.powi(dim as i32 - 1) * self.constant();
        let a = match *self {
            KernelModel::Maxwell2D { .. } | KernelModel::HardSphere3D { .. } => RadialFactor::constant(c),
            KernelModel::Vhs { gamma, dim: 3, .. } => RadialFactor { coeff: c, exponent: gamma - 1.0 },
            KernelModel::Vhs { gamma, .. } => RadialFactor { coeff: c, exponent: gamma },
        };
        let endpoint = a.exponent + dim as f64 - 2.0;
        if endpoint <= -1.0 {
            return Err(Error::NonIntegrable { exponent: endpoint });
        }
        if symmetric {
            if !a.is_constant() || c < 0.0 {
                return Err(Error::SymmetricFlagInvalid);
            }
            let root = RadialFactor::constant(c.sqrt());
            return Ok((root, root));
        }
        Ok((a, RadialFactor::constant(1.0)))
    }
}

/// Precomputed quadrature for the radial transforms in dimension `d` on
/// `(-R, R)`.
///
/// The interval `[0, R]` is split into panels so that each carries a bounded
/// number of oscillations of `cos(ρs)`; the first panel uses a Gauss–Jacobi
/// rule for the endpoint behaviour `ρ^μ`, the others Gauss–Legendre.
#[derive(Debug, Clone)]
pub struct RadialTransform {
    dim: usize,
    radius: f64,
    endpoint_exponent: f64,
    legendre: GaussRule,
    first: GaussRule,
}

impl RadialTransform {
    /// `endpoint_exponent` is `μ` such that `|ρ|^{d-2} a(ρ) ~ ρ^μ` near zero.
    pub fn new(dim: usize, radius: f64, order: usize, endpoint_exponent: f64) -> Result<Self> {
        if endpoint_exponent <= -1.0 {
            return Err(Error::NonIntegrable { exponent: endpoint_exponent });
        }
        if radius <= 0.0 {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
        }
        let order = order.max(2);
        Ok(RadialTransform {
            dim,
            radius,
            endpoint_exponent,
            legendre: GaussRule::legendre(order),
            first: GaussRule::jacobi_left(order, endpoint_exponent)?,
        })
    }

    /// Transform adapted to a power-law factor.
    pub fn for_factor(dim: usize, radius: f64, factor: &RadialFactor, order: usize) -> Result<Self> {
        Self::new(dim, radius, order, factor.exponent + dim as f64 - 2.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn order(&self) -> usize {
        self.legendre.order()
    }

    fn panels(&self, phase: f64) -> usize {
        1 + (phase.abs() / (8.0 * PI)) as usize
    }

    /// `∫_{-R}^{R} |ρ|^{d-2} a(ρ) e^{iρs} dρ = 2 ∫_0^R ρ^{d-2} a(ρ) cos(ρs) dρ`.
    pub fn phi_radial_quad<A: Fn(f64) -> f64>(&self, a: A, s: f64) -> f64 {
        let s = s.abs();
        let r = self.radius;
        let panels = self.panels(r * s);
        let h = r / panels as f64;
        let mu = self.endpoint_exponent;
        let weight = |rho: f64| rho.powi(self.dim as i32 - 2) * a(rho) * (rho * s).cos();

        // ∫_0^h ρ^μ g(ρ) dρ with g = weight / ρ^μ
        let jac = (0.5 * h).powf(mu);
        let mut acc: f64 = self.first.mapped(0.0, h).map(|(x, w)| w * jac * weight(x) / x.powf(mu)).sum();
        for p in 1..panels {
            let lo = p as f64 * h;
            acc += self.legendre.integrate(lo, lo + h, weight);
        }
        2.0 * acc
    }

    /// `φ^d_{R,f}(s)`, closed form for constant factors.
    pub fn phi(&self, factor: &RadialFactor, s: f64) -> f64 {
        if factor.is_constant() {
            let base = match self.dim {
                2 => phi2_closed(self.radius, s),
                _ => phi3_closed(self.radius, s),
            };
            factor.coeff * base
        } else {
            self.phi_radial_quad(|rho| factor.eval(rho), s)
        }
    }

    /// `ψ³_{R,b}(r) = 2 ∫_0^{π/2} φ³_{R,b}(r cos θ) dθ`.
    pub fn psi(&self, factor: &RadialFactor, r: f64) -> f64 {
        psi3_quad(self, factor, r)
    }
}

/// `ψ³_{R,b}(r) = ∫_0^π φ³_{R,b}(r cos θ) dθ`, evaluated on `[0, π/2]` by
/// composite Gauss–Legendre.
pub fn psi3_quad(t: &RadialTransform, b: &RadialFactor, r: f64) -> f64 {
    let r = r.abs();
    let panels = t.panels(t.radius * r);
    let h = 0.5 * PI / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = p as f64 * h;
        acc += t.legendre.integrate(lo, lo + h, |theta| t.phi(b, r * theta.cos()));
    }
    2.0 * acc
}
