use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("support radius {support} violates the no-aliasing bound {bound} for a box of half length π")]
    DealiasingViolation { support: f64, bound: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: expected {expected} entries, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("field is not Hermitian: imaginary residue {residue:e}")]
    NonHermitian { residue: f64 },

    #[error("radial integrand is not integrable at the origin (exponent {exponent})")]
    NonIntegrable { exponent: f64 },

    #[error("symmetric half-interval rule requires a = b")]
    SymmetricFlagInvalid,

    #[error("mode {mode:?} outside the lattice of order {n}")]
    IndexOutOfRange { mode: Vec<i64>, n: usize },

    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    QuadratureNoConvergence { tol: f64, estimate: f64 },

    #[error("operands were built on different configurations")]
    ConfigMismatch,

    #[error("direct kernel table too large for d={dim}, N={n}")]
    TooLargeForOracle { dim: usize, n: usize },

    #[error("solution blew up: sup norm {norm:e} exceeds {limit:e}")]
    BlowUp { norm: f64, limit: f64 },

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("BKW clock requires the 2D Maxwell kernel with constant 1/(2π)")]
    WrongKernelClock,

    #[error("BKW residual {residual:e} exceeds {limit:e}")]
    ResidualTooLarge { residual: f64, limit: f64 },

    #[error("reference array has zero L1 norm")]
    ZeroReference,

    #[error("malformed dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
