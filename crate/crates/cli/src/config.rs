//! Flat `key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. Unknown keys are errors so that
//! typos do not silently fall back to defaults.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use fastcoll::{DecompositionOptions, DomainConfig, IntegratorConfig, KernelModel, Scheme};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid value for `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error(transparent)]
    Model(#[from] fastcoll::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Maxwell2D,
    HardSphere3D,
    Vhs,
}

impl KernelKind {
    fn name(self) -> &'static str {
        match self {
            KernelKind::Maxwell2D => "maxwell2d",
            KernelKind::HardSphere3D => "hardsphere3d",
            KernelKind::Vhs => "vhs",
        }
    }
}

/// Initial datum for `evolve`.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    /// BKW sampled at `bkw_t0`; needs the 2D Maxwell kernel with its clock.
    Bkw,
    /// Centered Maxwellian with unit mass at `temperature`.
    Maxwellian,
    /// A `CSBF1` field dump.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dimension: usize,
    pub n: usize,
    pub m: usize,
    pub support: f64,
    pub kernel: KernelKind,
    pub gamma: f64,
    /// `None` selects the kernel's default constant.
    pub constant: Option<f64>,
    pub scheme: Scheme,
    /// `None` selects the stability heuristic, see [`RunConfig::effective_dt`].
    pub dt: Option<f64>,
    pub t_end: f64,
    pub stride: usize,
    pub initial: Initial,
    pub bkw_t0: f64,
    pub temperature: f64,
    pub symmetric_half: bool,
    pub jacobian: bool,
    pub order: usize,
    pub threads: usize,
    pub out: PathBuf,
    /// Decomposition dump checked by `validate`.
    pub decomposition: Option<PathBuf>,
    pub seed: u64,
    pub trials: usize,
    pub bench_n: Vec<usize>,
    pub bench_m: Vec<usize>,
    pub bench_direct_n: Vec<usize>,
    pub bench_reps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dimension: 2,
            n: 8,
            m: 8,
            support: DomainConfig::max_support(),
            kernel: KernelKind::Maxwell2D,
            gamma: 1.0,
            constant: None,
            scheme: Scheme::Rk4,
            dt: None,
            t_end: 0.01,
            stride: 1,
            initial: Initial::Bkw,
            bkw_t0: 0.0,
            temperature: 0.1,
            symmetric_half: false,
            jacobian: false,
            order: fastcoll::kernels::DEFAULT_ORDER,
            threads: 1,
            out: PathBuf::from("."),
            decomposition: None,
            seed: 1,
            trials: 20,
            bench_n: vec![16, 32, 64, 128],
            bench_m: vec![8, 16],
            bench_direct_n: vec![4, 6, 8, 12],
            bench_reps: 5,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value { key: key.into(), msg: e.to_string() })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Value { key: key.into(), msg: format!("expected a boolean, got `{value}`") }),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

fn join(list: &[usize]) -> String {
    list.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parse and validate a configuration text. Missing keys take defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: idx + 1, msg: format!("expected `key = value`, got `{line}`") });
            };
            cfg.set(key.trim(), value.trim())
                .map_err(|e| ConfigError::Syntax { line: idx + 1, msg: e.to_string() })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "dimension" => self.dimension = parse_num(key, value)?,
            "n" => self.n = parse_num(key, value)?,
            "m" => self.m = parse_num(key, value)?,
            "support" => self.support = parse_num(key, value)?,
            "kernel" => {
                self.kernel = match value {
                    "maxwell2d" => KernelKind::Maxwell2D,
                    "hardsphere3d" => KernelKind::HardSphere3D,
                    "vhs" => KernelKind::Vhs,
                    _ => return Err(ConfigError::Value { key: key.into(), msg: format!("unknown kernel `{value}`") }),
                }
            }
            "gamma" => self.gamma = parse_num(key, value)?,
            "constant" => self.constant = if value == "default" { None } else { Some(parse_num(key, value)?) },
            "scheme" => {
                self.scheme = match value {
                    "rk2" => Scheme::Rk2,
                    "rk4" => Scheme::Rk4,
                    _ => return Err(ConfigError::Value { key: key.into(), msg: format!("unknown scheme `{value}`") }),
                }
            }
            "dt" => self.dt = if value == "auto" { None } else { Some(parse_num(key, value)?) },
            "t_end" => self.t_end = parse_num(key, value)?,
            "stride" => self.stride = parse_num(key, value)?,
            "initial" => {
                self.initial = match value {
                    "bkw" => Initial::Bkw,
                    "maxwellian" => Initial::Maxwellian,
                    path => Initial::File(PathBuf::from(path)),
                }
            }
            "bkw_t0" => self.bkw_t0 = parse_num(key, value)?,
            "temperature" => self.temperature = parse_num(key, value)?,
            "symmetric_half" => self.symmetric_half = parse_bool(key, value)?,
            "jacobian" => self.jacobian = parse_bool(key, value)?,
            "order" => self.order = parse_num(key, value)?,
            "threads" => self.threads = parse_num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "decomposition" => self.decomposition = Some(PathBuf::from(value)),
            "seed" => self.seed = parse_num(key, value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "bench_n" => self.bench_n = parse_list(key, value)?,
            "bench_m" => self.bench_m = parse_list(key, value)?,
            "bench_direct_n" => self.bench_direct_n = parse_list(key, value)?,
            "bench_reps" => self.bench_reps = parse_num(key, value)?,
            _ => return Err(ConfigError::Value { key: key.into(), msg: "unknown key".into() }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.domain()?;
        let kernel = self.kernel_model()?;
        if kernel.dim() != self.dimension {
            return Err(ConfigError::Value {
                key: "kernel".into(),
                msg: format!("{} is a {}D kernel but dimension = {}", self.kernel.name(), kernel.dim(), self.dimension),
            });
        }
        kernel.factors(self.symmetric_half)?;
        if self.m == 0 {
            return Err(ConfigError::Value { key: "m".into(), msg: "must be at least 1".into() });
        }
        if self.threads == 0 {
            return Err(ConfigError::Value { key: "threads".into(), msg: "must be at least 1".into() });
        }
        if self.bench_reps == 0 {
            return Err(ConfigError::Value { key: "bench_reps".into(), msg: "must be at least 1".into() });
        }
        if !(self.temperature > 0.0) {
            return Err(ConfigError::Value { key: "temperature".into(), msg: "must be positive".into() });
        }
        self.integrator().validate()?;
        Ok(())
    }

    pub fn domain(&self) -> Result<DomainConfig, fastcoll::Error> {
        DomainConfig::new(self.dimension, self.n, self.support)
    }

    pub fn kernel_model(&self) -> Result<KernelModel, fastcoll::Error> {
        Ok(match self.kernel {
            KernelKind::Maxwell2D => KernelModel::Maxwell2D { constant: self.constant.unwrap_or(1.0 / (2.0 * PI)) },
            KernelKind::HardSphere3D => {
                KernelModel::HardSphere3D { constant: self.constant.unwrap_or(1.0 / (4.0 * PI)) }
            }
            KernelKind::Vhs => {
                let default = if self.dimension == 2 { 1.0 / (2.0 * PI) } else { 1.0 / (4.0 * PI) };
                KernelModel::vhs(self.dimension, self.gamma, self.constant.unwrap_or(default))?
            }
        })
    }

    pub fn options(&self) -> DecompositionOptions {
        DecompositionOptions { symmetric_half: self.symmetric_half, jacobian: self.jacobian, order: self.order }
    }

    /// `dt`, or `0.01 / (a(R) R^{d-1})` when unset: the inverse of the
    /// kernel's collision-frequency scale on the truncation ball.
    pub fn effective_dt(&self) -> f64 {
        if let Some(dt) = self.dt {
            return dt;
        }
        let radius = 2.0 * self.support;
        let scale = self
            .kernel_model()
            .and_then(|k| k.factors(false))
            .map(|(a, _)| a.coeff.abs() * radius.powf(a.exponent + self.dimension as f64 - 1.0))
            .unwrap_or(1.0);
        0.01 / scale.max(f64::MIN_POSITIVE)
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig { scheme: self.scheme, dt: self.effective_dt(), t_end: self.t_end, stride: self.stride }
    }

    /// Every key with its effective value; parsing the result gives back `self`
    /// with `dt` and `constant` resolved.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let kernel = self.kernel_model().map(|k| k.constant()).unwrap_or(f64::NAN);
        let initial = match &self.initial {
            Initial::Bkw => "bkw".to_string(),
            Initial::Maxwellian => "maxwellian".to_string(),
            Initial::File(p) => p.display().to_string(),
        };
        let scheme = match self.scheme {
            Scheme::Rk2 => "rk2",
            Scheme::Rk4 => "rk4",
        };
        let _ = writeln!(s, "dimension = {}", self.dimension);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "support = {:e}", self.support);
        let _ = writeln!(s, "kernel = {}", self.kernel.name());
        let _ = writeln!(s, "gamma = {:e}", self.gamma);
        let _ = writeln!(s, "constant = {:e}", kernel);
        let _ = writeln!(s, "scheme = {scheme}");
        let _ = writeln!(s, "dt = {:e}", self.effective_dt());
        let _ = writeln!(s, "t_end = {:e}", self.t_end);
        let _ = writeln!(s, "stride = {}", self.stride);
        let _ = writeln!(s, "initial = {initial}");
        let _ = writeln!(s, "bkw_t0 = {:e}", self.bkw_t0);
        let _ = writeln!(s, "temperature = {:e}", self.temperature);
        let _ = writeln!(s, "symmetric_half = {}", self.symmetric_half);
        let _ = writeln!(s, "jacobian = {}", self.jacobian);
        let _ = writeln!(s, "order = {}", self.order);
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "out = {}", self.out.display());
        if let Some(p) = &self.decomposition {
            let _ = writeln!(s, "decomposition = {}", p.display());
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "bench_n = {}", join(&self.bench_n));
        let _ = writeln!(s, "bench_m = {}", join(&self.bench_m));
        let _ = writeln!(s, "bench_direct_n = {}", join(&self.bench_direct_n));
        let _ = writeln!(s, "bench_reps = {}", self.bench_reps);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert!((cfg.effective_dt() - 0.01 * PI / (2.0 * cfg.support)).abs() < 1e-15);
    }

    #[test]
    fn parses_keys_and_comments() {
        let cfg = RunConfig::parse(
            "# 3D run\ndimension = 3\nkernel = hardsphere3d  # hard spheres\nn = 4\nm=4\njacobian = true\n\nbench_n = 8, 16\n",
        )
        .unwrap();
        assert_eq!(cfg.dimension, 3);
        assert_eq!(cfg.kernel, KernelKind::HardSphere3D);
        assert!(cfg.jacobian);
        assert_eq!(cfg.bench_n, vec![8, 16]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::parse("n = 8\nbogus"), Err(ConfigError::Syntax { line: 2, .. })));
        assert!(matches!(RunConfig::parse("colour = red"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(RunConfig::parse("n = eight"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(RunConfig::parse("support = 1.5"), Err(ConfigError::Model(_))));
        assert!(RunConfig::parse("dimension = 3").is_err());
        assert!(RunConfig::parse("kernel = vhs\ngamma = 0.5\nsymmetric_half = true").is_err());
        assert!(RunConfig::parse("dt = -1").is_err());
    }

    #[test]
    fn effective_text_round_trips() {
        let cfg = RunConfig::parse("kernel = vhs\ngamma = 0.5\nn = 12\nscheme = rk2\ninitial = maxwellian\n").unwrap();
        let again = RunConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(again.to_text(), cfg.to_text());
        assert_eq!(again.effective_dt(), cfg.effective_dt());
        assert_eq!(again.kernel_model().unwrap(), cfg.kernel_model().unwrap());
    }
}
