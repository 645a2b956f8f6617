//! The `validate`, `evolve`, `bench` and `kernel-dump` subcommands.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use fastcoll::decomposition::BetaOracle2d;
use fastcoll::io::{read_decomposition, write_decomposition, write_field};
use fastcoll::kernels::{phi2_closed, phi3_closed};
use fastcoll::solver::Snapshot;
use fastcoll::{
    build_direct_table, decompose, eval_direct, eval_fast, integrate, moments, moments_to_maxwellian, psi3_quad,
    rel_l1_error, BkwReference, Decomposition, DecompositionOptions, DirectKernelTable, DomainConfig, FourierField, KernelModel,
    MomentSet, RadialFactor, RadialTransform,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Initial, RunConfig};

/// Run `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Random coefficients with `f̂_{-k} = conj f̂_k`.
pub fn random_hermitian(config: &DomainConfig, rng: &mut ChaCha8Rng) -> FourierField {
    let lat = config.lattice();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); lat.len()];
    for i in 0..lat.len() {
        let j = lat.negate(i);
        if j < i {
            continue;
        }
        let im = if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) };
        let z = Complex64::new(rng.gen_range(-1.0..1.0), im);
        coeffs[i] = z;
        coeffs[j] = z.conj();
    }
    FourierField::from_coeffs(*config, coeffs).expect("lattice-sized coefficients")
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
    /// `None` when the check did not run.
    pub passed: Option<bool>,
    pub note: String,
}

impl Check {
    fn measured(name: &'static str, max_error: f64, tolerance: f64) -> Self {
        Check { name, max_error, tolerance, passed: Some(max_error <= tolerance), note: String::new() }
    }

    fn skipped(name: &'static str, note: impl Into<String>) -> Self {
        Check { name, max_error: f64::NAN, tolerance: f64::NAN, passed: None, note: note.into() }
    }

    fn failed(name: &'static str, note: impl Into<String>) -> Self {
        Check { name, max_error: f64::NAN, tolerance: f64::NAN, passed: Some(false), note: note.into() }
    }
}

fn check_closed_forms(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let radius = rng.gen_range(0.5..3.0);
        let s = rng.gen_range(-50.0..50.0);
        let t2 = RadialTransform::new(2, radius, 64, 0.0).expect("valid transform");
        let t3 = RadialTransform::new(3, radius, 64, 1.0).expect("valid transform");
        worst = worst
            .max((phi2_closed(radius, s) - t2.phi_radial_quad(|_| 1.0, s)).abs())
            .max((phi3_closed(radius, s) - t3.phi_radial_quad(|_| 1.0, s)).abs());
    }
    Check::measured("phi-closed-vs-quadrature", worst, 1e-12)
}

fn check_psi_origin(config: &DomainConfig) -> Result<Check> {
    let radius = config.radius();
    let t = RadialTransform::new(3, radius, 64, 1.0)?;
    let err = (psi3_quad(&t, &RadialFactor::constant(1.0), 0.0) - std::f64::consts::PI * radius * radius).abs();
    Ok(Check::measured("psi-origin", err, 1e-12))
}

fn check_beta_oracle(config: &DomainConfig, kernel: &KernelModel, order: usize) -> Result<Check> {
    if config.dim() != 2 {
        return Ok(Check::skipped("beta-vs-oracle", "oracle is two-dimensional"));
    }
    let opts = DecompositionOptions { order, ..Default::default() };
    let dec = decompose(config, kernel, 64, opts)?;
    let oracle = BetaOracle2d::new(config, kernel)?;
    let bound = config.n_modes().min(4) as i64;
    let modes: Vec<_> = config.lattice().modes().filter(|k| k[0].abs() <= bound && k[1].abs() <= bound).collect();
    let mut worst: f64 = 0.0;
    for l in &modes {
        for m in &modes {
            let want = oracle.beta(l, m, 1e-12)?;
            worst = worst.max((dec.reconstruct_beta(l, m)? - want).abs());
        }
    }
    let mut check = Check::measured("beta-vs-oracle", worst, 1e-10);
    check.note = format!("M=64, |l|,|m| <= {bound}");
    Ok(check)
}

fn check_operator(cfg: &RunConfig, dec: &Decomposition) -> Result<Vec<Check>> {
    let config = dec.config();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fields: Vec<FourierField> = (0..cfg.trials.max(1)).map(|_| random_hermitian(config, &mut rng)).collect();
    let mut mass: f64 = 0.0;
    let mut herm: f64 = 0.0;
    let mut outputs = Vec::with_capacity(fields.len());
    for f in &fields {
        let q = eval_fast(f, dec)?;
        let scale = q.sup_norm().max(f64::MIN_POSITIVE);
        mass = mass.max(q.get(&[0, 0, 0]).expect("origin mode").norm() / scale);
        herm = herm.max(q.hermitian_residue() / scale);
        outputs.push(q);
    }
    let tol = if config.dim() == 2 { 1e-12 } else { 1e-11 };
    let direct = match build_direct_table(dec) {
        Ok(table) => {
            let mut worst: f64 = 0.0;
            for (f, q) in fields.iter().zip(&outputs) {
                let d = eval_direct(f, &table)?;
                worst = worst.max(max_diff(q.coeffs(), d.coeffs()) / d.sup_norm().max(f64::MIN_POSITIVE));
            }
            let mut c = Check::measured("fast-vs-direct", worst, tol);
            c.note = format!("{} random Hermitian fields", fields.len());
            c
        }
        Err(fastcoll::Error::TooLargeForOracle { .. }) => Check::skipped("fast-vs-direct", "N above the direct-sum cap"),
        Err(e) => return Err(e.into()),
    };
    Ok(vec![direct, Check::measured("mass-invariance", mass, 1e-13), Check::measured("hermitian-output", herm, 1e-12)])
}

fn check_dump(path: &Path, config: &DomainConfig, m: usize) -> Check {
    let name = "decomposition-file";
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) => return Check::failed(name, format!("{}: {e}", path.display())),
    };
    match read_decomposition(std::io::BufReader::new(file)) {
        Err(e) => Check::failed(name, format!("{}: {e}", path.display())),
        Ok(dec) if dec.config().dim() != config.dim() || dec.config().n_modes() != config.n_modes() || dec.m() != m => {
            Check::failed(
                name,
                format!(
                    "shape mismatch: file has d={} N={} M={}, config has d={} N={} M={m}",
                    dec.config().dim(),
                    dec.config().n_modes(),
                    dec.m(),
                    config.dim(),
                    config.n_modes()
                ),
            )
        }
        Ok(dec) => {
            let worst = (0..dec.config().len())
                .map(|i| (dec.diag()[i] - dec.diag()[dec.config().lattice().negate(i)]).abs())
                .fold(0.0, f64::max);
            let mut c = Check::measured(name, worst, 0.0);
            c.note = "loaded; D even".into();
            c
        }
    }
}

/// Run every oracle check for the configuration.
pub fn validate(cfg: &RunConfig) -> Result<Vec<Check>> {
    let config = cfg.domain()?;
    let kernel = cfg.kernel_model()?;
    let dec = decompose(&config, &kernel, cfg.m, cfg.options())?;
    let mut checks = vec![check_closed_forms(cfg.seed), check_psi_origin(&config)?];
    checks.push(check_beta_oracle(&config, &kernel, cfg.order)?);
    checks.extend(check_operator(cfg, &dec)?);
    if let Some(path) = &cfg.decomposition {
        checks.push(check_dump(path, &config, cfg.m));
    }
    Ok(checks)
}

pub fn format_checks(checks: &[Check]) -> String {
    let mut s = format!("{:<26} {:>12} {:>10}  {}\n", "check", "max_error", "tolerance", "status");
    for c in checks {
        let status = match c.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        let _ = write!(s, "{:<26} {:>12.3e} {:>10.1e}  {status}", c.name, c.max_error, c.tolerance);
        if !c.note.is_empty() {
            let _ = write!(s, "  ({})", c.note);
        }
        s.push('\n');
    }
    s
}

/// `validate`: print the table, fail on the first failing check.
pub fn cmd_validate(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let checks = validate(cfg)?;
    out.write_all(format_checks(&checks).as_bytes())?;
    if let Some(bad) = checks.iter().find(|c| c.passed == Some(false)) {
        bail!("check `{}` failed{}", bad.name, if bad.note.is_empty() { String::new() } else { format!(": {}", bad.note) });
    }
    Ok(())
}

/// Initial field and, for BKW data, the reference used for the error column.
pub fn initial_field(cfg: &RunConfig, config: &DomainConfig, kernel: &KernelModel) -> Result<(FourierField, Option<BkwReference>)> {
    match &cfg.initial {
        Initial::Bkw => {
            let reference = BkwReference::new(config, kernel).context("BKW initial data")?;
            Ok((reference.field(cfg.bkw_t0)?, Some(reference)))
        }
        Initial::Maxwellian => {
            let t = cfg.temperature;
            let ms = MomentSet {
                dim: config.dim(),
                mass: 1.0,
                momentum: [0.0; 3],
                energy: config.dim() as f64 * t,
                temperature: t,
                entropy: 0.0,
            };
            Ok((moments_to_maxwellian(&ms, config)?, None))
        }
        Initial::File(path) => {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let field = fastcoll::io::read_field(std::io::BufReader::new(file))
                .with_context(|| format!("reading {}", path.display()))?;
            if field.config() != config {
                bail!("{}: field dump does not match the configured domain", path.display());
            }
            Ok((field, None))
        }
    }
}

fn csv_header(dim: usize, with_error: bool) -> String {
    let axes = ["x", "y", "z"];
    let mut s = String::from("t,mass");
    for a in &axes[..dim] {
        let _ = write!(s, ",momentum_{a}");
    }
    s.push_str(",energy,entropy");
    if with_error {
        s.push_str(",l1_error");
    }
    s.push('\n');
    s
}

fn csv_row(out: &mut String, t: f64, ms: &MomentSet, error: Option<f64>) {
    let _ = write!(out, "{t:.16e},{:.16e}", ms.mass);
    for p in &ms.momentum[..ms.dim] {
        let _ = write!(out, ",{p:.16e}");
    }
    let _ = write!(out, ",{:.16e},{:.16e}", ms.energy, ms.entropy);
    if let Some(e) = error {
        let _ = write!(out, ",{e:.16e}");
    }
    out.push('\n');
}

/// Diagnostics of an `evolve` run.
#[derive(Debug, Clone)]
pub struct EvolveOutput {
    pub csv: String,
    pub final_field: FourierField,
    pub final_error: Option<f64>,
}

/// Integrate the configured problem and return the diagnostics CSV.
pub fn evolve(cfg: &RunConfig) -> Result<EvolveOutput> {
    let config = cfg.domain()?;
    let kernel = cfg.kernel_model()?;
    let dec = decompose(&config, &kernel, cfg.m, cfg.options())?;
    let (f0, reference) = initial_field(cfg, &config, &kernel)?;
    let mut csv = csv_header(config.dim(), reference.is_some());
    let mut final_error = None;
    let final_field = integrate(&f0, &dec, &cfg.integrator(), |snap: Snapshot<'_>| {
        let ms = moments(snap.field);
        let error = match &reference {
            Some(r) => Some(rel_l1_error(snap.field, &r.sample(cfg.bkw_t0 + snap.time))?),
            None => None,
        };
        final_error = error;
        csv_row(&mut csv, snap.time, &ms, error);
        Ok(())
    })?;
    Ok(EvolveOutput { csv, final_field, final_error })
}

/// `evolve`: writes `diagnostics.csv`, `effective.cfg` and `final.csbf`.
pub fn cmd_evolve(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    prepare_out(&cfg.out)?;
    write_file(&cfg.out.join("effective.cfg"), cfg.to_text().as_bytes())?;
    let run = evolve(cfg)?;
    write_file(&cfg.out.join("diagnostics.csv"), run.csv.as_bytes())?;
    let mut dump = Vec::new();
    write_field(&mut dump, &run.final_field)?;
    write_file(&cfg.out.join("final.csbf"), &dump)?;
    writeln!(out, "rows: {}", run.csv.lines().count() - 1)?;
    if let Some(e) = run.final_error {
        writeln!(out, "final relative L1 error: {e:.6e}")?;
    }
    writeln!(out, "wrote {}", cfg.out.display())?;
    Ok(())
}

/// One benchmark line; times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub dim: usize,
    pub n: usize,
    pub m: usize,
    pub t_fast: f64,
    pub t_direct: Option<f64>,
}

fn elapsed(f: impl FnOnce()) -> f64 {
    let start = Instant::now();
    f();
    start.elapsed().as_secs_f64()
}

fn bench_field(cfg: &RunConfig, config: &DomainConfig) -> Result<FourierField> {
    let ms = MomentSet {
        dim: config.dim(),
        mass: 1.0,
        momentum: [0.0; 3],
        energy: config.dim() as f64 * cfg.temperature,
        temperature: cfg.temperature,
        entropy: 0.0,
    };
    Ok(moments_to_maxwellian(&ms, config)?)
}

/// A prepared benchmark point; construction is not timed.
pub struct BenchCase {
    n: usize,
    m: usize,
    field: FourierField,
    dec: Decomposition,
    table: Option<DirectKernelTable>,
}

impl BenchCase {
    /// The direct sum is timed too when `direct` is set.
    pub fn new(cfg: &RunConfig, n: usize, m: usize, direct: bool) -> Result<Self> {
        let config = DomainConfig::new(cfg.dimension, n, cfg.support)?;
        let dec = decompose(&config, &cfg.kernel_model()?, m, cfg.options())?;
        let table = if direct { Some(build_direct_table(&dec)?) } else { None };
        Ok(BenchCase { n, m, field: bench_field(cfg, &config)?, dec, table })
    }
}

/// Per-repetition timings `(fast, direct)` for every case, outer index the
/// repetition. Repetitions are interleaved across cases so slow drift in
/// machine load hits every case alike. The direct sum is cheap and timed
/// right after an untimed warm-up call, so small tables are measured warm.
pub fn sample_cases(cases: &[BenchCase], reps: usize) -> Vec<Vec<(f64, Option<f64>)>> {
    for c in cases {
        eval_fast(&c.field, &c.dec).expect("shapes agree");
    }
    (0..reps.max(1))
        .map(|_| {
            cases
                .iter()
                .map(|c| {
                    let fast = elapsed(|| {
                        eval_fast(&c.field, &c.dec).expect("shapes agree");
                    });
                    let direct = c.table.as_ref().map(|table| {
                        eval_direct(&c.field, table).expect("shapes agree");
                        elapsed(|| {
                            eval_direct(&c.field, table).expect("shapes agree");
                        })
                    });
                    (fast, direct)
                })
                .collect()
        })
        .collect()
}

/// Fastest of `reps` evaluations per case.
pub fn time_cases(cases: &[BenchCase], reps: usize) -> Vec<BenchRow> {
    let samples = sample_cases(cases, reps);
    cases
        .iter()
        .enumerate()
        .map(|(i, c)| BenchRow {
            dim: c.dec.config().dim(),
            n: c.n,
            m: c.m,
            t_fast: samples.iter().map(|rep| rep[i].0).fold(f64::INFINITY, f64::min),
            t_direct: c.table.as_ref().map(|_| samples.iter().filter_map(|rep| rep[i].1).fold(f64::INFINITY, f64::min)),
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

/// Exponent `p` in `t ≈ c N^p log N`.
pub fn fit_exponent_without_log(ns: &[usize], times: &[f64]) -> f64 {
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = ns.iter().zip(times).map(|(&n, t)| t / (n as f64).log2()).collect();
    fit_exponent(&x, &y)
}

/// Run the configured sweep.
pub fn bench(cfg: &RunConfig) -> Result<Vec<BenchRow>> {
    let mut cases = Vec::new();
    for &m in &cfg.bench_m {
        for &n in &cfg.bench_n {
            cases.push(BenchCase::new(cfg, n, m, false)?);
        }
    }
    let m0 = cfg.bench_m.first().copied().unwrap_or(cfg.m);
    for &n in &cfg.bench_direct_n {
        cases.push(BenchCase::new(cfg, n, m0, true)?);
    }
    Ok(time_cases(&cases, cfg.bench_reps))
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("d,N,M,t_fast,t_direct,ratio\n");
    for r in rows {
        let _ = write!(s, "{},{},{},{:.16e},", r.dim, r.n, r.m, r.t_fast);
        match r.t_direct {
            Some(td) => {
                let _ = writeln!(s, "{td:.16e},{:.16e}", td / r.t_fast);
            }
            None => s.push_str(",\n"),
        }
    }
    s
}

/// Scaling summary: the fast exponent per `M`, the time ratio between
/// successive `M`, and the direct-sum exponent.
pub fn bench_summary(cfg: &RunConfig, rows: &[BenchRow]) -> String {
    let mut s = String::new();
    let fast = |m: usize| -> Vec<&BenchRow> { rows.iter().filter(|r| r.m == m && r.t_direct.is_none()).collect() };
    for &m in &cfg.bench_m {
        let sel = fast(m);
        if sel.len() >= 2 {
            let ns: Vec<usize> = sel.iter().map(|r| r.n).collect();
            let ts: Vec<f64> = sel.iter().map(|r| r.t_fast).collect();
            let _ = writeln!(s, "fast exponent (M={m}, log factor removed): {:.3}", fit_exponent_without_log(&ns, &ts));
        }
    }
    for pair in cfg.bench_m.windows(2) {
        for a in fast(pair[0]) {
            if let Some(b) = fast(pair[1]).into_iter().find(|b| b.n == a.n) {
                let _ = writeln!(s, "time ratio M={}->{} at N={}: {:.3}", pair[0], pair[1], a.n, b.t_fast / a.t_fast);
            }
        }
    }
    let direct: Vec<&BenchRow> = rows.iter().filter(|r| r.t_direct.is_some()).collect();
    if direct.len() >= 2 {
        let x: Vec<f64> = direct.iter().map(|r| r.n as f64).collect();
        let y: Vec<f64> = direct.iter().map(|r| r.t_direct.unwrap()).collect();
        let _ = writeln!(s, "direct exponent: {:.3}", fit_exponent(&x, &y));
    }
    s
}

/// `bench`: writes `bench.csv` and prints the scaling summary.
pub fn cmd_bench(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    prepare_out(&cfg.out)?;
    let rows = bench(cfg)?;
    let csv = bench_csv(&rows);
    write_file(&cfg.out.join("bench.csv"), csv.as_bytes())?;
    out.write_all(csv.as_bytes())?;
    out.write_all(bench_summary(cfg, &rows).as_bytes())?;
    Ok(())
}

/// `kernel-dump`: writes `decomposition.csbd`.
pub fn cmd_kernel_dump(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    prepare_out(&cfg.out)?;
    let config = cfg.domain()?;
    let dec = decompose(&config, &cfg.kernel_model()?, cfg.m, cfg.options())?;
    let mut bytes = Vec::new();
    write_decomposition(&mut bytes, &dec)?;
    let path = cfg.out.join("decomposition.csbd");
    write_file(&path, &bytes)?;
    writeln!(out, "wrote {} ({} terms, {} bytes)", path.display(), dec.terms(), bytes.len())?;
    Ok(())
}
