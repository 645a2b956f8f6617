//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! stderr and then asserts it. A mutex keeps them from sharing the CPU, which
//! matters for the timing checks.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use fastcoll::decomposition::BetaOracle2d;
use fastcoll::solver::Snapshot;
use fastcoll::{
    build_direct_table, decompose, decompose_2d, eval_direct, eval_fast, integrate, moments, moments_to_maxwellian,
    phi2_closed, phi3_closed, psi3_quad, rel_l1_error, verify_bkw_residual, BkwReference, Decomposition,
    DecompositionOptions, DomainConfig, FourierField, IntegratorConfig, KernelModel, Mode, MomentSet, RadialFactor,
    RadialTransform, Scheme,
};
use fastcoll_cli::commands::{fit_exponent, fit_exponent_without_log, random_hermitian, sample_cases, time_cases, BenchCase};
use fastcoll_cli::RunConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: u32, title: &str, ok: bool, detail: &str) {
    let line = format!("{} criterion {id} ({title}): {detail}\n", if ok { "PASS" } else { "FAIL" });
    // Written to the raw handle so the line survives output capture.
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(ok, "{line}");
}

fn full_config(dim: usize, n: usize) -> DomainConfig {
    DomainConfig::new(dim, n, DomainConfig::max_support()).unwrap()
}

fn rel_diff(a: &FourierField, b: &FourierField) -> f64 {
    let diff = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    diff / b.sup_norm()
}

fn maxwellian(config: &DomainConfig, temperature: f64) -> FourierField {
    let dim = config.dim();
    let ms = MomentSet {
        dim,
        mass: 1.0,
        momentum: [0.0; 3],
        energy: dim as f64 * temperature,
        temperature,
        entropy: 0.0,
    };
    moments_to_maxwellian(&ms, config).unwrap()
}

#[test]
fn criterion_1_fast_path_equals_direct_sum() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst2: f64 = 0.0;
    let kernel = KernelModel::maxwell2d();
    for trial in 0..20 {
        let n = if trial < 8 { trial + 1 } else { rng.gen_range(1..=8) };
        let c = full_config(2, n);
        let dec = decompose(&c, &kernel, 8, DecompositionOptions::default()).unwrap();
        let table = build_direct_table(&dec).unwrap();
        let f = random_hermitian(&c, &mut rng);
        worst2 = worst2.max(rel_diff(&eval_fast(&f, &dec).unwrap(), &eval_direct(&f, &table).unwrap()));
    }
    let c3 = full_config(3, 4);
    let dec3 = decompose(&c3, &KernelModel::hard_sphere3d(), 4, DecompositionOptions::default()).unwrap();
    let table3 = build_direct_table(&dec3).unwrap();
    let mut worst3: f64 = 0.0;
    for _ in 0..5 {
        let f = random_hermitian(&c3, &mut rng);
        worst3 = worst3.max(rel_diff(&eval_fast(&f, &dec3).unwrap(), &eval_direct(&f, &table3).unwrap()));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "fast = direct",
        worst2 <= 1e-12 && worst3 <= 1e-11 && secs < 30.0,
        &format!("d=2 rel {worst2:.2e} (<= 1e-12), d=3 rel {worst3:.2e} (<= 1e-11), {secs:.1} s (< 30 s)"),
    );
}

fn oracle_key(l: &Mode, m: &Mode) -> (i64, i64, i64) {
    (l[0] * l[0] + l[1] * l[1], m[0] * m[0] + m[1] * m[1], (l[0] * m[0] + l[1] * m[1]).abs())
}

/// Largest deviation of the `M = 64` modes from the oracle over `|l|∞, |m|∞ ≤ 8`.
fn decomposition_vs_oracle(kernel: &KernelModel) -> f64 {
    let c = full_config(2, 8);
    let dec = decompose_2d(&c, kernel, 64, DecompositionOptions::default()).unwrap();
    let oracle = BetaOracle2d::new(&c, kernel).unwrap();
    let modes: Vec<Mode> = c.lattice().modes().collect();
    // β depends on the pair only through |l|², |m|² and |l·m|.
    let mut cache = HashMap::new();
    let mut worst: f64 = 0.0;
    for l in &modes {
        for m in &modes {
            let want = *cache.entry(oracle_key(l, m)).or_insert_with(|| oracle.beta(l, m, 1e-12).unwrap());
            worst = worst.max((dec.reconstruct_beta(l, m).unwrap() - want).abs());
        }
    }
    worst
}

#[test]
fn criterion_2_decomposition_matches_quadrature_oracle() {
    let _g = serial();
    let start = Instant::now();
    // B̃ ≡ 1.
    let unit = decomposition_vs_oracle(&KernelModel::Maxwell2D { constant: 0.5 });
    let vhs = decomposition_vs_oracle(&KernelModel::vhs(2, 0.5, 1.0 / (2.0 * PI)).unwrap());
    let secs = start.elapsed().as_secs_f64();
    verdict(
        2,
        "decomposition vs oracle",
        unit <= 1e-10 && vhs <= 1e-10 && secs < 60.0,
        &format!("unit kernel {unit:.2e}, VHS 0.5 {vhs:.2e} (<= 1e-10), {secs:.1} s (< 60 s)"),
    );
}

fn bkw_setup(n: usize, m: usize) -> (BkwReference, Decomposition) {
    let c = full_config(2, n);
    let k = KernelModel::maxwell2d();
    let dec = decompose_2d(&c, &k, m, DecompositionOptions::default()).unwrap();
    (BkwReference::new(&c, &k).unwrap(), dec)
}

#[test]
fn criterion_3_conservation() {
    let _g = serial();
    let (reference, dec) = bkw_setup(32, 8);
    let f0 = reference.field(0.0).unwrap();
    let q = eval_fast(&f0, &dec).unwrap();
    let q0 = q.get(&[0, 0, 0]).unwrap().norm() / q.sup_norm();
    let icfg = IntegratorConfig { scheme: Scheme::Rk4, dt: 0.01, t_end: 1.0, stride: 10 };
    let mut history = Vec::new();
    integrate(&f0, &dec, &icfg, |s: Snapshot<'_>| {
        history.push(moments(s.field));
        Ok(())
    })
    .unwrap();
    let mass0 = history[0].mass;
    let mass = history.iter().map(|ms| (ms.mass - mass0).abs() / mass0).fold(0.0, f64::max);
    let momentum = history.iter().flat_map(|ms| ms.momentum[..2].to_vec()).map(f64::abs).fold(0.0, f64::max);
    verdict(
        3,
        "conservation",
        q0 <= 1e-13 && mass <= 1e-12 && momentum <= 1e-12,
        &format!("|Q_0|/|Q| {q0:.2e}, mass drift {mass:.2e} (<= 1e-12), momentum {momentum:.2e} (<= 1e-12)"),
    );
}

const GATE_TIMES: [f64; 3] = [0.5, 1.0, 5.0];

/// The residual gate shared by criteria 4 and 5.
fn bkw_gate() -> Result<Vec<f64>, String> {
    let c = full_config(2, 64);
    GATE_TIMES.iter().map(|&t| verify_bkw_residual(&c, t).map_err(|e| format!("t={t}: {e}"))).collect()
}

fn bkw_error_at(n: usize, m: usize) -> f64 {
    let (reference, dec) = bkw_setup(n, m);
    let icfg = IntegratorConfig { scheme: Scheme::Rk4, dt: 1e-3, t_end: 0.01, stride: 10 };
    let f = integrate(&reference.field(0.0).unwrap(), &dec, &icfg, |_| Ok(())).unwrap();
    rel_l1_error(&f, &reference.sample(0.01)).unwrap()
}

#[test]
fn criterion_4_bkw_error_trends() {
    let _g = serial();
    let start = Instant::now();
    if let Err(e) = bkw_gate() {
        verdict(4, "BKW error trends", false, &format!("reference gate failed first: {e}"));
    }
    let e16 = bkw_error_at(16, 8);
    let e32 = bkw_error_at(32, 8);
    let e64 = bkw_error_at(64, 8);
    let e64m4 = bkw_error_at(64, 4);
    let e64m16 = bkw_error_at(64, 16);
    let secs = start.elapsed().as_secs_f64();
    let spread = e64m4.max(e64m16) / e64m4.min(e64m16);
    verdict(
        4,
        "BKW error trends",
        e32 <= 1e-4 && e16 / e64 >= 1e3 && spread <= 2.0 && secs < 300.0,
        &format!(
            "L1 at M=8: N=16 {e16:.3e}, N=32 {e32:.3e} (<= 1e-4), N=64 {e64:.3e}, drop {:.1e} (>= 1e3); \
             N=64: M=4 {e64m4:.3e}, M=16 {e64m16:.3e}, ratio {spread:.3} (<= 2); {secs:.0} s (< 300 s)",
            e16 / e64
        ),
    );
}

#[test]
fn criterion_5_bkw_residual_gate() {
    let _g = serial();
    let gate = bkw_gate();
    let ratios: Vec<f64> = GATE_TIMES
        .iter()
        .map(|&t| {
            let r16 = { let (r, d) = bkw_setup(16, 64); r.residual(&d, t).unwrap() };
            let r32 = { let (r, d) = bkw_setup(32, 64); r.residual(&d, t).unwrap() };
            r16 / r32
        })
        .collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let detail = match &gate {
        Ok(r) => format!("N=64 residuals {:.2e} {:.2e} {:.2e} (< 1e-6)", r[0], r[1], r[2]),
        Err(e) => format!("gate failed: {e}"),
    };
    verdict(
        5,
        "BKW residual gate",
        gate.is_ok() && min_ratio > 10.0,
        &format!("{detail}; smallest N=16/N=32 residual ratio {min_ratio:.1e} (> 10)"),
    );
}

#[test]
fn criterion_6_closed_forms() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let radius = rng.gen_range(0.5..3.0);
        let s = rng.gen_range(-50.0..50.0);
        let t2 = RadialTransform::new(2, radius, 64, 0.0).unwrap();
        let t3 = RadialTransform::new(3, radius, 64, 1.0).unwrap();
        worst = worst
            .max((phi2_closed(radius, s) - t2.phi_radial_quad(|_| 1.0, s)).abs())
            .max((phi3_closed(radius, s) - t3.phi_radial_quad(|_| 1.0, s)).abs());
    }
    let radius = DomainConfig::max_support() * 2.0;
    let t = RadialTransform::new(3, radius, 64, 1.0).unwrap();
    let psi = (psi3_quad(&t, &RadialFactor::constant(1.0), 0.0) - PI * radius * radius).abs();
    verdict(
        6,
        "closed forms",
        worst <= 1e-12 && psi <= 1e-12,
        &format!("phi sweep {worst:.2e}, psi(0) - pi R^2 {psi:.2e} (<= 1e-12)"),
    );
}

#[test]
fn criterion_7_three_dimensional_equilibrium() {
    let _g = serial();
    let start = Instant::now();
    let kernel = KernelModel::hard_sphere3d();
    let q = |n: usize| {
        let c = full_config(3, n);
        let dec = decompose(&c, &kernel, 4, DecompositionOptions::default()).unwrap();
        eval_fast(&maxwellian(&c, 0.1), &dec).unwrap().sup_norm()
    };
    let (q8, q16) = (q(8), q(16));
    let secs = start.elapsed().as_secs_f64();
    verdict(
        7,
        "3D equilibrium",
        q8 / q16 >= 100.0 && secs < 120.0,
        &format!("|Q| N=8 {q8:.2e}, N=16 {q16:.2e}, ratio {:.1e} (>= 100), {secs:.1} s (< 120 s)", q8 / q16),
    );
}

#[test]
fn criterion_8_complexity() {
    let _g = serial();
    let start = Instant::now();
    let cfg = RunConfig::default();
    let reps = 9;
    let ns = [16, 32, 64, 128];
    let cases: Vec<BenchCase> = ns.iter().map(|&n| BenchCase::new(&cfg, n, 8, false).unwrap()).collect();
    let fast: Vec<f64> = time_cases(&cases, reps).iter().map(|r| r.t_fast).collect();
    let fast_exp = fit_exponent_without_log(&ns, &fast);
    drop(cases);
    let pair = [BenchCase::new(&cfg, 64, 16, false).unwrap(), BenchCase::new(&cfg, 64, 32, false).unwrap()];
    // Median of back-to-back ratios: both cases of a pair see the same load.
    let mut ratios: Vec<f64> = sample_cases(&pair, reps).iter().map(|rep| rep[1].0 / rep[0].0).collect();
    ratios.sort_by(f64::total_cmp);
    let m_ratio = ratios[ratios.len() / 2];
    let direct_n = [4usize, 6, 8, 12];
    let cases: Vec<BenchCase> = direct_n.iter().map(|&n| BenchCase::new(&cfg, n, 8, true).unwrap()).collect();
    let direct: Vec<f64> = time_cases(&cases, reps).iter().map(|r| r.t_direct.unwrap()).collect();
    let x: Vec<f64> = direct_n.iter().map(|&n| n as f64).collect();
    let direct_exp = fit_exponent(&x, &direct);
    let secs = start.elapsed().as_secs_f64();
    // A ratio of 16 ± 30% per doubling of N is an exponent in [log2 11.2, log2 20.8].
    let direct_band = (11.2f64.log2(), 20.8f64.log2());
    verdict(
        8,
        "complexity",
        (1.8..=2.4).contains(&fast_exp)
            && (1.5..=2.5).contains(&m_ratio)
            && (direct_band.0..=direct_band.1).contains(&direct_exp)
            && secs < 300.0,
        &format!(
            "fast exponent {fast_exp:.2} ([1.8, 2.4]), M 16->32 at N=64 ratio {m_ratio:.2} ([1.5, 2.5]), \
             direct exponent {direct_exp:.2} ([{:.2}, {:.2}]), {secs:.0} s (< 300 s)",
            direct_band.0, direct_band.1
        ),
    );
}

fn run_evolve(dir: &Path, config: &Path, threads: usize) -> (Vec<u8>, Vec<u8>) {
    let out = dir.join(format!("threads{threads}"));
    let status = Command::new(env!("CARGO_BIN_EXE_fastcoll"))
        .args(["evolve", "--config"])
        .arg(config)
        .args(["--threads", &threads.to_string(), "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    (fs::read(out.join("diagnostics.csv")).unwrap(), fs::read(out.join("final.csbf")).unwrap())
}

#[test]
fn criterion_9_thread_count_does_not_change_output() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    fs::write(&config, "n = 32\nm = 8\ndt = 1e-3\nt_end = 0.01\n").unwrap();
    let (csv1, field1) = run_evolve(dir.path(), &config, 1);
    let (csv8, field8) = run_evolve(dir.path(), &config, 8);
    verdict(
        9,
        "determinism",
        csv1 == csv8 && field1 == field8,
        &format!(
            "diagnostics.csv {} bytes identical: {}, final.csbf identical: {}",
            csv1.len(),
            csv1 == csv8,
            field1 == field8
        ),
    );
}
