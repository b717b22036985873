//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance [-- 3 5]` runs all criteria or the listed
//! ones. Artifacts land in `$ITWLAB_OUT/acceptance`, else under the cargo
//! test scratch directory. The process exits non-zero only on internal
//! errors, or on any FAIL when `ITWLAB_ACCEPTANCE_STRICT` is set.

use std::collections::HashMap;
use std::f64::consts::{E, PI};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use itwlab::averaging::{compute_averaged, AveragedField, TimeRule};
use itwlab::experiment::{run_experiment, ExperimentConfig, RunOutcome, OUT_ENV};
use itwlab::fbm::{sample_lattice, FbmGenerator, FbmPath, LatticeConfig};
use itwlab::field::{FieldSpec, MomentRoute};
use itwlab::rng::aux_rng;
use itwlab::space::{holder_two_param_norm, log_spaced, smoothing_check, GridField, SpaceGrid};
use itwlab::verifier::{integrand_weights, LevelCache, ReadingResolution, T1Reading, VerifierPath, DECAY_SLOPE};
use itwlab::young::{partition_independence, solve_yode, young_integral, SewingConstants, SolverOptions};
use serde_json::Value;

type Res<T> = std::result::Result<T, Box<dyn std::error::Error>>;

struct Check {
    passed: bool,
    detail: String,
}

impl Check {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

struct Suite {
    root: PathBuf,
    runs: HashMap<String, (RunOutcome, Value)>,
}

impl Suite {
    fn config(name: &str) -> Res<ExperimentConfig> {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"));
        Ok(ExperimentConfig::from_path(&path)?)
    }

    /// Runs a shipped config once and keeps its parsed result.
    fn run(&mut self, name: &str) -> Res<&(RunOutcome, Value)> {
        if !self.runs.contains_key(name) {
            let mut cfg = Self::config(name)?;
            cfg.output = Some(self.root.join(name));
            let out = self.run_config(&cfg)?;
            self.runs.insert(name.to_string(), out);
        }
        Ok(&self.runs[name])
    }

    fn run_config(&self, cfg: &ExperimentConfig) -> Res<(RunOutcome, Value)> {
        let t = Instant::now();
        let o = run_experiment(cfg)?;
        eprintln!("  ran {} in {:.1?}: {}", o.output.display(), t.elapsed(), o.summary);
        let result = serde_json::from_str(&std::fs::read_to_string(o.output.join("result.json"))?)?;
        Ok((o, result))
    }
}

fn num(v: &Value, pointer: &str) -> Res<f64> {
    v.pointer(pointer)
        .and_then(Value::as_f64)
        .ok_or_else(|| format!("missing number at {pointer}").into())
}

fn finest(result: &Value) -> Res<&Value> {
    result
        .pointer("/report/levels")
        .and_then(Value::as_array)
        .and_then(|l| l.last())
        .ok_or_else(|| "report has no levels".into())
}

/// `c_H = int_0^inf ((1+s)^a - s^a)^2 ds + 1/(2H)`, `a = H - 1/2`, by
/// Simpson's rule in `u = ln s`.
fn variance_constant_quadrature(h: f64) -> f64 {
    let a = h - 0.5;
    let g = |u: f64| {
        let s = u.exp();
        let d = if s > 1.0 {
            s.powf(a) * (a * (1.0 / s).ln_1p()).exp_m1()
        } else {
            (1.0 + s).powf(a) - s.powf(a)
        };
        d * d * s
    };
    let (lo, hi, n) = (-80.0, 80.0, 320_000);
    let w = (hi - lo) / n as f64;
    let mut sum = g(lo) + g(hi);
    for k in 1..n {
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * g(lo + k as f64 * w);
    }
    sum * w / 3.0 + 1.0 / (2.0 * h)
}

fn criterion_1(s: &mut Suite) -> Res<Check> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, h) in [("fbm_h03", 0.3), ("fbm_h07", 0.7)] {
        let c_h = variance_constant_quadrature(h);
        let (_, r) = s.run(name)?;
        let est = num(r, "/components/0/variance/estimate")?;
        let se = num(r, "/components/0/variance/standard_error")?;
        let w1 = num(r, "/components/0/w1_variance/estimate")?;
        let w1_se = num(r, "/components/0/w1_variance/standard_error")?;
        let z = (est - c_h) / se;
        let z1 = (w1 - 1.0 / (2.0 * h)) / w1_se;
        let library = num(r, "/variance_constant")?;
        ok &= z.abs() <= 3.0 && z1.abs() <= 3.0 && (library - c_h).abs() < 1e-9 * c_h;
        parts.push(format!(
            "H={h}: Var W(1) {est:.4} vs c_H {c_h:.4} (z {z:+.2}), Var W1(0,1) {w1:.4} vs {:.4} (z {z1:+.2})",
            1.0 / (2.0 * h)
        ));
    }
    Ok(Check::new(ok, parts.join("; ")))
}

fn criterion_2(s: &mut Suite) -> Res<Check> {
    let mut worst = 0.0f64;
    let mut paths = usize::MAX;
    for name in ["fbm_h03", "fbm_h07"] {
        let (_, r) = s.run(name)?;
        worst = worst.max(num(r, "/decomposition/max_error")?);
        paths = paths.min(num(r, "/decomposition/paths")? as usize);
    }
    Ok(Check::new(
        worst < 1e-12 && paths >= 1000,
        format!("max |W1 + W2 - W| = {worst:.2e} over {paths} paths per H, all grid pairs"),
    ))
}

fn criterion_3(_: &mut Suite) -> Res<Check> {
    let (m, len) = (1024, 2.0 * PI);
    let (sigma, tau) = (0.3, 0.1);
    let bump = GridField::from_fn(1, m, len, -PI, |y| (-y[0] * y[0] / (2.0 * sigma * sigma)).exp())?;
    let heated = bump.heat_apply(tau)?;
    let v = sigma * sigma + tau;
    let exact: Vec<f64> = bump
        .coordinates()
        .iter()
        .map(|x| sigma / v.sqrt() * (-x * x / (2.0 * v)).exp())
        .collect();
    let sup = exact.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let analytic = heated.values().iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / sup;

    let twice = bump.heat_apply(0.03)?.heat_apply(0.07)?;
    let composition = twice
        .values()
        .iter()
        .zip(heated.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / sup;

    let narrow = GridField::from_fn(1, m, len, -PI, |y| (-y[0] * y[0] / (2.0 * 0.01f64.powi(2))).exp())?;
    let fit = smoothing_check(&narrow, 1.0, 1.0, 2.0, &log_spaced(1e-6, 1.0, 8))?;
    let ok = analytic < 1e-6 && composition < 1e-10 && (fit.slope + 0.5).abs() <= 0.1 && fit.constant.is_finite();
    Ok(Check::new(
        ok,
        format!(
            "bump vs analytic {analytic:.2e}, composition {composition:.2e}, narrow-bump smoothing slope {:.3} (constant {:.3})",
            fit.slope, fit.constant
        ),
    ))
}

fn criterion_4(s: &mut Suite) -> Res<Check> {
    let (_, r) = s.run("clark_ocone_b2")?;
    let n = num(r, "/report/config/n_paths")?;
    let levels = r.pointer("/report/levels").and_then(Value::as_array).ok_or("no levels")?;
    let mut ok = true;
    let mut gap = 0.0f64;
    let mut rms_parts = Vec::new();
    // E[(sum dB^2 - 1)^2] = 2 step; the RMS estimate has relative SE near 1/sqrt(2n)
    for l in levels {
        let step = num(l, "/step")?;
        let rms = num(l, "/residual_rms")?;
        let oracle = (2.0 * step).sqrt();
        let rel = (rms / oracle - 1.0).abs();
        ok &= rel <= 3.0 / (2.0 * n).sqrt();
        gap = gap.max(num(l, "/quadratic_variation_gap")?);
        rms_parts.push(format!("{rms:.4}/{oracle:.4}"));
    }
    let order = num(r, "/report/order/slope")?;
    ok &= gap < 1e-12 && (order - 0.5).abs() <= 0.1 && levels.len() >= 3;
    Ok(Check::new(
        ok,
        format!(
            "F = B(1)^2: |residual - (sum dB^2 - 1)| <= {gap:.1e}, order {order:.3}, RMS vs sqrt(2 dt) {}",
            rms_parts.join(" ")
        ),
    ))
}

fn criterion_5(s: &mut Suite) -> Res<Check> {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["itw_sin_h03", "itw_sin_h07"] {
        let (_, r) = s.run(name)?;
        let rel = num(finest(r)?, "/relative_rms")?;
        let slope = num(r, "/report/decay/slope")?;
        let probes = r.pointer("/report/config/probes").and_then(Value::as_array).map_or(0, Vec::len);
        ok &= rel < 0.02 && slope > 0.0 && probes == 2;
        parts.push(format!("{name}: relative RMS {rel:.2e}, decay slope {slope:.2}"));
    }
    let (_, r) = s.run("itw_linear")?;
    let levels = r.pointer("/report/levels").and_then(Value::as_array).ok_or("no levels")?;
    let worst = levels
        .iter()
        .map(|l| num(l, "/residual_rms"))
        .collect::<Res<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    ok &= worst < 1e-8;
    parts.push(format!("linear field residual RMS {worst:.1e}"));
    Ok(Check::new(ok, parts.join("; ")))
}

fn variance(stats: &Value) -> Res<f64> {
    let count = num(stats, "/count")?;
    Ok(if count > 1.0 { num(stats, "/m2")? / (count - 1.0) } else { 0.0 })
}

fn criterion_6(s: &mut Suite) -> Res<Check> {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["itw_product_h03", "itw_product_h07"] {
        let (_, r) = s.run(name)?;
        let fine = finest(r)?;
        let rel = num(fine, "/relative_rms")?;
        let mut live = Vec::new();
        for t in ["t1", "t2", "t3", "t4", "t1_literal"] {
            let st = fine.pointer(&format!("/terms/{t}")).ok_or("no term stats")?;
            let nonzero = variance(st)? > 0.0 || num(st, "/mean")? != 0.0;
            if t != "t1_literal" {
                ok &= nonzero;
            }
            live.push(format!("{t} {}", if nonzero { "live" } else { "zero" }));
        }
        ok &= rel < 0.05;
        parts.push(format!("{name}: relative RMS {rel:.2e}, {}", live.join(", ")));
    }

    // Malliavin support of B(0.5 ^ t) is the cell range below the anchor.
    let cfg = Suite::config("itw_product_h03")?;
    let f = FieldSpec::from_id("product:cos:tau=0.5:k=1", 1)?;
    let step = cfg.grid.steps.last().copied().unwrap_or(cfg.grid.step);
    let lattice = LatticeConfig::new(1, step, cfg.grid.left, cfg.grid.horizon)?;
    let cache = LevelCache::new(&f, cfg.hurst(), &lattice)?;
    let anchor = (0.5 / step).round() as usize;
    let mut support_ok = true;
    for p in 0..2 {
        let path = VerifierPath::new(sample_lattice(&lattice, cfg.seed, p)?, &cache)?;
        for c in 0..lattice.n_right() {
            let w = integrand_weights(&f, &path, &cache, 1.0, &[0.7], c, MomentRoute::Analytic)?;
            support_ok &= (c >= anchor) == (w[0].1 == 0.0);
        }
    }
    ok &= support_ok;
    parts.push(format!(
        "T4 integrand zero exactly from cell {anchor} (tau = 0.5) on: {}",
        if support_ok { "yes" } else { "no" }
    ));
    Ok(Check::new(ok, parts.join("; ")))
}

fn criterion_7(s: &mut Suite) -> Res<Check> {
    let root = s.root.clone();
    let (_, r) = s.run("itw_sin_h03")?;
    let res: ReadingResolution = serde_json::from_value(r["resolution"].clone())?;
    let archive = root.join("reading_resolution.json");
    std::fs::write(&archive, serde_json::to_string_pretty(&res)?)?;
    let w2 = res.w2_slope.unwrap_or(f64::NAN);
    let lit = res.literal_slope.unwrap_or(f64::NAN);
    let ok = res.chosen == Some(T1Reading::W2) && w2 > DECAY_SLOPE && lit.abs() < DECAY_SLOPE && archive.exists();
    Ok(Check::new(
        ok,
        format!(
            "w2 reading slope {w2:.2}, literal reading slope {lit:.2} (plateau at {:.2e}); archived {}",
            res.literal_curve.last().map_or(f64::NAN, |c| c.1),
            archive.display()
        ),
    ))
}

fn fbm(hurst: f64, step: f64, seed: u64) -> Res<FbmPath> {
    let cfg = LatticeConfig::with_default_left(1, step, 1.0)?;
    let lat = sample_lattice(&cfg, seed, 0)?;
    Ok(FbmGenerator::full_grid(&cfg, hurst)?.generate(&lat)?)
}

fn criterion_8(s: &mut Suite) -> Res<Check> {
    let n = 1usize << 12;
    let times = (0..=n).map(|i| i as f64 / n as f64).collect();
    let linear = AveragedField::from_fn(times, SpaceGrid::window(-1.0, 4.0, 101), |t, x| t * x)?;
    let sol = solve_yode(&linear, 1.0, &SolverOptions::default())?;
    let e_err = (sol.values.last().copied().unwrap_or(f64::NAN) - E).abs();

    let (_, r) = s.run("euler_crosscheck")?;
    let sup = num(r, "/sup_difference")?;

    let path = fbm(0.25, 1.0 / 4096.0, 3)?;
    let b = FieldSpec::from_id("fourier:K=32:decay=0:seed=2", 1)?;
    let grid = SpaceGrid::periodic(128, 2.0 * PI);
    let a = compute_averaged(&b, &path, &grid, 1, TimeRule::Trapezoid)?;
    let y = |r: f64| 0.5 * (3.0 * r).sin();
    let tol = 1e-3;
    let m = a.n_times() - 1;
    let whole = young_integral(&a, y, 0, m, tol)?.value;
    let split = young_integral(&a, y, 0, m / 2, tol)?.value + young_integral(&a, y, m / 2, m, tol)?.value;
    let additivity = (whole - split).abs();

    let path = fbm(0.25, 1.0 / 2048.0, 8)?;
    let b = FieldSpec::from_id("fourier:K=32:decay=0:seed=5", 1)?;
    let a = compute_averaged(&b, &path, &grid, 1, TimeRule::Trapezoid)?;
    let constants = SewingConstants {
        beta: 0.5,
        gamma: 1.0,
        rho: 1.0,
        a_norm: holder_two_param_norm(&a, 0.5, 1.0).value,
        y_seminorm: 1.5,
    };
    let mut rng = aux_rng(4, 1);
    let mut envelope_ok = true;
    let mut worst_ratio = 0.0f64;
    for mesh in [8, 32, 128] {
        let c = partition_independence(&a, y, 0, 2048, mesh, &constants, &mut rng)?;
        envelope_ok &= c.holds;
        worst_ratio = worst_ratio.max(c.difference / c.envelope);
    }
    let ok = e_err < 1e-3 && sup < 1e-3 && additivity <= 2.0 * tol && envelope_ok;
    Ok(Check::new(
        ok,
        format!(
            "|Y(1) - e| {e_err:.1e}, Euler sup-difference {sup:.1e}, additivity gap {additivity:.1e} (2 tol {:.0e}), partition difference / envelope <= {worst_ratio:.2e}",
            2.0 * tol
        ),
    ))
}

fn criterion_9(s: &mut Suite) -> Res<Check> {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["scan_peano", "scan_white_noise"] {
        let (_, r) = s.run(name)?;
        let slope = num(r, "/report/fit/slope")?;
        let ell = num(r, "/report/ell")?;
        let paths = num(r, "/report/n_paths")?;
        let bound = 0.5 + 1.0 / ell - 0.1;
        ok &= slope > bound && paths >= 1000.0;
        parts.push(format!(
            "{name}: slope {slope:.3} (CI {:.3}..{:.3}) vs {bound:.3}",
            num(r, "/report/slope_ci/0")?,
            num(r, "/report/slope_ci/1")?
        ));
    }
    let (_, r) = s.run("roughness_stress")?;
    let noise = num(r, "/report/noise_ratio")?;
    let control = num(r, "/report/control_ratio")?;
    ok &= noise < 2.0 && control > 4.0;
    parts.push(format!("stress K 32->256: noise ratio {noise:.2}, control ratio {control:.2}"));
    Ok(Check::new(ok, parts.join("; ")))
}

fn same_files(a: &RunOutcome, b: &RunOutcome) -> Res<Vec<String>> {
    let mut differing = Vec::new();
    if a.files != b.files {
        differing.push("file list".to_string());
    }
    for f in a.files.iter().filter(|f| *f != "run_metadata.json") {
        if std::fs::read(a.output.join(f))? != std::fs::read(b.output.join(f))? {
            differing.push(f.clone());
        }
    }
    Ok(differing)
}

fn criterion_10(s: &mut Suite) -> Res<Check> {
    let mut differing = Vec::new();
    let mut compared = Vec::new();
    for name in ["clark_ocone_b2", "euler_crosscheck", "scan_peano"] {
        let base = s.run(name)?.0.clone();
        let mut cfg = Suite::config(name)?;
        cfg.workers = if cfg.workers == 1 { 4 } else { 1 };
        cfg.output = Some(s.root.join(format!("{name}-w{}", cfg.workers)));
        let (rerun, _) = s.run_config(&cfg)?;
        differing.extend(same_files(&base, &rerun)?.into_iter().map(|f| format!("{name}/{f}")));
        compared.push(format!("{name} ({} files)", base.files.len() - 1));
    }
    let mut cfg = Suite::config("itw_product_h07")?;
    cfg.n_paths = 200;
    let mut outs = Vec::new();
    for workers in [1, 4] {
        cfg.workers = workers;
        cfg.output = Some(s.root.join(format!("itw_product_h07-short-w{workers}")));
        outs.push(s.run_config(&cfg)?.0);
    }
    differing.extend(same_files(&outs[0], &outs[1])?.into_iter().map(|f| format!("itw_product_h07/{f}")));
    compared.push("itw_product_h07 at 200 paths".into());
    Ok(Check::new(
        differing.is_empty(),
        if differing.is_empty() {
            format!("byte-identical across worker counts: {}", compared.join(", "))
        } else {
            format!("differs: {}", differing.join(", "))
        },
    ))
}

type Criterion = fn(&mut Suite) -> Res<Check>;

const CRITERIA: [(&str, Criterion); 10] = [
    ("fBm law", criterion_1),
    ("decomposition exactness", criterion_2),
    ("heat semigroup", criterion_3),
    ("Clark-Ocone", criterion_4),
    ("Ito-Tanaka-Wentzell, deterministic field", criterion_5),
    ("Ito-Tanaka-Wentzell, random field", criterion_6),
    ("T1 reading resolution", criterion_7),
    ("Young machinery", criterion_8),
    ("regularization scan and stress", criterion_9),
    ("determinism across worker counts", criterion_10),
];

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let root = std::env::var_os(OUT_ENV)
        .map_or_else(|| PathBuf::from(env!("CARGO_TARGET_TMPDIR")), PathBuf::from)
        .join("acceptance");
    let mut suite = Suite {
        root,
        runs: HashMap::new(),
    };
    let mut failed = 0;
    let mut errored = false;
    let mut summary = Vec::new();
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let (passed, detail) = match run(&mut suite) {
            Ok(c) => (c.passed, c.detail),
            Err(e) => {
                errored = true;
                (false, format!("error: {e}"))
            }
        };
        failed += usize::from(!passed);
        let verdict = if passed { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {id} ({name}): {detail} [{:.1?}]", t.elapsed());
        summary.push(serde_json::json!({ "criterion": id, "name": name, "passed": passed, "detail": detail }));
    }
    if std::fs::create_dir_all(&suite.root).is_ok() {
        let _ = std::fs::write(
            suite.root.join("acceptance.json"),
            serde_json::to_string_pretty(&summary).unwrap_or_default(),
        );
    }
    println!("{failed} of {} criteria failed; artifacts in {}", summary.len(), suite.root.display());
    let strict = std::env::var_os("ITWLAB_ACCEPTANCE_STRICT").is_some();
    if errored || (strict && failed > 0) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
