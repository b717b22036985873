use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind};
use super::plots;
use crate::averaging::{compute_averaged, regularity_moment_scan, roughness_stress_test, ScanConfig, StressConfig};
use crate::error::{Error, Result};
use crate::fbm::{sample_lattice, truncation_variance, variance_constant, FbmGenerator};
use crate::field::FieldSpec;
use crate::stats::variance_with_se;
use crate::verifier::{
    clark_ocone_check, verify_identity, ClarkOconeConfig, ReadingResolution, T1Reading, TermOptions, VerifyConfig,
};
use crate::young::{euler_crosscheck, sde_reconstruct, solve_yode, SolverOptions};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "ITWLAB_OUT";
const DEFAULT_OUT: &str = "itwlab-out";

/// What a finished experiment produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub kind: ExperimentKind,
    pub passed: bool,
    pub output: PathBuf,
    pub files: Vec<String>,
    pub summary: String,
}

struct Artifacts {
    passed: bool,
    result: Value,
    tables: Vec<(&'static str, String)>,
    plots: Vec<(&'static str, String)>,
    summary: String,
}

/// Output directory: the config's `output`, else `$ITWLAB_OUT/<name>`.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    if let Some(p) = &cfg.output {
        return p.clone();
    }
    let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from);
    root.join(cfg.name.clone().unwrap_or_else(|| cfg.kind.name().to_string()))
}

/// Runs one experiment on a pool of `cfg.workers` threads and writes
/// `run_metadata.json`, `result.json`, CSV tables and plot scripts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let out = output_dir(cfg);
    std::fs::create_dir_all(&out)?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config {
            path: "workers".into(),
            message: e.to_string(),
        })?;
    let art = pool.install(|| dispatch(cfg))?;
    let wall = clock.elapsed().as_secs_f64();
    let mut files = vec!["run_metadata.json".to_string(), "result.json".to_string()];
    std::fs::write(out.join("result.json"), serde_json::to_string_pretty(&art.result)? + "\n")?;
    for (name, body) in art.tables.iter().chain(&art.plots) {
        std::fs::write(out.join(name), body)?;
        files.push(name.to_string());
    }
    let meta = json!({
        "kind": cfg.kind.name(),
        "config": cfg,
        "regime": cfg.regime()?,
        "passed": art.passed,
        "summary": art.summary,
        "files": files,
        "versions": {
            "itwlab": env!("CARGO_PKG_VERSION"),
            "report_schema": SCHEMA_VERSION,
        },
        "started_unix": started,
        "wall_time_s": wall,
    });
    std::fs::write(out.join("run_metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(RunOutcome {
        kind: cfg.kind,
        passed: art.passed,
        output: out,
        files,
        summary: art.summary,
    })
}

/// Version of the layout described in `docs/report-schema.json`.
pub const SCHEMA_VERSION: u32 = 1;

fn dispatch(cfg: &ExperimentConfig) -> Result<Artifacts> {
    match cfg.kind {
        ExperimentKind::SimulateFbm => simulate_fbm(cfg),
        ExperimentKind::VerifyItoTanaka => verify(cfg),
        ExperimentKind::ClarkOcone => clark_ocone(cfg),
        ExperimentKind::RegularityScan => scan(cfg),
        ExperimentKind::SolveSde => solve(cfg),
        ExperimentKind::EulerCrosscheck => crosscheck(cfg),
        ExperimentKind::RoughnessStress => stress(cfg),
    }
}

fn field(cfg: &ExperimentConfig) -> Result<FieldSpec> {
    cfg.field_spec()?.ok_or_else(|| Error::Config {
        path: "field".into(),
        message: "missing field".into(),
    })
}

fn sci(v: f64) -> String {
    format!("{v:.17e}")
}

/// Paths kept in the CSV dump.
const PATHS_IN_CSV: usize = 16;
/// Paths entering the decomposition check.
const DECOMPOSITION_PATHS: usize = 1000;

#[derive(Serialize)]
struct MomentCheck {
    estimate: f64,
    standard_error: f64,
    oracle: f64,
    z_score: f64,
    passed: bool,
}

fn moment_check(xs: &[f64], oracle: f64, sigmas: f64) -> MomentCheck {
    let (estimate, se) = variance_with_se(xs);
    let z = (estimate - oracle) / se;
    MomentCheck {
        estimate,
        standard_error: se,
        oracle,
        z_score: z,
        passed: z.abs() <= sigmas,
    }
}

fn simulate_fbm(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let h = cfg.hurst();
    let lattice = cfg.lattice()?;
    let generator = FbmGenerator::full_grid(&lattice, h)?;
    let n = lattice.n_right();
    let horizon = n as f64 * lattice.step;
    let decomposition_paths = cfg.n_paths.min(DECOMPOSITION_PATHS);
    struct PathOut {
        end: Vec<f64>,
        w1: Vec<f64>,
        decomposition: f64,
        values: Option<Vec<f64>>,
    }
    let per_path: Vec<PathOut> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<PathOut> {
            let lat = sample_lattice(&lattice, cfg.seed, p)?;
            let path = generator.generate(&lat)?;
            let w1 = path.w1(0.0, horizon)?;
            let end = (0..path.dims()).map(|j| path.values(j)[n]).collect();
            let mut decomposition = 0.0f64;
            if (p as usize) < decomposition_paths {
                let pairs = path.pair_table();
                let adapted = generator.adapted_table(&lat)?;
                for j in 0..path.dims() {
                    let vals = path.values(j);
                    for i in 0..=n {
                        for c in 0..=i {
                            let e = (pairs.w1(j, c, i) + adapted.w2(j, c, i) - vals[i]).abs();
                            decomposition = decomposition.max(e);
                        }
                    }
                }
            }
            let values = ((p as usize) < PATHS_IN_CSV).then(|| path.values(0).to_vec());
            Ok(PathOut {
                end,
                w1,
                decomposition,
                values,
            })
        })
        .collect::<Result<_>>()?;
    let c_h = variance_constant(h);
    let oracle = c_h * horizon.powf(2.0 * h);
    let truncated = oracle - truncation_variance(h, cfg.grid.left, horizon);
    let w1_oracle = horizon.powf(2.0 * h) / (2.0 * h);
    let sig = cfg.tolerance.sigmas;
    let mut components = Vec::new();
    let mut passed = true;
    for j in 0..cfg.dims {
        let ends: Vec<f64> = per_path.iter().map(|o| o.end[j]).collect();
        let w1s: Vec<f64> = per_path.iter().map(|o| o.w1[j]).collect();
        let var = moment_check(&ends, oracle, sig);
        let var_truncated = moment_check(&ends, truncated, sig);
        let var_w1 = moment_check(&w1s, w1_oracle, sig);
        passed &= var.passed && var_w1.passed;
        components.push(json!({
            "component": j,
            "variance": var,
            "variance_vs_truncated": var_truncated,
            "w1_variance": var_w1,
        }));
    }
    let decomposition = per_path.iter().map(|o| o.decomposition).fold(0.0, f64::max);
    let decomposition_ok = decomposition < cfg.tolerance.decomposition;
    passed &= decomposition_ok;
    let result = json!({
        "kind": "simulate-fbm",
        "hurst": h,
        "n_paths": cfg.n_paths,
        "seed": cfg.seed,
        "lattice": lattice,
        "horizon": horizon,
        "variance_constant": c_h,
        "truncation_variance": oracle - truncated,
        "components": components,
        "decomposition": {
            "max_error": decomposition,
            "paths": decomposition_paths,
            "pairs_per_path": (n + 1) * (n + 2) / 2,
            "tolerance": cfg.tolerance.decomposition,
            "passed": decomposition_ok,
        },
        "passed": passed,
    });
    let mut csv = String::from("t");
    let kept: Vec<&Vec<f64>> = per_path.iter().filter_map(|o| o.values.as_ref()).collect();
    for p in 0..kept.len() {
        let _ = write!(csv, ",path{p}");
    }
    csv.push('\n');
    for i in 0..=n {
        let _ = write!(csv, "{}", i as f64 * lattice.step);
        for v in &kept {
            let _ = write!(csv, ",{}", sci(v[i]));
        }
        csv.push('\n');
    }
    let mut ends = String::from("path,component,w_end,w1\n");
    for (p, o) in per_path.iter().enumerate() {
        for j in 0..cfg.dims {
            let _ = writeln!(ends, "{p},{j},{},{}", sci(o.end[j]), sci(o.w1[j]));
        }
    }
    let summary = format!(
        "Var W(T) z = {:.2}, Var W1 z = {:.2}, decomposition {decomposition:.2e}",
        components[0]["variance"]["z_score"].as_f64().unwrap_or(f64::NAN),
        components[0]["w1_variance"]["z_score"].as_f64().unwrap_or(f64::NAN),
    );
    Ok(Artifacts {
        passed,
        result,
        tables: vec![("paths.csv", csv), ("endpoints.csv", ends)],
        plots: vec![("plot_paths.py", plots::paths())],
        summary,
    })
}

/// Verifier config of an experiment.
pub fn verify_config(cfg: &ExperimentConfig) -> VerifyConfig {
    VerifyConfig {
        hurst: cfg.hurst(),
        dims: cfg.dims,
        n_paths: cfg.n_paths,
        horizon: cfg.grid.horizon,
        left: cfg.grid.left,
        steps: cfg.ladder(),
        probes: cfg.grid.probes.clone(),
        options: TermOptions {
            reading: cfg.reading.fixed().unwrap_or_default(),
            scheme: cfg.scheme,
            route: cfg.route,
        },
        seed: cfg.seed,
        tolerance: cfg.tolerance.relative,
        absolute_tolerance: cfg.tolerance.absolute,
        require_decay: cfg.tolerance.require_decay,
        dump_terms: cfg.dump_terms,
    }
}

fn verify(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let f = field(cfg)?;
    let vc = verify_config(cfg);
    let mut report = verify_identity(&f, &vc)?;
    let resolution = ReadingResolution::from_report(&report);
    let reading = match cfg.reading.fixed() {
        Some(r) => Some(r),
        None => resolution.chosen,
    };
    report.passed = reading.is_some_and(|r| report.passes(r));
    let rows = std::mem::take(&mut report.rows);
    let mut levels = String::from(
        "step,n_steps,lhs_rms,residual_rms,residual_literal_rms,residual_displayed_rms,relative_rms,relative_literal_rms,relative_displayed_rms\n",
    );
    let opt = |v: Option<f64>| v.map_or(String::new(), sci);
    for l in &report.levels {
        let _ = writeln!(
            levels,
            "{},{},{},{},{},{},{},{},{}",
            l.step,
            l.n_steps,
            sci(l.lhs_rms),
            sci(l.residual_rms),
            sci(l.residual_literal_rms),
            sci(l.residual_displayed_rms),
            opt(l.relative_rms),
            opt(l.relative_literal_rms),
            opt(l.relative_displayed_rms)
        );
    }
    let mut tables = vec![("levels.csv", levels)];
    if cfg.dump_terms {
        let mut csv = String::from("path_id,step,t,x,lhs,t1,t1_literal,t2,t3,t4,t4_displayed,milstein,residual\n");
        for r in &rows {
            let t = &r.terms;
            let x: Vec<String> = t.x.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.path,
                r.step,
                t.t,
                x.join(" "),
                sci(t.lhs),
                sci(t.t1),
                sci(t.t1_literal),
                sci(t.t2),
                sci(t.t3),
                sci(t.t4),
                sci(t.t4_displayed),
                sci(t.milstein),
                sci(r.residual)
            );
        }
        tables.push(("terms.csv", csv));
    }
    let fine = report.levels.last().expect("ladder");
    let (rel, abs) = match reading {
        Some(T1Reading::Literal) => (fine.relative_literal_rms, fine.residual_literal_rms),
        _ => (fine.relative_rms, fine.residual_rms),
    };
    let summary = format!(
        "{}: reading {}, finest residual RMS {abs:.3e} (relative {}), {}",
        f.id,
        reading.map_or("none decays".to_string(), |r| format!("{r:?}")),
        rel.map_or("-".into(), |r| format!("{r:.3e}")),
        resolution.evidence
    );
    let result = json!({
        "kind": "verify-ito-tanaka",
        "reading": reading,
        "reading_choice": cfg.reading,
        "resolution": resolution,
        "report": report,
        "passed": report.passed,
    });
    Ok(Artifacts {
        passed: report.passed,
        result,
        tables,
        plots: vec![("plot_residuals.py", plots::residuals())],
        summary,
    })
}

fn clark_ocone(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let functional = cfg.functional()?;
    let r = clark_ocone_check(&ClarkOconeConfig {
        functional,
        t1: cfg.grid.horizon,
        n_paths: cfg.n_paths,
        steps: cfg.ladder(),
        seed: cfg.seed,
    })?;
    let fine = r.levels.last().expect("ladder");
    let small = match fine.relative_rms {
        Some(v) => v < cfg.tolerance.relative,
        None => fine.residual_rms < cfg.tolerance.absolute,
    } || fine.residual_rms < cfg.tolerance.absolute;
    let order_ok = match cfg.tolerance.order {
        Some((want, tol)) => r.order.is_some_and(|o| (o.slope - want).abs() <= tol),
        None => true,
    };
    let qv_ok = fine.quadratic_variation_gap.is_none_or(|g| g < cfg.tolerance.absolute);
    let passed = small && order_ok && qv_ok;
    let mut csv = String::from("step,residual_mean,residual_rms,functional_rms,relative_rms,quadratic_variation_gap\n");
    for l in &r.levels {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            l.step,
            sci(l.residual.mean),
            sci(l.residual_rms),
            sci(l.functional_rms),
            l.relative_rms.map_or(String::new(), sci),
            l.quadratic_variation_gap.map_or(String::new(), sci)
        );
    }
    let summary = format!(
        "{}: finest residual RMS {:.3e}, order {}",
        functional.id(),
        fine.residual_rms,
        r.order.map_or("-".into(), |o| format!("{:.3}", o.slope))
    );
    Ok(Artifacts {
        passed,
        result: json!({
            "kind": "clark-ocone",
            "report": r,
            "checks": { "small": small, "order": order_ok, "quadratic_variation": qv_ok },
            "passed": passed,
        }),
        tables: vec![("levels.csv", csv)],
        plots: vec![("plot_residuals.py", plots::residuals())],
        summary,
    })
}

fn scan(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let f = field(cfg)?;
    let s = &cfg.scan;
    let r = regularity_moment_scan(
        &f,
        &ScanConfig {
            hurst: cfg.hurst(),
            ell: s.ell,
            gamma: s.gamma,
            n_paths: cfg.n_paths,
            lattice: cfg.lattice()?,
            space: cfg.space(&f),
            gaps: s.gaps.clone(),
            windows: s.windows,
            rule: s.rule,
            seed: cfg.seed,
            bootstrap_reps: s.bootstrap_reps,
        },
    )?;
    let passed = r.fit.slope > r.threshold;
    let mut csv = String::from("gap_time,moment\n");
    for (t, m) in r.gap_times.iter().zip(&r.moments) {
        let _ = writeln!(csv, "{t},{}", sci(*m));
    }
    let summary = format!(
        "{}: moment slope {:.3} (CI {:.3}..{:.3}), threshold {:.3}",
        f.id, r.fit.slope, r.slope_ci.0, r.slope_ci.1, r.threshold
    );
    Ok(Artifacts {
        passed,
        result: json!({ "kind": "regularity-scan", "report": r, "passed": passed }),
        tables: vec![("moments.csv", csv)],
        plots: vec![("plot_moments.py", plots::moments())],
        summary,
    })
}

fn solve(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let b = field(cfg)?;
    let lattice = cfg.lattice()?;
    let generator = FbmGenerator::full_grid(&lattice, cfg.hurst())?;
    let space = cfg.space(&b);
    let s = &cfg.solve;
    let opts = SolverOptions {
        stride: s.stride,
        beta: s.beta,
        gamma: s.gamma,
        fit_beta: true,
    };
    let runs: Vec<Result<(Value, Option<String>)>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let path = generator.generate(&sample_lattice(&lattice, cfg.seed, p)?)?;
            let a = compute_averaged(&b, &path, &space, 1, s.rule.with_stream(cfg.seed, p))?;
            let sol = solve_yode(&a, s.y0, &opts)?;
            let csv = (p == 0).then(|| -> Result<String> {
                let mut out = String::from("t,Y,X\n");
                for (t, y, x) in sde_reconstruct(&sol, &path)? {
                    let _ = writeln!(out, "{t},{},{}", sci(y), sci(x));
                }
                Ok(out)
            });
            Ok((
                json!({ "path": p, "final": sol.values.last(), "diagnostics": sol.diagnostics }),
                csv.transpose()?,
            ))
        })
        .collect();
    let mut paths = Vec::new();
    let mut failures = Vec::new();
    let mut tables = Vec::new();
    for (p, r) in runs.into_iter().enumerate() {
        match r {
            Ok((v, csv)) => {
                paths.push(v);
                if let Some(c) = csv {
                    tables.push(("solution.csv", c));
                }
            }
            Err(e) => failures.push(json!({ "path": p, "error": e.to_string() })),
        }
    }
    let passed = failures.is_empty();
    let summary = format!("{}: {} of {} paths solved", b.id, paths.len(), cfg.n_paths);
    Ok(Artifacts {
        passed,
        result: json!({
            "kind": "solve-sde",
            "drift": b.id,
            "hurst": cfg.hurst(),
            "lattice": lattice,
            "space": space,
            "options": opts,
            "paths": paths,
            "failures": failures,
            "passed": passed,
        }),
        tables,
        plots: vec![("plot_solution.py", plots::solution())],
        summary,
    })
}

fn crosscheck(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let b = field(cfg)?;
    let lattice = cfg.lattice()?;
    let generator = FbmGenerator::full_grid(&lattice, cfg.hurst())?;
    let checks = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| euler_crosscheck(&b, &generator.generate(&sample_lattice(&lattice, cfg.seed, p)?)?, cfg.solve.y0))
        .collect::<Result<Vec<_>>>()?;
    let sup = checks.iter().map(|c| c.sup_difference).fold(0.0, f64::max);
    let passed = sup < cfg.tolerance.sup_difference;
    let mut csv = String::from("t,X_young,X_euler\n");
    for (t, a, e) in &checks[0].rows {
        let _ = writeln!(csv, "{t},{},{}", sci(*a), sci(*e));
    }
    let per_path: Vec<f64> = checks.iter().map(|c| c.sup_difference).collect();
    Ok(Artifacts {
        passed,
        result: json!({
            "kind": "euler-crosscheck",
            "drift": b.id,
            "hurst": cfg.hurst(),
            "lattice": lattice,
            "y0": cfg.solve.y0,
            "sup_difference": sup,
            "per_path": per_path,
            "tolerance": cfg.tolerance.sup_difference,
            "passed": passed,
        }),
        tables: vec![("crosscheck.csv", csv)],
        plots: vec![("plot_crosscheck.py", plots::crosscheck())],
        summary: format!("{}: sup |Young - Euler| = {sup:.3e}", b.id),
    })
}

fn stress(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let b = field(cfg)?;
    let s = &cfg.stress;
    let r = roughness_stress_test(
        &b,
        &StressConfig {
            hurst: cfg.hurst(),
            n_paths: cfg.n_paths,
            lattice: cfg.lattice()?,
            cutoffs: s.cutoffs.clone(),
            points: cfg.grid.points,
            rule: s.rule,
            seed: cfg.seed,
            ratio_pair: s.ratio_pair,
        },
    )?;
    let passed = r.noise_ratio < s.noise_max && r.control_ratio > s.control_min;
    let mut csv = String::from("cutoff,noise,noise_trapezoid,control\n");
    for row in &r.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            row.cutoff,
            sci(row.noise),
            sci(row.noise_trapezoid),
            sci(row.control)
        );
    }
    let summary = format!(
        "{}: ratios noise {:.2}, control {:.2} (K {} -> {})",
        b.id, r.noise_ratio, r.control_ratio, s.ratio_pair.0, s.ratio_pair.1
    );
    Ok(Artifacts {
        passed,
        result: json!({
            "kind": "roughness-stress",
            "report": r,
            "noise_max": s.noise_max,
            "control_min": s.control_min,
            "passed": passed,
        }),
        tables: vec![("stress.csv", csv)],
        plots: vec![("plot_stress.py", plots::stress())],
        summary,
    })
}

/// Catalog as an aligned text table.
pub fn catalog_table() -> String {
    let mut out = format!(
        "{:<32} {:<11} {:>4} {:<14} {:>8}  {}\n",
        "id", "kind", "dims", "class", "sobolev", "description"
    );
    for e in crate::field::list_catalog() {
        let class = if e.kind == "functional" {
            "-"
        } else if e.distributional {
            "distributional"
        } else if e.product_form {
            "random"
        } else if e.deterministic {
            "deterministic"
        } else {
            "random"
        };
        let s = match (e.kind, e.sobolev_index) {
            ("functional", _) => "-".to_string(),
            (_, Some(s)) => format!("{s:.3}"),
            (_, None) if e.distributional => "-".to_string(),
            (_, None) => "smooth".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<32} {:<11} {:>4} {:<14} {:>8}  {}",
            e.id, e.kind, e.dims, class, s, e.description
        );
    }
    out
}
