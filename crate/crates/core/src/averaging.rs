//! The averaging operator `A_u(x) = int_0^u b(s, x + W_s) ds` along one
//! path, Monte Carlo moment scans of its space-time regularity, and the
//! roughness stress test.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{sample_lattice, variance_constant, BrownianLattice, FbmGenerator, FbmPath, LatticeConfig};
use crate::field::{FieldSpec, FourierSeries, Spatial, TimeFactor};
use crate::rng::aux_rng;
use crate::space::{c1_gamma_proxy, SpaceGrid};
use crate::stats::{bootstrap_ci, fit_loglog, LineFit};

const TIME_TOL: f64 = 1e-9;
const SUBGRID_SALT: u64 = 0x5ab9_1d00_0000_0000;

/// Time quadrature for `ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TimeRule {
    Trapezoid,
    LeftPoint,
    /// Fourier drifts only: per cell, the endpoint average of `e^{ik W}` is
    /// damped by the mean of the path's sub-cell bridge and a Gaussian
    /// residual with the bridge's variance is added. Keeps high modes from
    /// aliasing through the lattice.
    Subgrid { seed: u64, stream: u64 },
}

/// Selector used in configs; the stream is filled in per path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeRuleKind {
    #[default]
    Trapezoid,
    LeftPoint,
    Subgrid,
}

impl TimeRuleKind {
    pub fn with_stream(self, seed: u64, stream: u64) -> TimeRule {
        match self {
            TimeRuleKind::Trapezoid => TimeRule::Trapezoid,
            TimeRuleKind::LeftPoint => TimeRule::LeftPoint,
            TimeRuleKind::Subgrid => TimeRule::Subgrid { seed, stream },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub drift: String,
    pub hurst: Option<f64>,
    pub seed: Option<u64>,
    pub path_index: Option<u64>,
    pub rule: TimeRule,
}

/// Per-mode accumulators `S_k(u) = int_0^u c(s) e^{i kappa_k W_s} ds`, so
/// that `A_u(x) = Re sum_k c_k S_k(u) e^{i kappa_k x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    pub kappa: Vec<f64>,
    pub coef: Vec<Complex<f64>>,
    /// Row per tabulated time.
    pub sums: Vec<Vec<Complex<f64>>>,
}

impl SpectralTable {
    fn value(&self, i: usize, x: f64) -> f64 {
        self.kappa
            .iter()
            .zip(&self.coef)
            .zip(&self.sums[i])
            .map(|((&k, c), s)| (c * s * Complex::from_polar(1.0, k * x)).re)
            .sum()
    }
}

/// `A` tabulated on a uniform time grid starting at 0 and a 1-d space grid.
#[derive(Debug, Clone)]
pub struct AveragedField {
    pub times: Vec<f64>,
    pub space: SpaceGrid,
    values: Vec<f64>,
    pub spectral: Option<SpectralTable>,
    pub provenance: Provenance,
}

impl AveragedField {
    /// Tabulates a closed-form `A(t, x)`; rows are taken verbatim.
    pub fn from_fn<F: FnMut(f64, f64) -> f64>(times: Vec<f64>, space: SpaceGrid, mut f: F) -> Result<Self> {
        check_uniform(&times)?;
        let xs = space.coordinates();
        let values = times.iter().flat_map(|&t| xs.iter().map(|&x| f(t, x)).collect::<Vec<_>>()).collect();
        Ok(Self {
            times,
            space,
            values,
            spectral: None,
            provenance: Provenance {
                drift: "closed-form".into(),
                hurst: None,
                seed: None,
                path_index: None,
                rule: TimeRule::Trapezoid,
            },
        })
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.space.points;
        &self.values[i * m..(i + 1) * m]
    }

    /// `delta A_{t_i, t_j}` on the space grid.
    pub fn delta(&self, i: usize, j: usize) -> Vec<f64> {
        self.row(j).iter().zip(self.row(i)).map(|(b, a)| b - a).collect()
    }

    pub fn time_index(&self, t: f64) -> Result<usize> {
        let dt = self.dt();
        if dt == 0.0 {
            return if t.abs() <= TIME_TOL { Ok(0) } else { Err(Error::NotOnEvalGrid(t)) };
        }
        let x = (t - self.times[0]) / dt;
        let i = x.round();
        if (x - i).abs() > 1e-6 || i < 0.0 || i as usize >= self.times.len() {
            return Err(Error::NotOnEvalGrid(t));
        }
        Ok(i as usize)
    }

    /// `A_{t_i}(y)`: exact for spectral tables, Catmull-Rom otherwise.
    pub fn eval(&self, i: usize, y: f64) -> Result<f64> {
        if let Some(s) = &self.spectral {
            return Ok(s.value(i, y));
        }
        catmull_rom(self.row(i), &self.space, y)
    }

    /// `delta A_{t_i, t_j}(y)`.
    pub fn delta_at(&self, i: usize, j: usize, y: f64) -> Result<f64> {
        if let Some(s) = &self.spectral {
            return Ok(s.value(j, y) - s.value(i, y));
        }
        let lo = catmull_rom(self.row(i), &self.space, y)?;
        let hi = catmull_rom(self.row(j), &self.space, y)?;
        Ok(hi - lo)
    }

    /// Long-format CSV `t,x,A`.
    pub fn to_csv(&self) -> String {
        let xs = self.space.coordinates();
        let mut out = String::from("t,x,A\n");
        for (i, t) in self.times.iter().enumerate() {
            for (x, a) in xs.iter().zip(self.row(i)) {
                out.push_str(&format!("{t},{x},{a}\n"));
            }
        }
        out
    }
}

fn check_uniform(times: &[f64]) -> Result<()> {
    if times.first().is_none_or(|t| t.abs() > TIME_TOL) {
        return Err(Error::GridMismatch("time grid must start at 0".into()));
    }
    if times.len() > 2 {
        let dt = times[1] - times[0];
        if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
            return Err(Error::GridMismatch("time grid is not uniform".into()));
        }
    }
    Ok(())
}

/// Cubic Catmull-Rom interpolation of grid values. Periodic grids wrap;
/// window grids extrapolate the end cells linearly and reject points
/// outside the window.
pub fn catmull_rom(values: &[f64], grid: &SpaceGrid, y: f64) -> Result<f64> {
    let n = values.len();
    let s = (y - grid.origin) / grid.spacing;
    if !grid.periodic && (s < -1e-9 || s > (n - 1) as f64 + 1e-9) {
        return Err(Error::LeftWindow {
            t: f64::NAN,
            y,
            lo: grid.origin,
            hi: grid.hi(),
        });
    }
    let i0 = s.floor();
    let u = s - i0;
    let i0 = i0 as isize;
    let at = |k: isize| -> f64 {
        if grid.periodic {
            values[k.rem_euclid(n as isize) as usize]
        } else if k < 0 {
            2.0 * values[0] - values[1]
        } else if k >= n as isize {
            2.0 * values[n - 1] - values[n - 2]
        } else {
            values[k as usize]
        }
    };
    let (p0, p1, p2, p3) = (at(i0 - 1), at(i0), at(i0 + 1), at(i0 + 2));
    Ok(p1
        + 0.5
            * u
            * (p2 - p0 + u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + u * (3.0 * (p1 - p2) + p3 - p0))))
}

/// `A` along the path's own evaluation grid, tabulated every `stride`
/// steps.
pub fn compute_averaged(b: &FieldSpec, path: &FbmPath, space: &SpaceGrid, stride: usize, rule: TimeRule) -> Result<AveragedField> {
    if path.dims() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: path.dims(),
        });
    }
    let mut times = vec![0.0];
    let mut w = vec![0.0];
    let (t, v) = (path.times(), path.values(0));
    // the path's grid excludes 0 when it starts later; prepend W_0 = 0
    let skip = usize::from(t.first().is_some_and(|t0| t0.abs() <= TIME_TOL));
    times.extend_from_slice(&t[skip..]);
    w.extend_from_slice(&v[skip..]);
    let mut out = average_along(b, &times, &w, space, stride, rule, Some(path.hurst()))?;
    out.provenance.hurst = Some(path.hurst());
    Ok(out)
}

/// `A` along explicit values `w` of the noise on a uniform grid `times`.
pub fn average_along(
    b: &FieldSpec,
    times: &[f64],
    w: &[f64],
    space: &SpaceGrid,
    stride: usize,
    rule: TimeRule,
    hurst: Option<f64>,
) -> Result<AveragedField> {
    if !b.is_deterministic() {
        return Err(Error::RandomField(b.id.clone()));
    }
    if b.dims != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: b.dims,
        });
    }
    check_uniform(times)?;
    if w.len() != times.len() {
        return Err(Error::GridMismatch(format!("{} times but {} path values", times.len(), w.len())));
    }
    let n = times.len() - 1;
    if stride == 0 || n % stride != 0 {
        return Err(Error::GridMismatch(format!("stride {stride} does not divide {n} steps")));
    }
    let table_times: Vec<f64> = (0..=n / stride).map(|i| times[i * stride]).collect();
    let provenance = Provenance {
        drift: b.id.clone(),
        hurst,
        seed: None,
        path_index: None,
        rule,
    };
    match &b.spatial {
        Spatial::Fourier(series) => {
            let sums = mode_sums(series, &b.time, times, w, stride, rule, hurst)?;
            let table = SpectralTable {
                kappa: series.modes.iter().map(|m| series.omega() * m.k[0] as f64).collect(),
                coef: series.modes.iter().map(|m| Complex::new(m.re, m.im)).collect(),
                sums,
            };
            let values = synthesize(series, &table, space);
            Ok(AveragedField {
                times: table_times,
                space: *space,
                values,
                spectral: Some(table),
                provenance,
            })
        }
        Spatial::Product { .. } => {
            if matches!(rule, TimeRule::Subgrid { .. }) {
                return Err(Error::GridMismatch("the subgrid rule needs a Fourier drift".into()));
            }
            let xs = space.coordinates();
            let m = xs.len();
            let sample = |i: usize| -> Vec<f64> {
                let c = b.time.value(times[i]);
                xs.iter().map(|x| c * b.spatial.value(&[x + w[i]])).collect()
            };
            let mut values = Vec::with_capacity(table_times.len() * m);
            let mut acc = vec![0.0; m];
            values.extend_from_slice(&acc);
            let mut prev = sample(0);
            for i in 0..n {
                let dt = times[i + 1] - times[i];
                let next = sample(i + 1);
                match rule {
                    TimeRule::LeftPoint => acc.iter_mut().zip(&prev).for_each(|(a, f)| *a += dt * f),
                    _ => acc
                        .iter_mut()
                        .zip(prev.iter().zip(&next))
                        .for_each(|(a, (f, g))| *a += 0.5 * dt * (f + g)),
                }
                prev = next;
                if (i + 1) % stride == 0 {
                    values.extend_from_slice(&acc);
                }
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            Ok(AveragedField {
                times: table_times,
                space: *space,
                values,
                spectral: None,
                provenance,
            })
        }
    }
}

/// Sub-cell damping `m` and residual scale `sigma` for wavenumber `kappa`.
#[derive(Debug, Clone, Copy)]
struct SubgridConstants {
    mean: f64,
    sd: f64,
}

/// `int_0^1 f` with geometric grading toward both endpoints, where the
/// integrands below have `theta^{2H}` cusps.
fn graded_unit<F: Fn(f64) -> f64>(f: F) -> f64 {
    static RULE: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    let rule = RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(10).expect("non-zero")));
    let mut total = 0.0;
    let mut hi = 0.5;
    for level in 0..48 {
        let lo = if level == 47 { 0.0 } else { hi * 0.5 };
        total += rule.integrate(lo, hi, &f) + rule.integrate(1.0 - hi, 1.0 - lo, &f);
        hi = lo;
    }
    total
}

fn subgrid_constants(kappa: f64, hurst: f64, dt: f64) -> SubgridConstants {
    let scale = 0.5 * kappa * kappa * variance_constant(hurst) * dt.powf(2.0 * hurst);
    let h2 = 2.0 * hurst;
    let bridge = |th: f64| {
        let cov = 0.5 * (th.powf(h2) + 1.0 - (1.0 - th).powf(h2));
        (th.powf(h2) - 2.0 * th * cov + th * th).max(0.0)
    };
    let mean = graded_unit(|th| (-scale * bridge(th)).exp());
    let second = 2.0 * graded_unit(|u| (1.0 - u) * (-scale * u.powf(h2)).exp());
    SubgridConstants {
        mean,
        sd: (second - mean * mean).max(0.0).sqrt(),
    }
}

/// Accumulators `S_k` at every `stride`-th time.
fn mode_sums(
    series: &FourierSeries,
    time: &TimeFactor,
    times: &[f64],
    w: &[f64],
    stride: usize,
    rule: TimeRule,
    hurst: Option<f64>,
) -> Result<Vec<Vec<Complex<f64>>>> {
    if series.dims != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: series.dims,
        });
    }
    let n = times.len() - 1;
    let omega = series.omega();
    let c: Vec<f64> = times.iter().map(|&t| time.value(t)).collect();
    let rows = n / stride + 1;
    let n_modes = series.modes.len();
    let mut sums = vec![vec![Complex::new(0.0, 0.0); n_modes]; rows];
    for (q, mode) in series.modes.iter().enumerate() {
        let kappa = omega * mode.k[0] as f64;
        let phase = |i: usize| Complex::from_polar(c[i], kappa * w[i]);
        let mut sub = None;
        if let TimeRule::Subgrid { seed, stream } = rule {
            let hurst = hurst.ok_or_else(|| Error::GridMismatch("the subgrid rule needs a Hurst index".into()))?;
            let dt = times.get(1).copied().unwrap_or(0.0);
            let key = (stream << 20) | (mode.k[0] as u32 as u64 & 0xf_ffff);
            sub = Some((subgrid_constants(kappa, hurst, dt), aux_rng(seed ^ SUBGRID_SALT, key)));
        }
        let mut acc = Complex::new(0.0, 0.0);
        let mut prev = phase(0);
        for i in 0..n {
            let dt = times[i + 1] - times[i];
            let next = phase(i + 1);
            acc += match (&rule, sub.as_mut()) {
                (TimeRule::LeftPoint, _) => prev * dt,
                (TimeRule::Subgrid { .. }, Some((k, rng))) => {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    let cmid = 0.5 * (c[i] + c[i + 1]);
                    let xi = Complex::new(a, b) * std::f64::consts::FRAC_1_SQRT_2;
                    (prev + next) * (0.5 * dt * k.mean) + xi * (cmid * dt * k.sd)
                }
                _ => (prev + next) * (0.5 * dt),
            };
            prev = next;
            if (i + 1) % stride == 0 {
                sums[(i + 1) / stride][q] = acc;
            }
        }
    }
    Ok(sums)
}

/// `Re sum_k coef_k S_k e^{i kappa_k x}` on the grid, by inverse FFT when
/// the grid is the series' own period with enough points, else directly.
fn synthesize(series: &FourierSeries, table: &SpectralTable, space: &SpaceGrid) -> Vec<f64> {
    let m = space.points;
    let fits = space.periodic
        && m.is_power_of_two()
        && ((space.spacing * m as f64) - series.circumference).abs() <= 1e-12 * series.circumference
        && 2 * series.max_mode() < m;
    let mut out = Vec::with_capacity(table.sums.len() * m);
    if fits {
        let plan = FftPlanner::new().plan_fft_inverse(m);
        let shift: Vec<Complex<f64>> = table.kappa.iter().map(|&k| Complex::from_polar(1.0, k * space.origin)).collect();
        let mut buf = vec![Complex::new(0.0, 0.0); m];
        for row in &table.sums {
            buf.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
            for (q, mode) in series.modes.iter().enumerate() {
                let slot = (mode.k[0] as i64).rem_euclid(m as i64) as usize;
                buf[slot] += table.coef[q] * row[q] * shift[q];
            }
            plan.process(&mut buf);
            out.extend(buf.iter().map(|z| z.re));
        }
    } else {
        let xs = space.coordinates();
        for i in 0..table.sums.len() {
            out.extend(xs.iter().map(|&x| table.value(i, x)));
        }
    }
    out
}

/// `sup_x |d/dx A(x)|` for `A = Re sum coef_k S_k e^{i kappa_k x}`
/// restricted to `|k| <= cutoff`, sampled on `m` periodic points.
fn gradient_sup(series: &FourierSeries, sums: &[Complex<f64>], cutoff: usize, m: usize) -> f64 {
    let plan = FftPlanner::new().plan_fft_inverse(m);
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    let omega = series.omega();
    for (mode, s) in series.modes.iter().zip(sums) {
        let k = mode.k[0];
        if k.unsigned_abs() as usize > cutoff {
            continue;
        }
        let slot = (k as i64).rem_euclid(m as i64) as usize;
        buf[slot] += Complex::new(mode.re, mode.im) * s * Complex::new(0.0, omega * k as f64);
    }
    plan.process(&mut buf);
    buf.iter().fold(0.0, |a, z| a.max(z.re.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub hurst: f64,
    pub ell: f64,
    pub gamma: f64,
    pub n_paths: usize,
    pub lattice: LatticeConfig,
    pub space: SpaceGrid,
    /// Gaps in lattice steps; dyadic.
    pub gaps: Vec<usize>,
    /// Windows sampled per gap and path.
    pub windows: usize,
    pub rule: TimeRuleKind,
    pub seed: u64,
    pub bootstrap_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub drift: String,
    pub hurst: f64,
    pub ell: f64,
    pub gamma: f64,
    pub n_paths: usize,
    pub gap_times: Vec<f64>,
    /// `E[proxy^ell]^{1/ell}` per gap.
    pub moments: Vec<f64>,
    pub fit: LineFit,
    pub slope_ci: (f64, f64),
    /// Median over paths of the per-path slope of the largest window proxy.
    pub pathwise_slope_median: f64,
    /// `0.5 + 1/ell - 0.1`.
    pub threshold: f64,
    pub lattice: LatticeConfig,
    pub space: SpaceGrid,
    pub rule: TimeRuleKind,
    pub seed: u64,
    pub proxy_resolution: usize,
}

pub const MIN_SCAN_PATHS: usize = 500;
pub const MIN_SCAN_SCALES: usize = 5;

/// Moment exponent of `||delta A_{s,t}||_{C^{1+gamma}}` in `|t - s|`.
pub fn regularity_moment_scan(b: &FieldSpec, cfg: &ScanConfig) -> Result<ScanReport> {
    scan_impl(b, cfg, MIN_SCAN_PATHS)
}

/// Same scan without the path-count floor, for smoke runs.
pub fn regularity_moment_scan_unchecked(b: &FieldSpec, cfg: &ScanConfig) -> Result<ScanReport> {
    scan_impl(b, cfg, 2)
}

fn scan_impl(b: &FieldSpec, cfg: &ScanConfig, min_paths: usize) -> Result<ScanReport> {
    if cfg.n_paths < min_paths {
        return Err(Error::InsufficientPaths {
            needed: min_paths,
            got: cfg.n_paths,
        });
    }
    let mut gaps = cfg.gaps.clone();
    gaps.sort_unstable();
    gaps.dedup();
    if gaps.len() < MIN_SCAN_SCALES {
        return Err(Error::InsufficientScales {
            needed: MIN_SCAN_SCALES,
            got: gaps.len(),
        });
    }
    let base = gaps[0];
    if base == 0 || gaps.iter().any(|g| g % base != 0) {
        return Err(Error::GridMismatch("gaps must be multiples of the smallest gap".into()));
    }
    let n = cfg.lattice.n_right();
    let top = *gaps.last().expect("non-empty");
    if top > n || n % base != 0 {
        return Err(Error::GridMismatch(format!("gaps {gaps:?} do not fit {n} steps")));
    }
    let gen = FbmGenerator::full_grid(&cfg.lattice, cfg.hurst)?;
    let windows = cfg.windows.max(1);
    // per path: (mean proxy^ell, max proxy) per gap
    let rows: Vec<Vec<(f64, f64)>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<(f64, f64)>> {
            let lattice = sample_lattice(&cfg.lattice, cfg.seed, p)?;
            let path = gen.generate(&lattice)?;
            let a = compute_averaged(b, &path, &cfg.space, base, cfg.rule.with_stream(cfg.seed, p))?;
            Ok(gaps
                .iter()
                .map(|&g| {
                    let span = (n - g) / base;
                    let (mut sum, mut max) = (0.0, 0.0f64);
                    for wdx in 0..windows {
                        let start = if windows == 1 { 0 } else { wdx * span / (windows - 1) };
                        let d = a.delta(start, start + g / base);
                        let v = c1_gamma_proxy(&d, &a.space, cfg.gamma);
                        sum += v.powf(cfg.ell);
                        max = max.max(v);
                    }
                    (sum / windows as f64, max)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let gap_times: Vec<f64> = gaps.iter().map(|&g| g as f64 * cfg.lattice.step).collect();
    let moments_of = |idx: &[usize]| -> Vec<f64> {
        (0..gaps.len())
            .map(|k| (idx.iter().map(|&p| rows[p][k].0).sum::<f64>() / idx.len() as f64).powf(1.0 / cfg.ell))
            .collect()
    };
    let all: Vec<usize> = (0..rows.len()).collect();
    let moments = moments_of(&all);
    let fit = fit_loglog(&gap_times, &moments)
        .ok_or_else(|| Error::DegenerateFit("moment scan produced non-positive moments".into()))?;
    let mut rng = aux_rng(cfg.seed, 0xb007);
    let slope_ci = bootstrap_ci(rows.len(), cfg.bootstrap_reps, 0.95, &mut rng, |idx| {
        fit_loglog(&gap_times, &moments_of(idx)).map(|f| f.slope)
    });
    let mut pathwise: Vec<f64> = rows
        .iter()
        .filter_map(|r| fit_loglog(&gap_times, &r.iter().map(|x| x.1).collect::<Vec<_>>()).map(|f| f.slope))
        .collect();
    pathwise.sort_by(f64::total_cmp);
    let pathwise_slope_median = pathwise.get(pathwise.len() / 2).copied().unwrap_or(f64::NAN);
    Ok(ScanReport {
        drift: b.id.clone(),
        hurst: cfg.hurst,
        ell: cfg.ell,
        gamma: cfg.gamma,
        n_paths: cfg.n_paths,
        gap_times,
        moments,
        fit,
        slope_ci,
        pathwise_slope_median,
        threshold: 0.5 + 1.0 / cfg.ell - 0.1,
        lattice: cfg.lattice,
        space: cfg.space,
        rule: cfg.rule,
        seed: cfg.seed,
        proxy_resolution: cfg.space.points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressConfig {
    pub hurst: f64,
    pub n_paths: usize,
    pub lattice: LatticeConfig,
    /// Partial-sum cutoffs `K`.
    pub cutoffs: Vec<usize>,
    /// Periodic sample points for the gradient sup.
    pub points: usize,
    pub rule: TimeRuleKind,
    pub seed: u64,
    /// Cutoffs compared in the reported ratios.
    pub ratio_pair: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressRow {
    pub cutoff: usize,
    /// Median over paths of `sup |d_x A_T|` under the configured rule.
    pub noise: f64,
    /// Same with the trapezoid rule on lattice values.
    pub noise_trapezoid: f64,
    /// `W = 0`.
    pub control: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressReport {
    pub drift: String,
    pub hurst: f64,
    pub n_paths: usize,
    pub rows: Vec<StressRow>,
    pub noise_ratio: f64,
    pub noise_trapezoid_ratio: f64,
    pub control_ratio: f64,
    pub ratio_pair: (usize, usize),
    pub lattice: LatticeConfig,
    pub points: usize,
    pub rule: TimeRuleKind,
    pub seed: u64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// `sup_x |d_x A_T|` for partial sums of one Fourier drift, with and
/// without noise.
pub fn roughness_stress_test(b: &FieldSpec, cfg: &StressConfig) -> Result<StressReport> {
    let Spatial::Fourier(series) = &b.spatial else {
        return Err(Error::GridMismatch(format!("`{}` is not a Fourier drift", b.id)));
    };
    if series.dims != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: series.dims,
        });
    }
    if !cfg.points.is_power_of_two() || 2 * series.max_mode() >= cfg.points {
        return Err(Error::GridMismatch(format!(
            "{} points cannot resolve mode {}",
            cfg.points,
            series.max_mode()
        )));
    }
    for k in [cfg.ratio_pair.0, cfg.ratio_pair.1] {
        if !cfg.cutoffs.contains(&k) {
            return Err(Error::GridMismatch(format!("ratio cutoff {k} is not among the cutoffs")));
        }
    }
    let n = cfg.lattice.n_right();
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * cfg.lattice.step).collect();
    let gen = FbmGenerator::full_grid(&cfg.lattice, cfg.hurst)?;
    let per_path: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<(Vec<f64>, Vec<f64>)> {
            let lattice = sample_lattice(&cfg.lattice, cfg.seed, p)?;
            let path = gen.generate(&lattice)?;
            let mut w = vec![0.0];
            w.extend_from_slice(path.values(0));
            let rule = cfg.rule.with_stream(cfg.seed, p);
            let main = mode_sums(series, &b.time, &times, &w, n, rule, Some(cfg.hurst))?;
            let trap = mode_sums(series, &b.time, &times, &w, n, TimeRule::Trapezoid, None)?;
            let sups = |s: &[Complex<f64>]| -> Vec<f64> {
                cfg.cutoffs.iter().map(|&k| gradient_sup(series, s, k, cfg.points)).collect()
            };
            Ok((sups(&main[1]), sups(&trap[1])))
        })
        .collect::<Result<_>>()?;
    let zero = vec![0.0; n + 1];
    let control_sums = mode_sums(series, &b.time, &times, &zero, n, TimeRule::Trapezoid, None)?;
    let rows: Vec<StressRow> = cfg
        .cutoffs
        .iter()
        .enumerate()
        .map(|(q, &k)| StressRow {
            cutoff: k,
            noise: median(per_path.iter().map(|r| r.0[q]).collect()),
            noise_trapezoid: median(per_path.iter().map(|r| r.1[q]).collect()),
            control: gradient_sup(series, &control_sums[1], k, cfg.points),
        })
        .collect();
    let pick = |k: usize| rows.iter().find(|r| r.cutoff == k).expect("checked above");
    let (lo, hi) = (pick(cfg.ratio_pair.0), pick(cfg.ratio_pair.1));
    Ok(StressReport {
        drift: b.id.clone(),
        hurst: cfg.hurst,
        n_paths: cfg.n_paths,
        noise_ratio: hi.noise / lo.noise,
        noise_trapezoid_ratio: hi.noise_trapezoid / lo.noise_trapezoid,
        control_ratio: hi.control / lo.control,
        rows,
        ratio_pair: cfg.ratio_pair,
        lattice: cfg.lattice,
        points: cfg.points,
        rule: cfg.rule,
        seed: cfg.seed,
    })
}

/// A path that stays at zero, for noiseless controls.
pub fn zero_path(config: &LatticeConfig, hurst: f64) -> Result<FbmPath> {
    let lattice = BrownianLattice::zeros(*config)?;
    FbmGenerator::full_grid(config, hurst)?.generate(&lattice)
}
