//! Monte Carlo verification of the Itô-Tanaka-Wentzell identity
//!
//! `int_0^t f(r, W_r + x) dr = T1 + T2 + T3 - T4`
//!
//! on the lattice. For a grid point `r_i` and a cell `c < i`:
//! `W2(c, i)` collects the cells before `c`, `tau(i - c)` is the lattice
//! variance of the remaining part, and the stochastic integrals are sums
//! against `dB_c` with integrands frozen at the left end of the cell.
//!
//! `T4` is `-sum sum P g dr dB`, the limit of the discrete expansion; the
//! displayed variant with the `(r-u)^{H-1/2}` kernel is carried alongside
//! as `t4_displayed`.

mod clark_ocone;

pub use clark_ocone::{clark_ocone_check, ClarkOconeConfig, ClarkOconeLevel, ClarkOconeReport, Functional};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{kernel_cell_averages, sample_lattice, AdaptedTable, BrownianLattice, FbmGenerator, LatticeConfig};
use crate::field::{FieldSample, FieldSpec, HeatedSpatial, MomentRoute, MAX_ANCHORS, MAX_DIMS};
use crate::stats::{fit_loglog, LineFit, RunningStats};

/// Which noise argument enters the semigroup term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T1Reading {
    /// `P_{tau(0,r)} f^a(r, 0, W2(0, r) + x)`.
    #[default]
    W2,
    /// `P_{tau(0,r)} f(r, W(r) + x)`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochasticScheme {
    LeftPoint,
    /// Left point plus `1/2 sum C_jl (dB_j dB_l - delta_jl dt)`.
    #[default]
    Milstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TermOptions {
    pub reading: T1Reading,
    pub scheme: StochasticScheme,
    pub route: MomentRoute,
}

/// All terms at one `(t, x)` for one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityTerms {
    pub t: f64,
    pub x: Vec<f64>,
    pub lhs: f64,
    pub t1: f64,
    pub t1_literal: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t4_displayed: f64,
    /// Second-order correction of the stochastic sums (zero for left point).
    pub milstein: f64,
    pub reading: T1Reading,
}

impl IdentityTerms {
    fn rest(&self) -> f64 {
        self.t2 + self.milstein + self.t3 - self.t4
    }

    /// `LHS - (T1 + T2 + T3 - T4)` under the configured reading.
    pub fn residual(&self) -> f64 {
        self.residual_for(self.reading)
    }

    pub fn residual_for(&self, reading: T1Reading) -> f64 {
        let t1 = match reading {
            T1Reading::W2 => self.t1,
            T1Reading::Literal => self.t1_literal,
        };
        self.lhs - (t1 + self.rest())
    }

    /// Residual with the displayed kernel-weighted `T4`.
    pub fn residual_displayed(&self) -> f64 {
        self.lhs - (self.t1 + self.t2 + self.milstein + self.t3 - self.t4_displayed)
    }
}

/// Path-independent data for one lattice level: kernel, heat clock and the
/// heated spatial factor per cell offset.
pub struct LevelCache {
    step: f64,
    n: usize,
    kernel: Vec<f64>,
    tau: Vec<f64>,
    heated: Vec<HeatedSpatial>,
    generator: FbmGenerator,
}

impl LevelCache {
    pub fn new(f: &FieldSpec, hurst: f64, config: &LatticeConfig) -> Result<Self> {
        f.validate()?;
        let n = config.n_right();
        let step = config.step;
        let kernel = kernel_cell_averages(hurst, step, n);
        let mut tau = Vec::with_capacity(n + 1);
        tau.push(0.0);
        let mut acc = 0.0;
        for k in &kernel {
            acc += step * k * k;
            tau.push(acc);
        }
        let heated = tau.iter().map(|&t| f.spatial.heated(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            step,
            n,
            kernel,
            tau,
            heated,
            generator: FbmGenerator::full_grid(config, hurst)?,
        })
    }

    /// Lattice heat clock `tau(m) = sum_{m' <= m} step kbar(m')^2`.
    pub fn heat_time(&self, offset: usize) -> f64 {
        self.tau[offset]
    }
}

/// One lattice path with its adapted pair table.
pub struct VerifierPath {
    pub lattice: BrownianLattice,
    table: AdaptedTable,
}

impl VerifierPath {
    pub fn new(lattice: BrownianLattice, cache: &LevelCache) -> Result<Self> {
        let cfg = lattice.config();
        if cfg.n_right() != cache.n || (cfg.step - cache.step).abs() > 1e-15 {
            return Err(Error::GridMismatch("lattice does not match the level cache".into()));
        }
        let table = cache.generator.adapted_table(&lattice)?;
        Ok(Self { lattice, table })
    }

    #[inline]
    pub fn w2(&self, j: usize, c: usize, i: usize) -> f64 {
        self.table.w2(j, c, i)
    }

    #[inline]
    pub fn w(&self, j: usize, i: usize) -> f64 {
        self.table.w(j, i)
    }

    pub fn dims(&self) -> usize {
        self.table.dims()
    }
}

fn trapezoid_weights(n: usize, step: f64) -> Vec<f64> {
    let mut w = vec![step; n + 1];
    if n == 0 {
        w[0] = 0.0;
    } else {
        w[0] *= 0.5;
        w[n] *= 0.5;
    }
    w
}

fn support_mask(sample: &FieldSample, c: usize, i: usize) -> [bool; MAX_ANCHORS] {
    let mut mask = [false; MAX_ANCHORS];
    for (a, slot) in mask.iter_mut().enumerate().take(sample.anchors().index.len()) {
        *slot = c < sample.anchors().index[a].min(i);
    }
    mask
}

fn grid_index(t: f64, step: f64, n: usize) -> Result<usize> {
    let x = t / step;
    let i = x.round();
    if (x - i).abs() > 1e-9 * x.abs().max(1.0) || i < 0.0 || i as usize > n {
        return Err(Error::NotOnLattice(t));
    }
    Ok(i as usize)
}

/// Terms for every probe `x` at time `t` on one path.
pub fn compute_terms(
    f: &FieldSpec,
    path: &VerifierPath,
    cache: &LevelCache,
    t: f64,
    probes: &[Vec<f64>],
    opts: &TermOptions,
) -> Result<Vec<IdentityTerms>> {
    let d = path.dims();
    if f.dims != d {
        return Err(Error::Dimension { expected: f.dims, got: d });
    }
    if let Some(bad) = probes.iter().find(|x| x.len() != d) {
        return Err(Error::Dimension { expected: d, got: bad.len() });
    }
    if f.spatial.is_periodic() && !f.spatial.has_gradient() {
        return Err(Error::MissingAnalytic(format!("`{}` needs a spatial gradient", f.id)));
    }
    if !f.has_gradient() {
        return Err(Error::MissingAnalytic(format!("`{}` has no spatial gradient", f.id)));
    }
    let nt = grid_index(t, cache.step, cache.n)?;
    let sample = f.bind(&path.lattice)?.with_route(opts.route);
    let brownian = sample.brownian();
    let step = cache.step;
    let weights = trapezoid_weights(nt, step);
    let order = match opts.scheme {
        StochasticScheme::LeftPoint => 1,
        StochasticScheme::Milstein => 2,
    };
    let post: Vec<&[f64]> = (0..d).map(|j| path.lattice.post_increments(j)).collect();
    let np = probes.len();
    let mut out: Vec<IdentityTerms> = probes
        .iter()
        .map(|x| IdentityTerms {
            t,
            x: x.clone(),
            lhs: 0.0,
            t1: 0.0,
            t1_literal: 0.0,
            t2: 0.0,
            t3: 0.0,
            t4: 0.0,
            t4_displayed: 0.0,
            milstein: 0.0,
            reading: opts.reading,
        })
        .collect();
    let mut y = [0.0; MAX_DIMS];
    let mut y_start = [0.0; MAX_DIMS];
    for i in 0..=nt {
        let wi = weights[i];
        if wi == 0.0 {
            continue;
        }
        let ci = f.time.value(i as f64 * step) * wi;
        let q_now = sample.anchor_jet(i, i).q;
        let q_start = sample.anchor_jet(0, i).q;
        for (p, x) in probes.iter().enumerate() {
            for j in 0..d {
                y[j] = path.w(j, i) + x[j];
                y_start[j] = path.w2(j, 0, i) + x[j];
            }
            let terms = &mut out[p];
            terms.lhs += ci * cache.heated[0].jet(&y[..d], 0).value * q_now;
            terms.t1 += ci * cache.heated[i].jet(&y_start[..d], 0).value * q_start;
            terms.t1_literal += ci * cache.heated[i].jet(&y[..d], 0).value * q_now;
        }
        for c in 0..i {
            let m = i - c;
            let k = cache.kernel[m - 1];
            let mask = support_mask(&sample, c, i);
            let aj = sample
                .anchors()
                .jet_with_support(brownian, step, c, i, opts.route, Some(&mask[..]));
            let live = aj.has_derivative();
            let heated = &cache.heated[m];
            for (p, x) in probes.iter().enumerate() {
                for j in 0..d {
                    y[j] = path.w2(j, c, i) + x[j];
                }
                let jet = heated.jet(&y[..d], order);
                let terms = &mut out[p];
                for j in 0..d {
                    let db = post[j][c];
                    terms.t2 += db * ci * k * aj.q * jet.grad[j];
                    if live {
                        terms.t3 += step * ci * k * aj.g[j] * jet.grad[j];
                        terms.t4 -= db * ci * aj.g[j] * jet.value;
                        terms.t4_displayed -= db * ci * k * aj.g[j] * jet.value;
                    }
                }
                if order == 2 {
                    let mut mil = 0.0;
                    for j in 0..d {
                        for l in 0..d {
                            let mut cjl = k * k * aj.q * jet.hess[j][l];
                            if live {
                                cjl += k * aj.g[l] * jet.grad[j] + k * aj.g[j] * jet.grad[l] + aj.h[j][l] * jet.value;
                            }
                            let dd = post[j][c] * post[l][c] - if j == l { step } else { 0.0 };
                            mil += cjl * dd;
                        }
                    }
                    terms.milstein += 0.5 * ci * mil;
                }
            }
        }
    }
    debug_assert_eq!(out.len(), np);
    Ok(out)
}

/// Coefficients of `dB_j(u_c)` in `T2` and `-T4` at probe `x`: both depend
/// only on the lattice before cell `c`.
pub fn integrand_weights(
    f: &FieldSpec,
    path: &VerifierPath,
    cache: &LevelCache,
    t: f64,
    x: &[f64],
    c: usize,
    route: MomentRoute,
) -> Result<Vec<(f64, f64)>> {
    let d = path.dims();
    let nt = grid_index(t, cache.step, cache.n)?;
    let sample = f.bind(&path.lattice)?.with_route(route);
    let weights = trapezoid_weights(nt, cache.step);
    let mut out = vec![(0.0, 0.0); d];
    let mut y = [0.0; MAX_DIMS];
    for i in c + 1..=nt {
        let ci = f.time.value(i as f64 * cache.step) * weights[i];
        let k = cache.kernel[i - c - 1];
        let mask = support_mask(&sample, c, i);
        let aj = sample
            .anchors()
            .jet_with_support(sample.brownian(), cache.step, c, i, route, Some(&mask[..]));
        for j in 0..d {
            y[j] = path.w2(j, c, i) + x[j];
        }
        let jet = cache.heated[i - c].jet(&y[..d], 1);
        for j in 0..d {
            out[j].0 += ci * k * aj.q * jet.grad[j];
            out[j].1 += ci * aj.g[j] * jet.value;
        }
    }
    Ok(out)
}

/// `1/2 - H alpha - 1/p` with `alpha = m - s` for a field of Sobolev index
/// `s` (`None` = smooth).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck {
    pub hurst: f64,
    pub m: f64,
    pub p: f64,
    pub alpha: Option<f64>,
    pub margin: f64,
    pub in_regime: bool,
}

pub fn regime_check(hurst: f64, m: f64, p: f64, sobolev_index: Option<f64>) -> RegimeCheck {
    let alpha = sobolev_index.map(|s| m - s);
    let margin = match alpha {
        Some(a) => 0.5 - hurst * a - 1.0 / p,
        None => f64::INFINITY,
    };
    RegimeCheck {
        hurst,
        m,
        p,
        alpha,
        margin,
        in_regime: p >= 2.0 && margin > 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub hurst: f64,
    pub dims: usize,
    pub n_paths: usize,
    pub horizon: f64,
    pub left: f64,
    /// Dyadic steps, any order; the finest is sampled, the rest coarsened.
    pub steps: Vec<f64>,
    pub probes: Vec<Vec<f64>>,
    pub options: TermOptions,
    pub seed: u64,
    /// Pass bound on the finest relative residual RMS.
    pub tolerance: f64,
    /// Absolute bound used when `RMS(LHS) = 0`.
    pub absolute_tolerance: f64,
    pub require_decay: bool,
    /// Keep per-path term rows in the report.
    pub dump_terms: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TermStats {
    pub lhs: RunningStats,
    pub t1: RunningStats,
    pub t1_literal: RunningStats,
    pub t2: RunningStats,
    pub t3: RunningStats,
    pub t4: RunningStats,
    pub t4_displayed: RunningStats,
    pub milstein: RunningStats,
    pub residual: RunningStats,
    pub residual_literal: RunningStats,
    pub residual_displayed: RunningStats,
    /// Second moments, for RMS values.
    pub lhs_sq: RunningStats,
    pub residual_sq: RunningStats,
    pub residual_literal_sq: RunningStats,
    pub residual_displayed_sq: RunningStats,
}

impl TermStats {
    fn push(&mut self, t: &IdentityTerms) {
        let r = t.residual();
        let rl = t.residual_for(T1Reading::Literal);
        let rd = t.residual_displayed();
        self.lhs.push(t.lhs);
        self.t1.push(t.t1);
        self.t1_literal.push(t.t1_literal);
        self.t2.push(t.t2);
        self.t3.push(t.t3);
        self.t4.push(t.t4);
        self.t4_displayed.push(t.t4_displayed);
        self.milstein.push(t.milstein);
        self.residual.push(r);
        self.residual_literal.push(rl);
        self.residual_displayed.push(rd);
        self.lhs_sq.push(t.lhs * t.lhs);
        self.residual_sq.push(r * r);
        self.residual_literal_sq.push(rl * rl);
        self.residual_displayed_sq.push(rd * rd);
    }

    fn merge(&mut self, o: &TermStats) {
        self.lhs.merge(&o.lhs);
        self.t1.merge(&o.t1);
        self.t1_literal.merge(&o.t1_literal);
        self.t2.merge(&o.t2);
        self.t3.merge(&o.t3);
        self.t4.merge(&o.t4);
        self.t4_displayed.merge(&o.t4_displayed);
        self.milstein.merge(&o.milstein);
        self.residual.merge(&o.residual);
        self.residual_literal.merge(&o.residual_literal);
        self.residual_displayed.merge(&o.residual_displayed);
        self.lhs_sq.merge(&o.lhs_sq);
        self.residual_sq.merge(&o.residual_sq);
        self.residual_literal_sq.merge(&o.residual_literal_sq);
        self.residual_displayed_sq.merge(&o.residual_displayed_sq);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub step: f64,
    pub n_steps: usize,
    pub residual_rms: f64,
    pub residual_literal_rms: f64,
    pub residual_displayed_rms: f64,
    pub lhs_rms: f64,
    /// `None` when `RMS(LHS) = 0`.
    pub relative_rms: Option<f64>,
    pub relative_literal_rms: Option<f64>,
    pub relative_displayed_rms: Option<f64>,
    pub terms: TermStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRow {
    pub path: u64,
    pub step: f64,
    pub terms: IdentityTerms,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub field: String,
    pub config: VerifyConfig,
    pub levels: Vec<LevelReport>,
    /// Log-log slope of residual RMS against the step.
    pub decay: Option<LineFit>,
    pub decay_literal: Option<LineFit>,
    pub finest_relative_rms: Option<f64>,
    pub regime: RegimeCheck,
    pub passed: bool,
    pub rows: Vec<TermRow>,
}

impl VerifierReport {
    /// Finest relative RMS below tolerance (absolute when `RMS(LHS) = 0`)
    /// and, if required, a decaying or vanishing residual.
    pub fn passes(&self, reading: T1Reading) -> bool {
        let cfg = &self.config;
        let pick = |l: &LevelReport| match reading {
            T1Reading::W2 => (l.residual_rms, l.relative_rms),
            T1Reading::Literal => (l.residual_literal_rms, l.relative_literal_rms),
        };
        let (abs, rel) = pick(self.levels.last().expect("three levels"));
        let small = match rel {
            Some(r) => r < cfg.tolerance,
            None => abs < cfg.absolute_tolerance,
        };
        let exact = self.levels.iter().all(|l| pick(l).0 < cfg.absolute_tolerance);
        let fit = match reading {
            T1Reading::W2 => self.decay,
            T1Reading::Literal => self.decay_literal,
        };
        small && (!cfg.require_decay || exact || fit.is_some_and(|d| d.slope > 0.0))
    }
}

fn rms(sq: &RunningStats) -> f64 {
    sq.mean.max(0.0).sqrt()
}

/// Residual statistics over a dyadic ladder of lattices driven by the same
/// Brownian paths.
pub fn verify_identity(f: &FieldSpec, cfg: &VerifyConfig) -> Result<VerifierReport> {
    if cfg.steps.len() < 3 {
        return Err(Error::ShortLadder(cfg.steps.len()));
    }
    if f.dims != cfg.dims {
        return Err(Error::Dimension {
            expected: cfg.dims,
            got: f.dims,
        });
    }
    let mut steps = cfg.steps.clone();
    steps.sort_by(|a, b| b.total_cmp(a));
    let finest = *steps.last().expect("non-empty");
    let factors = steps
        .iter()
        .map(|s| {
            let r = s / finest;
            let k = r.round();
            if (r - k).abs() > 1e-9 || !(k as usize).is_power_of_two() {
                Err(Error::GridMismatch(format!("step {s} is not a dyadic multiple of {finest}")))
            } else {
                Ok(k as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let fine_cfg = LatticeConfig::new(cfg.dims, finest, cfg.left, cfg.horizon)?;
    let caches = steps
        .iter()
        .map(|&s| LevelCache::new(f, cfg.hurst, &LatticeConfig::new(cfg.dims, s, cfg.left, cfg.horizon)?))
        .collect::<Result<Vec<_>>>()?;
    let per_path: Vec<(Vec<TermStats>, Vec<TermRow>)> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<(Vec<TermStats>, Vec<TermRow>)> {
            let fine = sample_lattice(&fine_cfg, cfg.seed, p)?;
            let mut stats = Vec::with_capacity(steps.len());
            let mut rows = Vec::new();
            for ((&factor, cache), &s) in factors.iter().zip(&caches).zip(&steps) {
                let lattice = if factor == 1 { fine.clone() } else { fine.coarsen(factor)? };
                let vp = VerifierPath::new(lattice, cache)?;
                let terms = compute_terms(f, &vp, cache, cfg.horizon, &cfg.probes, &cfg.options)?;
                let mut st = TermStats::default();
                for t in &terms {
                    st.push(t);
                    if cfg.dump_terms {
                        rows.push(TermRow {
                            path: p,
                            step: s,
                            residual: t.residual(),
                            terms: t.clone(),
                        });
                    }
                }
                stats.push(st);
            }
            Ok((stats, rows))
        })
        .collect::<Result<_>>()?;
    let mut merged = vec![TermStats::default(); steps.len()];
    let mut rows = Vec::new();
    for (stats, r) in per_path {
        for (m, s) in merged.iter_mut().zip(&stats) {
            m.merge(s);
        }
        rows.extend(r);
    }
    let levels: Vec<LevelReport> = steps
        .iter()
        .zip(&merged)
        .map(|(&s, st)| {
            let lhs_rms = rms(&st.lhs_sq);
            let rel = |v: f64| (lhs_rms > 0.0).then(|| v / lhs_rms);
            LevelReport {
                step: s,
                n_steps: (cfg.horizon / s).round() as usize,
                residual_rms: rms(&st.residual_sq),
                residual_literal_rms: rms(&st.residual_literal_sq),
                residual_displayed_rms: rms(&st.residual_displayed_sq),
                lhs_rms,
                relative_rms: rel(rms(&st.residual_sq)),
                relative_literal_rms: rel(rms(&st.residual_literal_sq)),
                relative_displayed_rms: rel(rms(&st.residual_displayed_sq)),
                terms: *st,
            }
        })
        .collect();
    let xs: Vec<f64> = levels.iter().map(|l| l.step).collect();
    let decay = fit_loglog(&xs, &levels.iter().map(|l| l.residual_rms).collect::<Vec<_>>());
    let decay_literal = fit_loglog(&xs, &levels.iter().map(|l| l.residual_literal_rms).collect::<Vec<_>>());
    let mut report = VerifierReport {
        field: f.id.clone(),
        config: cfg.clone(),
        finest_relative_rms: levels.last().expect("three levels").relative_rms,
        levels,
        decay,
        decay_literal,
        regime: regime_check(cfg.hurst, 0.0, 2.0, f.regularity.sobolev_index),
        passed: false,
        rows,
    };
    report.passed = report.passes(cfg.options.reading);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingResolution {
    /// `None` when neither reading decays.
    pub chosen: Option<T1Reading>,
    /// `(step, residual RMS)` under each reading.
    pub w2_curve: Vec<(f64, f64)>,
    pub literal_curve: Vec<(f64, f64)>,
    pub w2_slope: Option<f64>,
    pub literal_slope: Option<f64>,
    pub coincide: bool,
    pub evidence: String,
}

/// Slope above which a residual curve counts as decaying.
pub const DECAY_SLOPE: f64 = 0.25;

impl ReadingResolution {
    /// Both readings share every other term, so one ladder run decides.
    pub fn from_report(report: &VerifierReport) -> Self {
        let tol = report.config.absolute_tolerance;
        let w2_curve: Vec<(f64, f64)> = report.levels.iter().map(|l| (l.step, l.residual_rms)).collect();
        let literal_curve: Vec<(f64, f64)> = report.levels.iter().map(|l| (l.step, l.residual_literal_rms)).collect();
        let exact = |c: &[(f64, f64)]| c.iter().all(|p| p.1 < tol);
        let coincide = w2_curve
            .iter()
            .zip(&literal_curve)
            .all(|(a, b)| (a.1 - b.1).abs() <= 1e-12 * (1.0 + a.1.abs()));
        let w2_slope = report.decay.map(|d| d.slope);
        let literal_slope = report.decay_literal.map(|d| d.slope);
        let decays = |c: &[(f64, f64)], s: Option<f64>| exact(c) || s.is_some_and(|s| s > DECAY_SLOPE);
        let fw = w2_curve.last().expect("levels").1;
        let fl = literal_curve.last().expect("levels").1;
        let chosen = match (decays(&w2_curve, w2_slope), decays(&literal_curve, literal_slope)) {
            (true, false) => Some(T1Reading::W2),
            (false, true) => Some(T1Reading::Literal),
            (true, true) if fl < fw && !coincide => Some(T1Reading::Literal),
            (true, true) => Some(T1Reading::W2),
            (false, false) => None,
        };
        let evidence = format!(
            "w2 slope {}, literal slope {}, finest RMS w2 {fw:.3e} literal {fl:.3e}{}",
            w2_slope.map_or("-".into(), |s| format!("{s:.3}")),
            literal_slope.map_or("-".into(), |s| format!("{s:.3}")),
            if coincide { ", readings coincide" } else { "" }
        );
        Self {
            chosen,
            w2_curve,
            literal_curve,
            w2_slope,
            literal_slope,
            coincide,
            evidence,
        }
    }
}

/// Runs the ladder and keeps the reading whose residual decays with the
/// step.
pub fn resolve_t1_reading(f: &FieldSpec, cfg: &VerifyConfig) -> Result<(T1Reading, ReadingResolution, VerifierReport)> {
    let report = verify_identity(f, cfg)?;
    let res = ReadingResolution::from_report(&report);
    match res.chosen {
        Some(r) => Ok((r, res, report)),
        None => Err(Error::NoDecayingReading),
    }
}
