//! Periodic grid functions: spectral heat semigroup, Bessel-potential
//! Sobolev norms, Hölder-type proxies and the smoothing estimate.
//!
//! Convention: `P_tau f = f * N(0, tau I)`, i.e. Fourier modes are damped by
//! `exp(-tau |xi|^2 / 2)`.

use std::path::Path;
use std::sync::OnceLock;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::averaging::AveragedField;
use crate::error::{Error, Result};
use crate::field::Spatial;
use crate::stats::{fit_loglog, LineFit};

pub const DEFAULT_CIRCUMFERENCE: f64 = 2.0 * std::f64::consts::PI;

/// Values on a uniform periodic grid with `m` points per axis, `d <= 2`,
/// stored row-major (axis 0 slowest).
#[derive(Debug, Clone)]
pub struct GridField {
    dims: usize,
    m: usize,
    circumference: f64,
    origin: f64,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex<f64>>>,
}

impl PartialEq for GridField {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.m == other.m
            && self.circumference == other.circumference
            && self.origin == other.origin
            && self.values == other.values
    }
}

fn fft_nd(data: &mut [Complex<f64>], dims: usize, m: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    match dims {
        1 => plan.process(data),
        2 => {
            plan.process(data);
            let mut col = vec![Complex::new(0.0, 0.0); m];
            for c in 0..m {
                for r in 0..m {
                    col[r] = data[r * m + c];
                }
                plan.process(&mut col);
                for r in 0..m {
                    data[r * m + c] = col[r];
                }
            }
        }
        _ => unreachable!("grid dimension checked at construction"),
    }
    if inverse {
        let scale = 1.0 / (m.pow(dims as u32)) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

impl GridField {
    pub fn new(dims: usize, m: usize, circumference: f64, origin: f64, values: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&dims) {
            return Err(Error::Dimension { expected: 2, got: dims });
        }
        if !m.is_power_of_two() || m < 2 {
            return Err(Error::GridNotPowerOfTwo(m));
        }
        if values.len() != m.pow(dims as u32) {
            return Err(Error::Dimension {
                expected: m.pow(dims as u32),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            dims,
            m,
            circumference,
            origin,
            values,
            spectrum: OnceLock::new(),
        })
    }

    /// Samples `f` at the grid points.
    pub fn from_fn<F: FnMut(&[f64]) -> f64>(dims: usize, m: usize, circumference: f64, origin: f64, mut f: F) -> Result<Self> {
        if !(1..=2).contains(&dims) {
            return Err(Error::Dimension { expected: 2, got: dims });
        }
        let h = circumference / m as f64;
        let n = m.pow(dims as u32);
        let mut values = Vec::with_capacity(n);
        let mut y = [0.0; 2];
        for idx in 0..n {
            if dims == 1 {
                y[0] = origin + idx as f64 * h;
            } else {
                y[0] = origin + (idx / m) as f64 * h;
                y[1] = origin + (idx % m) as f64 * h;
            }
            values.push(f(&y[..dims]));
        }
        Self::new(dims, m, circumference, origin, values)
    }

    /// Samples a catalog spatial profile.
    pub fn from_spatial(spatial: &Spatial, m: usize, circumference: f64, origin: f64) -> Result<Self> {
        Self::from_fn(spatial.dims(), m, circumference, origin, |y| spatial.value(y))
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        self.circumference / self.m as f64
    }

    pub fn coordinates(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.m).map(|i| self.origin + i as f64 * h).collect()
    }

    fn spectrum(&self) -> &[Complex<f64>] {
        self.spectrum.get_or_init(|| {
            let mut data: Vec<Complex<f64>> = self.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
            fft_nd(&mut data, self.dims, self.m, false);
            data
        })
    }

    /// Angular wavenumber of FFT index `k`.
    fn xi(&self, k: usize) -> f64 {
        let n = if k <= self.m / 2 { k as f64 } else { k as f64 - self.m as f64 };
        2.0 * std::f64::consts::PI / self.circumference * n
    }

    fn xi_sq(&self, idx: usize) -> f64 {
        if self.dims == 1 {
            self.xi(idx).powi(2)
        } else {
            self.xi(idx / self.m).powi(2) + self.xi(idx % self.m).powi(2)
        }
    }

    fn from_spectrum(&self, mut spec: Vec<Complex<f64>>) -> Result<Self> {
        fft_nd(&mut spec, self.dims, self.m, true);
        Self::new(self.dims, self.m, self.circumference, self.origin, spec.iter().map(|c| c.re).collect())
    }

    fn multiply<F: Fn(usize) -> Complex<f64>>(&self, mult: F) -> Result<Self> {
        let spec = self.spectrum().iter().enumerate().map(|(i, &c)| c * mult(i)).collect();
        self.from_spectrum(spec)
    }

    /// `P_tau f`.
    pub fn heat_apply(&self, tau: f64) -> Result<Self> {
        if tau < 0.0 {
            return Err(Error::NegativeHeatTime(tau));
        }
        if tau == 0.0 {
            return Ok(self.clone());
        }
        self.multiply(|i| Complex::new((-0.5 * tau * self.xi_sq(i)).exp(), 0.0))
    }

    /// Spectral partial derivative along `axis`. The Nyquist mode is dropped.
    pub fn derivative(&self, axis: usize) -> Result<Self> {
        if axis >= self.dims {
            return Err(Error::Component(axis));
        }
        self.multiply(|i| {
            let k = if self.dims == 1 {
                i
            } else if axis == 0 {
                i / self.m
            } else {
                i % self.m
            };
            if k == self.m / 2 {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(0.0, self.xi(k))
            }
        })
    }

    /// `(1 - Laplacian)^{m/2} f`.
    pub fn bessel_potential(&self, order: f64) -> Result<Self> {
        self.multiply(|i| Complex::new((1.0 + self.xi_sq(i)).powf(0.5 * order), 0.0))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Grid `L^p` norm, `(h^d sum |v|^p)^{1/p}`; `p = inf` gives the max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().fold(0.0, |a, v| a.max(v.abs()));
        }
        let cell = self.spacing().powi(self.dims as i32);
        (cell * self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }

    /// `||f||_{W^{m,p}}` through the Bessel multiplier; exact Plancherel
    /// sum when `p = 2`.
    pub fn sobolev_norm(&self, order: f64, p: f64) -> Result<NormReport> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if p < 1.0 {
            return Err(Error::DegenerateFit(format!("Sobolev exponent p = {p} < 1")));
        }
        let (value, estimator) = if p == 2.0 {
            let n = self.values.len() as f64;
            let cell = self.spacing().powi(self.dims as i32);
            let s: f64 = self
                .spectrum()
                .iter()
                .enumerate()
                .map(|(i, c)| c.norm_sqr() * (1.0 + self.xi_sq(i)).powf(order))
                .sum();
            ((cell * s / n).sqrt(), "plancherel")
        } else {
            (self.bessel_potential(order)?.lp_norm(p), "bessel multiplier + grid quadrature")
        };
        Ok(NormReport {
            kind: NormKind::Sobolev { m: order, p },
            value,
            resolution: self.m,
            estimator: estimator.into(),
        })
    }

    /// Rows `x[,x2],value`.
    pub fn to_csv(&self) -> String {
        let xs = self.coordinates();
        let mut out = if self.dims == 1 { "x,value\n".to_string() } else { "x1,x2,value\n".to_string() };
        for (idx, v) in self.values.iter().enumerate() {
            if self.dims == 1 {
                out.push_str(&format!("{},{:.17e}\n", xs[idx], v));
            } else {
                out.push_str(&format!("{},{},{:.17e}\n", xs[idx / self.m], xs[idx % self.m], v));
            }
        }
        out
    }

    /// Reads the layout written by [`GridField::to_csv`]; the grid must be
    /// uniform, periodic and of power-of-two size.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in text.lines().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
            rows.push(row);
        }
        let dims = rows.first().map_or(1, |r| r.len().saturating_sub(1));
        let n = rows.len();
        let m = if dims == 2 { (n as f64).sqrt().round() as usize } else { n };
        if m < 2 {
            return Err(Error::GridNotPowerOfTwo(m));
        }
        let origin = rows[0][0];
        let h = if dims == 1 { rows[1][0] - rows[0][0] } else { rows[1][1] - rows[0][1] };
        let values = rows.iter().map(|r| r[dims]).collect();
        Self::new(dims, m, h * m as f64, origin, values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    Sobolev { m: f64, p: f64 },
    Holder { gamma: f64 },
    /// `||A||_{beta, order + gamma}` with `order` spatial derivatives.
    TwoParam { beta: f64, gamma: f64, order: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub kind: NormKind,
    pub value: f64,
    pub resolution: usize,
    pub estimator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingFit {
    pub slope: f64,
    pub slope_se: f64,
    /// `sup_tau tau^{gamma/2} ||P_tau f||_{W^{m,p}} / ||f||_{W^{m-gamma,p}}`.
    pub constant: f64,
    pub taus: Vec<f64>,
    pub norms: Vec<f64>,
    pub gamma: f64,
    pub m: f64,
    pub p: f64,
    pub resolution: usize,
}

/// `n` log-spaced heat times from `lo` to `hi`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n.max(2) - 1) as f64).exp())
        .collect()
}

/// Fits the blow-up rate of `||P_tau f||_{W^{m,p}}` as `tau -> 0`.
pub fn smoothing_check(f: &GridField, gamma: f64, m: f64, p: f64, taus: &[f64]) -> Result<SmoothingFit> {
    if taus.len() < 6 {
        return Err(Error::InsufficientScales {
            needed: 6,
            got: taus.len(),
        });
    }
    if let Some(&t) = taus.iter().find(|&&t| t < 0.0) {
        return Err(Error::NegativeHeatTime(t));
    }
    let norms = taus
        .iter()
        .map(|&t| Ok(f.heat_apply(t)?.sobolev_norm(m, p)?.value))
        .collect::<Result<Vec<f64>>>()?;
    if norms.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateFit("all heat-smoothed norms vanish".into()));
    }
    let fit = fit_loglog(taus, &norms).ok_or_else(|| Error::DegenerateFit("log-log fit failed".into()))?;
    let base = f.sobolev_norm(m - gamma, p)?.value;
    let constant = taus
        .iter()
        .zip(&norms)
        .map(|(t, n)| t.powf(0.5 * gamma) * n / base)
        .fold(0.0, f64::max);
    Ok(SmoothingFit {
        slope: fit.slope,
        slope_se: fit.slope_se,
        constant,
        taus: taus.to_vec(),
        norms,
        gamma,
        m,
        p,
        resolution: f.m(),
    })
}

/// One-dimensional sample on a uniform grid, periodic or not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    pub origin: f64,
    pub spacing: f64,
    pub points: usize,
    pub periodic: bool,
}

impl SpaceGrid {
    pub fn periodic(points: usize, circumference: f64) -> Self {
        Self {
            origin: 0.0,
            spacing: circumference / points as f64,
            points,
            periodic: true,
        }
    }

    /// `points` nodes covering `[lo, hi]` inclusive.
    pub fn window(lo: f64, hi: f64, points: usize) -> Self {
        Self {
            origin: lo,
            spacing: (hi - lo) / (points - 1) as f64,
            points,
            periodic: false,
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn hi(&self) -> f64 {
        self.x(self.points - 1)
    }

    /// Distance between nodes, the shorter way round when periodic.
    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        let d = i.abs_diff(j);
        let d = if self.periodic { d.min(self.points - d) } else { d };
        d as f64 * self.spacing
    }
}

/// First derivative on the grid: spectral when periodic (power-of-two
/// sizes), fourth-order finite differences otherwise.
pub fn grid_gradient(values: &[f64], grid: &SpaceGrid) -> Vec<f64> {
    let n = values.len();
    if grid.periodic && n.is_power_of_two() {
        let g = GridField::new(1, n, grid.spacing * n as f64, grid.origin, values.to_vec())
            .and_then(|f| f.derivative(0));
        if let Ok(g) = g {
            return g.values().to_vec();
        }
    }
    let h = grid.spacing;
    let at = |i: isize| -> f64 {
        if grid.periodic {
            values[i.rem_euclid(n as isize) as usize]
        } else {
            values[i.clamp(0, n as isize - 1) as usize]
        }
    };
    (0..n as isize)
        .map(|i| {
            let interior = grid.periodic || (i >= 2 && i + 2 < n as isize);
            if interior {
                (8.0 * (at(i + 1) - at(i - 1)) - (at(i + 2) - at(i - 2))) / (12.0 * h)
            } else if i == 0 {
                (at(1) - at(0)) / h
            } else if i == n as isize - 1 {
                (at(i) - at(i - 1)) / h
            } else {
                (at(i + 1) - at(i - 1)) / (2.0 * h)
            }
        })
        .collect()
}

/// Hölder seminorm `max |v_i - v_j| / |x_i - x_j|^gamma`: over all pairs
/// up to `FULL_PAIR_LIMIT` points, over dyadic lags beyond (a lower bound
/// that is sharp up to a constant for Hölder functions).
pub fn holder_seminorm(values: &[f64], grid: &SpaceGrid, gamma: f64) -> f64 {
    let n = values.len();
    let mut best: f64 = 0.0;
    if n <= FULL_PAIR_LIMIT {
        for i in 0..n {
            for j in i + 1..n {
                let d = grid.dist(i, j);
                best = best.max((values[i] - values[j]).abs() / d.powf(gamma));
            }
        }
        return best;
    }
    let max_lag = if grid.periodic { n / 2 } else { n - 1 };
    let mut lag = 1;
    while lag <= max_lag {
        let scale = (lag as f64 * grid.spacing).powf(gamma);
        let pairs = if grid.periodic { n } else { n - lag };
        for i in 0..pairs {
            let j = (i + lag) % n;
            best = best.max((values[i] - values[j]).abs() / scale);
        }
        lag *= 2;
    }
    best
}

pub const FULL_PAIR_LIMIT: usize = 256;

/// Grid proxy for `||f||_{C^{1+gamma}} = sup|f| + sup|f'| + [f']_gamma`.
pub fn c1_gamma_proxy(values: &[f64], grid: &SpaceGrid, gamma: f64) -> f64 {
    if values.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let grad = grid_gradient(values, grid);
    let sup = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let gsup = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    sup + gsup + holder_seminorm(&grad, grid, gamma)
}

/// Time points used by the two-parameter norm; tables are subsampled
/// evenly down to this many.
pub const TWO_PARAM_TIME_POINTS: usize = 64;

fn subsample(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut idx: Vec<usize> = (0..cap).map(|k| k * (n - 1) / (cap - 1)).collect();
    idx.dedup();
    idx
}

/// `||A||_{beta, gamma}` for `gamma <= 1`; for `gamma = 1 + g` the
/// `||A||_{beta, 1+g}` norm with spectral or finite-difference gradients.
pub fn holder_two_param_norm(a: &AveragedField, beta: f64, gamma: f64) -> NormReport {
    let order = if gamma > 1.0 { 1 } else { 0 };
    let g = gamma - order as f64;
    let idx = subsample(a.n_times(), TWO_PARAM_TIME_POINTS);
    let mut value: f64 = 0.0;
    for (p, &i) in idx.iter().enumerate() {
        for &j in &idx[p + 1..] {
            let dt = (a.times[j] - a.times[i]).powf(beta);
            let d = a.delta(i, j);
            let v = if order == 0 {
                holder_seminorm(&d, &a.space, g)
            } else {
                let grad = grid_gradient(&d, &a.space);
                let sup = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let gsup = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                holder_seminorm(&grad, &a.space, g) + sup + gsup
            };
            value = value.max(v / dt);
        }
    }
    NormReport {
        kind: NormKind::TwoParam { beta, gamma: g, order },
        value,
        resolution: a.space.points,
        estimator: format!(
            "sup over {} time points and {} space points; {}",
            idx.len(),
            a.space.points,
            if a.space.points <= FULL_PAIR_LIMIT { "all space pairs" } else { "dyadic space lags" }
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub fit: LineFit,
    pub gaps: Vec<f64>,
    /// `sup_s ||delta A_{s,s+gap}||_{C^{1+gamma}}` proxy per gap.
    pub sups: Vec<f64>,
    pub resolution: usize,
}

pub const MIN_EXPONENT_SCALES: usize = 4;

/// Time-regularity exponent of `A` from dyadic gaps of the table.
pub fn holder_exponent_fit(a: &AveragedField, gamma: f64) -> Result<ExponentFit> {
    let n = a.n_times();
    let mut gaps = Vec::new();
    let mut g = 1;
    while 2 * g < n {
        gaps.push(g);
        g *= 2;
    }
    if gaps.len() < MIN_EXPONENT_SCALES {
        return Err(Error::InsufficientScales {
            needed: MIN_EXPONENT_SCALES,
            got: gaps.len(),
        });
    }
    let sups: Vec<f64> = gaps
        .iter()
        .map(|&g| {
            subsample(n - g, TWO_PARAM_TIME_POINTS)
                .into_iter()
                .map(|s| c1_gamma_proxy(&a.delta(s, s + g), &a.space, gamma))
                .fold(0.0, f64::max)
        })
        .collect();
    let times: Vec<f64> = gaps.iter().map(|&g| g as f64 * a.dt()).collect();
    let fit = fit_loglog(&times, &sups).ok_or_else(|| Error::DegenerateFit("A has vanishing increments".into()))?;
    Ok(ExponentFit {
        fit,
        gaps: times,
        sups,
        resolution: a.space.points,
    })
}

/// Ratio `||f||_{C^{1+gamma}} / ||f||_{W^{1+d/p+eps1, p}}` on a periodic grid.
pub fn sobolev_embedding_probe(f: &GridField, p: f64, eps1: f64, gamma: f64) -> Result<f64> {
    if gamma >= eps1 {
        return Err(Error::EmbeddingExponent { gamma, epsilon: eps1 });
    }
    if f.dims() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: f.dims(),
        });
    }
    let grid = SpaceGrid {
        origin: f.origin(),
        spacing: f.spacing(),
        points: f.m(),
        periodic: true,
    };
    let num = c1_gamma_proxy(f.values(), &grid, gamma);
    let den = f.sobolev_norm(1.0 + 1.0 / p + eps1, p)?.value;
    if num == 0.0 && den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// Fit of `log y` on `log x`, requiring at least `needed` points.
pub fn scale_fit(xs: &[f64], ys: &[f64], needed: usize) -> Result<LineFit> {
    if xs.len() < needed {
        return Err(Error::InsufficientScales {
            needed,
            got: xs.len(),
        });
    }
    fit_loglog(xs, ys).ok_or_else(|| Error::DegenerateFit("non-positive values in log-log fit".into()))
}
