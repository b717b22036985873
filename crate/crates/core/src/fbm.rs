//! Two-sided Brownian lattices and the moving-average fractional Brownian
//! motion built on them.
//!
//! The fBm is the Mandelbrot-Van Ness integral
//! `W(s) = int_{-inf}^s ((s-u)_+^{H-1/2} - (-u)_+^{H-1/2}) dB(u)` with the
//! left tail truncated at `-L`. Each lattice cell contributes its increment
//! weighted by the exact cell average of the kernel, so the singularity at
//! `u -> s` for `H < 1/2` never gets sampled pointwise.
//!
//! For `u <= r` the split `W(r) = W1(u, r) + W2(u, r)` separates the part
//! driven by increments in `[u, r]` (independent of the past) from the
//! adapted part. `W2` is always formed as the difference, so the
//! reconstruction holds to rounding.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::path_rng;

const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub dims: usize,
    pub step: f64,
    /// Left extent `L`: the lattice starts at `-L`.
    pub left: f64,
    /// Right endpoint `T`.
    pub horizon: f64,
}

fn integral_ratio(what: &'static str, value: f64, step: f64) -> Result<usize> {
    let ratio = value / step;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > GRID_TOL * ratio.max(1.0) {
        return Err(Error::NonIntegralCells { what, value, step });
    }
    Ok(rounded as usize)
}

impl LatticeConfig {
    pub fn new(dims: usize, step: f64, left: f64, horizon: f64) -> Result<Self> {
        let cfg = Self {
            dims,
            step,
            left,
            horizon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default left horizon of fifty times the right endpoint.
    pub fn with_default_left(dims: usize, step: f64, horizon: f64) -> Result<Self> {
        Self::new(dims, step, 50.0 * horizon, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::NonPositiveStep(self.step));
        }
        if !(self.left > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::NonPositiveHorizon {
                left: self.left,
                horizon: self.horizon,
            });
        }
        if self.dims == 0 {
            return Err(Error::Dimension {
                expected: 1,
                got: 0,
            });
        }
        integral_ratio("T+L", self.left + self.horizon, self.step)?;
        integral_ratio("L", self.left, self.step)?;
        integral_ratio("T", self.horizon, self.step)?;
        Ok(())
    }

    /// Number of cells in `[-L, 0)`.
    pub fn n_left(&self) -> usize {
        (self.left / self.step).round() as usize
    }

    /// Number of cells in `[0, T)`.
    pub fn n_right(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    pub fn n_cells(&self) -> usize {
        self.n_left() + self.n_right()
    }
}

/// Discretized two-sided Brownian motion. Cell `c` (stored at offset
/// `c + n_left`) covers `[c*step, (c+1)*step)` for `c` in `-n_left..n_right`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianLattice {
    config: LatticeConfig,
    increments: Vec<Vec<f64>>,
    pub seed: u64,
    pub path_index: u64,
}

pub fn sample_lattice(config: &LatticeConfig, seed: u64, path_index: u64) -> Result<BrownianLattice> {
    config.validate()?;
    let mut rng = path_rng(seed, path_index);
    let sd = config.step.sqrt();
    let n = config.n_cells();
    let increments = (0..config.dims)
        .map(|_| {
            (0..n)
                .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    Ok(BrownianLattice {
        config: *config,
        increments,
        seed,
        path_index,
    })
}

impl BrownianLattice {
    pub fn from_increments(config: LatticeConfig, increments: Vec<Vec<f64>>) -> Result<Self> {
        config.validate()?;
        if increments.len() != config.dims {
            return Err(Error::Dimension {
                expected: config.dims,
                got: increments.len(),
            });
        }
        for inc in &increments {
            if inc.len() != config.n_cells() {
                return Err(Error::Dimension {
                    expected: config.n_cells(),
                    got: inc.len(),
                });
            }
        }
        Ok(Self {
            config,
            increments,
            seed: 0,
            path_index: 0,
        })
    }

    pub fn zeros(config: LatticeConfig) -> Result<Self> {
        let n = config.n_cells();
        Self::from_increments(config, vec![vec![0.0; n]; config.dims])
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn dims(&self) -> usize {
        self.config.dims
    }

    pub fn step(&self) -> f64 {
        self.config.step
    }

    pub fn n_left(&self) -> usize {
        self.config.n_left()
    }

    pub fn n_right(&self) -> usize {
        self.config.n_right()
    }

    /// All increments of component `j`, tail first.
    pub fn increments(&self, j: usize) -> &[f64] {
        &self.increments[j]
    }

    /// Increments of cells inside `[0, T)`.
    pub fn post_increments(&self, j: usize) -> &[f64] {
        &self.increments[j][self.n_left()..]
    }

    /// Index of a non-negative grid time, `t = index * step`.
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let x = t / self.step();
        let i = x.round();
        if (x - i).abs() > GRID_TOL * x.abs().max(1.0) || i < 0.0 || i as usize > self.n_right() {
            return Err(Error::NotOnLattice(t));
        }
        Ok(i as usize)
    }

    /// Index of the last grid point at or before `t` (clamped to `[0, T]`).
    pub fn floor_index(&self, t: f64) -> usize {
        let x = (t / self.step() + GRID_TOL).floor();
        (x.max(0.0) as usize).min(self.n_right())
    }

    /// `B_j` on the non-negative grid, with `B_j(0) = 0`.
    pub fn brownian(&self, j: usize) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.n_right() + 1);
        out.push(0.0);
        for &db in self.post_increments(j) {
            acc += db;
            out.push(acc);
        }
        out
    }

    /// Merges `factor` adjacent cells into one. The coarse lattice is a
    /// functional of the same Brownian path.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Coarsening {
                factor,
                reason: "factor must be positive".into(),
            });
        }
        if self.n_left() % factor != 0 || self.n_right() % factor != 0 {
            return Err(Error::Coarsening {
                factor,
                reason: format!(
                    "cell counts {} and {} are not divisible",
                    self.n_left(),
                    self.n_right()
                ),
            });
        }
        let config = LatticeConfig {
            step: self.step() * factor as f64,
            ..self.config
        };
        let increments = self
            .increments
            .iter()
            .map(|inc| inc.chunks(factor).map(|c| c.iter().sum()).collect())
            .collect();
        Ok(Self {
            config,
            increments,
            seed: self.seed,
            path_index: self.path_index,
        })
    }
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) || (hurst - 0.5).abs() < 1e-12 {
        return Err(Error::InvalidHurst(hurst));
    }
    Ok(())
}

/// Cell averages of the kernel `v -> v^{H-1/2}` over `[(m-1) step, m step]`
/// for `m = 1..=count` (entry `m - 1`).
pub fn kernel_cell_averages(hurst: f64, step: f64, count: usize) -> Vec<f64> {
    let a = hurst + 0.5;
    let scale = step.powf(hurst - 0.5) / a;
    (1..=count)
        .map(|m| {
            let m = m as f64;
            scale * (m.powf(a) - (m - 1.0).powf(a))
        })
        .collect()
}

/// `Var(W(1))` for the unnormalized moving-average fBm:
/// `Gamma(H+1/2)^2 / (Gamma(2H+1) sin(pi H))`.
pub fn variance_constant(hurst: f64) -> f64 {
    use statrs::function::gamma::gamma;
    gamma(hurst + 0.5).powi(2) / (gamma(2.0 * hurst + 1.0) * (std::f64::consts::PI * hurst).sin())
}

/// Variance of `W(T)` lost by truncating the tail at `-L`:
/// `int_L^inf ((T+v)^{H-1/2} - v^{H-1/2})^2 dv`.
pub fn truncation_variance(hurst: f64, left: f64, horizon: f64) -> f64 {
    use gauss_quad::GaussLegendre;
    let rule = GaussLegendre::new(std::num::NonZeroUsize::new(30).unwrap());
    let e = hurst - 0.5;
    let f = |v: f64| ((horizon + v).powf(e) - v.powf(e)).powi(2);
    // integrate in log v over [ln L, ln L + 40] in unit panels
    let mut total = 0.0;
    let l0 = left.ln();
    for k in 0..40 {
        let (a, b) = (l0 + k as f64, l0 + k as f64 + 1.0);
        total += rule.integrate(a, b, |s| {
            let v = s.exp();
            f(v) * v
        });
    }
    let far = left * 40f64.exp();
    // asymptotic remainder: (e T)^2 v^{2e-2}
    total + (e * horizon).powi(2) * far.powf(2.0 * e - 1.0) / (1.0 - 2.0 * e)
}

/// Precomputed kernel data for generating fBm values on one lattice shape.
#[derive(Clone)]
pub struct FbmGenerator {
    hurst: f64,
    config: LatticeConfig,
    eval_indices: Vec<usize>,
    kernel: Vec<f64>,
    fft: Option<FftConvolution>,
}

#[derive(Clone)]
struct FftConvolution {
    size: usize,
    kernel_hat: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FbmGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmGenerator")
            .field("hurst", &self.hurst)
            .field("config", &self.config)
            .field("n_eval", &self.eval_indices.len())
            .field("fft", &self.fft.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSum {
    /// Direct `O(cells)` sum per evaluation point.
    Direct,
    /// One FFT convolution for the whole grid.
    Fft,
    Auto,
}

impl FbmGenerator {
    pub fn new(config: &LatticeConfig, hurst: f64, eval_grid: &[f64], method: KernelSum) -> Result<Self> {
        config.validate()?;
        check_hurst(hurst)?;
        let step = config.step;
        let eval_indices = eval_grid
            .iter()
            .map(|&t| {
                let x = t / step;
                let i = x.round();
                if (x - i).abs() > GRID_TOL * x.abs().max(1.0) || i < 0.0 || i as usize > config.n_right() {
                    Err(Error::NotOnLattice(t))
                } else {
                    Ok(i as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let total = config.n_cells();
        let kernel = kernel_cell_averages(hurst, step, total);
        let use_fft = match method {
            KernelSum::Direct => false,
            KernelSum::Fft => true,
            KernelSum::Auto => eval_indices.len() > 32,
        };
        let fft = use_fft.then(|| {
            let size = (2 * total + 1).next_power_of_two();
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(size);
            let inverse = planner.plan_fft_inverse(size);
            let mut kernel_hat = vec![Complex::new(0.0, 0.0); size];
            for (m, &k) in kernel.iter().enumerate() {
                kernel_hat[m + 1] = Complex::new(k, 0.0);
            }
            forward.process(&mut kernel_hat);
            FftConvolution {
                size,
                kernel_hat,
                forward,
                inverse,
            }
        });
        Ok(Self {
            hurst,
            config: *config,
            eval_indices,
            kernel,
            fft,
        })
    }

    /// Generator evaluating on every non-negative lattice point.
    pub fn full_grid(config: &LatticeConfig, hurst: f64) -> Result<Self> {
        let grid: Vec<f64> = (0..=config.n_right()).map(|i| i as f64 * config.step).collect();
        Self::new(config, hurst, &grid, KernelSum::Auto)
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// `X(i) = sum_{cells c < i} kbar(i - c) dB_c` at lattice index `i`
    /// (relative to 0), for every evaluation index plus index 0.
    fn moving_average(&self, increments: &[f64], targets: &[usize]) -> Vec<f64> {
        let n_left = self.config.n_left();
        match &self.fft {
            Some(conv) => {
                let mut buf = vec![Complex::new(0.0, 0.0); conv.size];
                for (p, &x) in increments.iter().enumerate() {
                    buf[p] = Complex::new(x, 0.0);
                }
                conv.forward.process(&mut buf);
                for (b, k) in buf.iter_mut().zip(&conv.kernel_hat) {
                    *b *= k;
                }
                conv.inverse.process(&mut buf);
                let scale = 1.0 / conv.size as f64;
                targets.iter().map(|&i| buf[n_left + i].re * scale).collect()
            }
            None => targets
                .iter()
                .map(|&i| {
                    let q = n_left + i;
                    increments[..q]
                        .iter()
                        .enumerate()
                        .map(|(p, &x)| self.kernel[q - p - 1] * x)
                        .sum()
                })
                .collect(),
        }
    }

    pub fn generate(&self, lattice: &BrownianLattice) -> Result<FbmPath> {
        if lattice.config() != &self.config {
            return Err(Error::GridMismatch(format!(
                "generator built for {:?}, lattice has {:?}",
                self.config,
                lattice.config()
            )));
        }
        let mut targets = Vec::with_capacity(self.eval_indices.len() + 1);
        targets.push(0);
        targets.extend_from_slice(&self.eval_indices);
        let values = (0..lattice.dims())
            .map(|j| {
                let x = self.moving_average(lattice.increments(j), &targets);
                let origin = x[0];
                x[1..].iter().map(|v| v - origin).collect()
            })
            .collect();
        Ok(FbmPath {
            hurst: self.hurst,
            step: self.config.step,
            eval_indices: self.eval_indices.clone(),
            values,
            post: (0..lattice.dims()).map(|j| lattice.post_increments(j).to_vec()).collect(),
            kernel: self.kernel[..self.config.n_right()].to_vec(),
        })
    }
}

impl FbmGenerator {
    /// `W2(c, i)` for all lattice pairs `c <= i`, built forward from the
    /// pre-0 part so that entry `(c, i)` never reads a cell at or after `c`.
    /// Needs a full-grid generator.
    pub fn adapted_table(&self, lattice: &BrownianLattice) -> Result<AdaptedTable> {
        let n = self.config.n_right();
        if self.eval_indices.len() != n + 1 || self.eval_indices[0] != 0 {
            return Err(Error::GridMismatch("adapted table needs the full lattice grid".into()));
        }
        let nl = self.config.n_left();
        let past = BrownianLattice::from_increments(
            *lattice.config(),
            (0..lattice.dims())
                .map(|j| {
                    let mut inc = lattice.increments(j).to_vec();
                    inc[nl..].iter_mut().for_each(|v| *v = 0.0);
                    inc
                })
                .collect(),
        )?;
        let tail = self.generate(&past)?;
        let w2 = (0..lattice.dims())
            .map(|j| {
                let post = lattice.post_increments(j);
                let start = tail.values(j);
                let mut tab = vec![0.0; (n + 1) * (n + 2) / 2];
                for i in 0..=n {
                    let row = AdaptedTable::slot(0, i);
                    let mut acc = start[i];
                    tab[row] = acc;
                    for c in 0..i {
                        acc += self.kernel[i - c - 1] * post[c];
                        tab[row + c + 1] = acc;
                    }
                }
                tab
            })
            .collect();
        Ok(AdaptedTable { n, w2 })
    }
}

/// Triangular table of `W2(c, i)` over lattice indices `c <= i`.
#[derive(Debug, Clone)]
pub struct AdaptedTable {
    n: usize,
    w2: Vec<Vec<f64>>,
}

impl AdaptedTable {
    #[inline]
    fn slot(c: usize, i: usize) -> usize {
        i * (i + 1) / 2 + c
    }

    /// Largest lattice index.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.w2.len()
    }

    #[inline]
    pub fn w2(&self, j: usize, c: usize, i: usize) -> f64 {
        debug_assert!(c <= i && i <= self.n);
        self.w2[j][Self::slot(c, i)]
    }

    /// `W(i) = W2(i, i)`.
    #[inline]
    pub fn w(&self, j: usize, i: usize) -> f64 {
        self.w2(j, i, i)
    }
}

/// fBm values on an evaluation grid plus what is needed to form
/// `W1(u, r)` for any pair of evaluation points.
#[derive(Debug, Clone)]
pub struct FbmPath {
    hurst: f64,
    step: f64,
    eval_indices: Vec<usize>,
    values: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    kernel: Vec<f64>,
}

pub fn fbm_from_lattice(lattice: &BrownianLattice, hurst: f64, eval_grid: &[f64]) -> Result<FbmPath> {
    FbmGenerator::new(lattice.config(), hurst, eval_grid, KernelSum::Auto)?.generate(lattice)
}

impl FbmPath {
    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.eval_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eval_indices.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.eval_indices.iter().map(|&i| i as f64 * self.step).collect()
    }

    /// Lattice index of each evaluation point.
    pub fn eval_indices(&self) -> &[usize] {
        &self.eval_indices
    }

    /// `W_j` at every evaluation point.
    pub fn values(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    /// Kernel cell averages `kbar(m)` for `m = 1..` (entry `m - 1`).
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// Increments of component `j` on `[0, T)`.
    pub fn increments(&self, j: usize) -> &[f64] {
        &self.post[j]
    }

    pub fn eval_position(&self, t: f64) -> Result<usize> {
        let x = t / self.step;
        let i = x.round();
        if (x - i).abs() > GRID_TOL * x.abs().max(1.0) || i < 0.0 {
            return Err(Error::NotOnEvalGrid(t));
        }
        self.eval_indices
            .binary_search(&(i as usize))
            .map_err(|_| Error::NotOnEvalGrid(t))
    }

    pub fn value_at(&self, t: f64) -> Result<Vec<f64>> {
        let p = self.eval_position(t)?;
        Ok(self.values.iter().map(|v| v[p]).collect())
    }

    fn w1_indices(&self, u_idx: usize, r_idx: usize) -> Vec<f64> {
        self.post
            .iter()
            .map(|inc| {
                (u_idx..r_idx)
                    .map(|c| self.kernel[r_idx - c - 1] * inc[c])
                    .sum()
            })
            .collect()
    }

    /// Part of `W(r)` driven by increments in `[u, r]`.
    pub fn w1(&self, u: f64, r: f64) -> Result<Vec<f64>> {
        if u > r {
            return Err(Error::ReversedTimes { u, r });
        }
        let pu = self.eval_position(u)?;
        let pr = self.eval_position(r)?;
        Ok(self.w1_indices(self.eval_indices[pu], self.eval_indices[pr]))
    }

    /// Adapted part `W(r) - W1(u, r)`.
    pub fn w2(&self, u: f64, r: f64) -> Result<Vec<f64>> {
        let w1 = self.w1(u, r)?;
        let pr = self.eval_position(r)?;
        Ok(self
            .values
            .iter()
            .zip(w1)
            .map(|(v, a)| v[pr] - a)
            .collect())
    }

    /// Materializes `W1` for all evaluation pairs `u <= r`.
    pub fn pair_table(&self) -> PairTable {
        let n = self.eval_indices.len();
        let mut w1 = vec![Vec::with_capacity(n * (n + 1) / 2); self.dims()];
        for (j, inc) in self.post.iter().enumerate() {
            for pr in 0..n {
                let r_idx = self.eval_indices[pr];
                let row_start = w1[j].len();
                w1[j].resize(row_start + pr + 1, 0.0);
                // walk u backwards from r, accumulating cells
                let mut acc = 0.0;
                let mut cell = r_idx;
                for pu in (0..=pr).rev() {
                    let u_idx = self.eval_indices[pu];
                    while cell > u_idx {
                        cell -= 1;
                        acc += self.kernel[r_idx - cell - 1] * inc[cell];
                    }
                    w1[j][row_start + pu] = acc;
                }
            }
        }
        let w2 = w1
            .iter()
            .zip(&self.values)
            .map(|(tab, vals)| {
                let mut out = Vec::with_capacity(tab.len());
                for (pr, &v) in vals.iter().enumerate() {
                    let start = pr * (pr + 1) / 2;
                    out.extend(tab[start..=start + pr].iter().map(|a| v - a));
                }
                out
            })
            .collect();
        PairTable { n, w1, w2 }
    }

    /// Rows `t, W_1 .. W_d`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for j in 0..self.dims() {
            out.push_str(&format!(",W{}", j + 1));
        }
        out.push('\n');
        for (p, t) in self.times().iter().enumerate() {
            out.push_str(&format!("{t}"));
            for v in &self.values {
                out.push_str(&format!(",{:.17e}", v[p]));
            }
            out.push('\n');
        }
        out
    }
}

/// Triangular table of `W1(u, r)` and `W2(u, r)` indexed by evaluation
/// positions `u <= r`.
#[derive(Debug, Clone)]
pub struct PairTable {
    n: usize,
    w1: Vec<Vec<f64>>,
    w2: Vec<Vec<f64>>,
}

impl PairTable {
    #[inline]
    fn slot(pu: usize, pr: usize) -> usize {
        pr * (pr + 1) / 2 + pu
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn w1(&self, j: usize, pu: usize, pr: usize) -> f64 {
        debug_assert!(pu <= pr);
        self.w1[j][Self::slot(pu, pr)]
    }

    #[inline]
    pub fn w2(&self, j: usize, pu: usize, pr: usize) -> f64 {
        debug_assert!(pu <= pr);
        self.w2[j][Self::slot(pu, pr)]
    }

    /// Row `r`: `W2(u, r)` for `u = 0..=r`.
    #[inline]
    pub fn w2_row(&self, j: usize, pr: usize) -> &[f64] {
        let s = Self::slot(0, pr);
        &self.w2[j][s..=s + pr]
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// Exact-covariance sampler used only to cross-check the lattice engine:
/// `Cov(W(s), W(t)) = c_H/2 (s^{2H} + t^{2H} - |t-s|^{2H})`.
pub fn cholesky_fbm<R: Rng>(hurst: f64, times: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_hurst(hurst)?;
    let c = variance_constant(hurst);
    let h2 = 2.0 * hurst;
    let cov: Vec<Vec<f64>> = times
        .iter()
        .map(|&s| {
            times
                .iter()
                .map(|&t| 0.5 * c * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2)))
                .collect()
        })
        .collect();
    let l = cholesky(&cov).ok_or_else(|| Error::GridMismatch("covariance not positive definite".into()))?;
    let z: Vec<f64> = times.iter().map(|_| rng.sample(StandardNormal)).collect();
    Ok(l.iter()
        .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(step: f64, left: f64, horizon: f64) -> LatticeConfig {
        LatticeConfig::new(1, step, left, horizon).unwrap()
    }

    #[test]
    fn lattice_shape_and_determinism() {
        let c = cfg(0.5, 1.0, 1.0);
        let a = sample_lattice(&c, 7, 0).unwrap();
        assert_eq!(a.increments(0).len(), 4);
        assert!(a.increments(0).iter().all(|x| x.is_finite()));
        let b = sample_lattice(&c, 7, 0).unwrap();
        assert_eq!(a, b);
        let other = sample_lattice(&c, 7, 1).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn lattice_rejects_bad_configs() {
        assert!(matches!(LatticeConfig::new(1, 0.0, 1.0, 1.0), Err(Error::NonPositiveStep(_))));
        assert!(matches!(LatticeConfig::new(1, -0.1, 1.0, 1.0), Err(Error::NonPositiveStep(_))));
        assert!(matches!(
            LatticeConfig::new(1, 0.3, 1.0, 1.0),
            Err(Error::NonIntegralCells { .. })
        ));
    }

    #[test]
    fn zero_lattice_gives_zero_fbm() {
        let c = cfg(0.25, 2.0, 1.0);
        let lat = BrownianLattice::zeros(c).unwrap();
        let path = fbm_from_lattice(&lat, 0.3, &[0.0, 0.5, 1.0]).unwrap();
        assert!(path.values(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hurst_and_grid_errors() {
        let c = cfg(0.25, 1.0, 1.0);
        let lat = sample_lattice(&c, 1, 0).unwrap();
        assert!(matches!(fbm_from_lattice(&lat, 0.5, &[1.0]), Err(Error::InvalidHurst(_))));
        assert!(matches!(fbm_from_lattice(&lat, 1.2, &[1.0]), Err(Error::InvalidHurst(_))));
        assert!(matches!(fbm_from_lattice(&lat, 0.3, &[0.3]), Err(Error::NotOnLattice(_))));
        let path = fbm_from_lattice(&lat, 0.3, &[0.0, 0.5, 1.0]).unwrap();
        assert!(matches!(path.w1(1.0, 0.5), Err(Error::ReversedTimes { .. })));
    }

    #[test]
    fn fft_and_direct_sums_agree() {
        let c = LatticeConfig::new(2, 1.0 / 64.0, 3.0, 1.0).unwrap();
        let lat = sample_lattice(&c, 11, 5).unwrap();
        let grid: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        for h in [0.2, 0.7] {
            let a = FbmGenerator::new(&c, h, &grid, KernelSum::Direct).unwrap().generate(&lat).unwrap();
            let b = FbmGenerator::new(&c, h, &grid, KernelSum::Fft).unwrap().generate(&lat).unwrap();
            for j in 0..2 {
                for (x, y) in a.values(j).iter().zip(b.values(j)) {
                    assert!((x - y).abs() < 1e-11, "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn w1_empty_and_reconstruction() {
        let c = cfg(1.0 / 32.0, 2.0, 1.0);
        let lat = sample_lattice(&c, 3, 9).unwrap();
        let grid: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
        let path = fbm_from_lattice(&lat, 0.3, &grid).unwrap();
        assert_eq!(path.w1(0.5, 0.5).unwrap(), vec![0.0]);
        let total = path.value_at(0.75).unwrap()[0];
        let sum = path.w1(0.0, 0.75).unwrap()[0] + path.w2(0.0, 0.75).unwrap()[0];
        assert!((sum - total).abs() <= 1e-15 * total.abs().max(1.0));
        let table = path.pair_table();
        for pr in 0..grid.len() {
            for pu in 0..=pr {
                let direct = path.w1(grid[pu], grid[pr]).unwrap()[0];
                assert!((table.w1(0, pu, pr) - direct).abs() < 1e-12);
                let recon = table.w1(0, pu, pr) + table.w2(0, pu, pr);
                assert!((recon - path.values(0)[pr]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn w1_uses_only_cells_inside_window() {
        let c = cfg(1.0 / 16.0, 1.0, 1.0);
        let lat = sample_lattice(&c, 2, 0).unwrap();
        let grid: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        let base = fbm_from_lattice(&lat, 0.7, &grid).unwrap().w1(0.25, 0.75).unwrap()[0];
        let mut inc = lat.increments(0).to_vec();
        let n_left = lat.n_left();
        // perturb every cell outside [0.25, 0.75)
        for (p, x) in inc.iter_mut().enumerate() {
            let cell = p as i64 - n_left as i64;
            if !(4..12).contains(&cell) {
                *x += 1.0;
            }
        }
        let lat2 = BrownianLattice::from_increments(c, vec![inc]).unwrap();
        let w = fbm_from_lattice(&lat2, 0.7, &grid).unwrap().w1(0.25, 0.75).unwrap()[0];
        assert_eq!(w, base);
    }

    #[test]
    fn coarsening_sums_cells() {
        let c = cfg(0.125, 1.0, 1.0);
        let lat = sample_lattice(&c, 5, 0).unwrap();
        let coarse = lat.coarsen(2).unwrap();
        assert_eq!(coarse.step(), 0.25);
        assert!((coarse.increments(0)[0] - lat.increments(0)[0] - lat.increments(0)[1]).abs() < 1e-15);
        assert!(lat.coarsen(3).is_err());
        let b = lat.brownian(0);
        let bc = coarse.brownian(0);
        assert!((b[8] - bc[4]).abs() < 1e-14);
    }

    #[test]
    fn variance_constant_matches_known_values() {
        // Brownian motion limit: c_{1/2} = 1
        assert!((variance_constant(0.5) - 1.0).abs() < 1e-12);
        assert!(variance_constant(0.3) > 1.0 && variance_constant(0.7) < 1.0);
    }

    #[test]
    fn truncation_variance_decreases_with_left() {
        let a = truncation_variance(0.7, 10.0, 1.0);
        let b = truncation_variance(0.7, 50.0, 1.0);
        assert!(a > b && b > 0.0);
    }
}
