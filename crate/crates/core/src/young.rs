//! Nonlinear Young integrals `int A_dr(Y_r)`, the one-step solver for
//! `Y_t = Y_0 + int_0^t A_dr(Y_r)` and reconstruction `X = Y + W`.
//!
//! Increments are addressed by time-grid indices: every partition point is
//! a node of the grid on which `delta A` is available.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::averaging::AveragedField;
use crate::error::{Error, Result};
use crate::fbm::FbmPath;
use crate::field::FieldSpec;
use crate::space::holder_exponent_fit;
use crate::stats::fit_loglog;

pub const MAX_DEPTH: usize = 16;

/// Source of increments `delta A_{t_i, t_j}(y)` on a fixed time grid.
pub trait Increments {
    fn times(&self) -> &[f64];
    fn delta(&self, i: usize, j: usize, y: f64) -> Result<f64>;
    /// Spatial window outside which `delta A` is unavailable.
    fn window(&self) -> Option<(f64, f64)> {
        None
    }
}

impl Increments for AveragedField {
    fn times(&self) -> &[f64] {
        &self.times
    }

    fn delta(&self, i: usize, j: usize, y: f64) -> Result<f64> {
        self.delta_at(i, j, y).map_err(|e| match e {
            Error::LeftWindow { y, lo, hi, .. } => Error::LeftWindow {
                t: self.times[i],
                y,
                lo,
                hi,
            },
            e => e,
        })
    }

    fn window(&self) -> Option<(f64, f64)> {
        (!self.space.periodic).then(|| (self.space.origin, self.space.hi()))
    }
}

/// `delta A_{s,t}(y) = A(t, y) - A(s, y)` from a closed form on a uniform
/// grid of `2^levels` steps over `[0, horizon]`.
pub struct ClosedForm<F> {
    times: Vec<f64>,
    a: F,
}

impl<F: Fn(f64, f64) -> f64> ClosedForm<F> {
    pub fn new(horizon: f64, levels: u32, a: F) -> Self {
        let n = 1usize << levels;
        Self {
            times: (0..=n).map(|i| horizon * i as f64 / n as f64).collect(),
            a,
        }
    }
}

impl<F: Fn(f64, f64) -> f64> Increments for ClosedForm<F> {
    fn times(&self) -> &[f64] {
        &self.times
    }

    fn delta(&self, i: usize, j: usize, y: f64) -> Result<f64> {
        Ok((self.a)(self.times[j], y) - (self.a)(self.times[i], y))
    }
}

/// Exact-in-space increments `int_u^v b(s, y + W_s) ds` by the trapezoid
/// rule on the noise grid; no spatial interpolation.
pub struct PathIncrements<'a> {
    b: &'a FieldSpec,
    times: Vec<f64>,
    w: Vec<f64>,
}

impl<'a> PathIncrements<'a> {
    /// `w` holds the noise on `times`, starting at `W_0 = 0`.
    pub fn new(b: &'a FieldSpec, times: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if !b.is_deterministic() {
            return Err(Error::RandomField(b.id.clone()));
        }
        if b.dims != 1 || w.len() != times.len() {
            return Err(Error::GridMismatch(format!(
                "need a 1-d drift and one noise value per time ({} vs {})",
                w.len(),
                times.len()
            )));
        }
        Ok(Self { b, times, w })
    }

    pub fn from_path(b: &'a FieldSpec, path: &FbmPath) -> Result<Self> {
        let (times, w) = path_with_origin(path)?;
        Self::new(b, times, w)
    }
}

impl Increments for PathIncrements<'_> {
    fn times(&self) -> &[f64] {
        &self.times
    }

    fn delta(&self, i: usize, j: usize, y: f64) -> Result<f64> {
        let f = |k: usize| self.b.time.value(self.times[k]) * self.b.spatial.value(&[y + self.w[k]]);
        let mut total = 0.0;
        let mut prev = f(i);
        for k in i..j {
            let next = f(k + 1);
            total += 0.5 * (self.times[k + 1] - self.times[k]) * (prev + next);
            prev = next;
        }
        Ok(total)
    }
}

/// Times and values of a 1-d path with `(0, 0)` prepended when missing.
fn path_with_origin(path: &FbmPath) -> Result<(Vec<f64>, Vec<f64>)> {
    if path.dims() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: path.dims(),
        });
    }
    let (t, v) = (path.times(), path.values(0));
    if t.first().is_some_and(|t0| t0.abs() < 1e-12) {
        return Ok((t, v.to_vec()));
    }
    let mut times = vec![0.0];
    times.extend_from_slice(&t);
    let mut w = vec![0.0];
    w.extend_from_slice(v);
    Ok((times, w))
}

/// Ordered node indices `i_0 < .. < i_k` into an increment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub nodes: Vec<usize>,
    /// Dyadic refinement level, when the partition is dyadic.
    pub level: Option<usize>,
}

impl Partition {
    /// `2^level` equal pieces of `[lo, hi]`; needs `2^level | hi - lo`.
    pub fn dyadic(lo: usize, hi: usize, level: usize) -> Result<Self> {
        let pieces = 1usize << level;
        if hi <= lo || (hi - lo) % pieces != 0 {
            return Err(Error::GridMismatch(format!(
                "[{lo}, {hi}] cannot be split into {pieces} grid pieces"
            )));
        }
        let step = (hi - lo) / pieces;
        Ok(Self {
            nodes: (0..=pieces).map(|k| lo + k * step).collect(),
            level: Some(level),
        })
    }

    /// Pieces of random length in `[ceil(mesh/2), mesh]` grid steps, the
    /// last one truncated.
    pub fn random<R: Rng>(lo: usize, hi: usize, mesh: usize, rng: &mut R) -> Result<Self> {
        if hi <= lo || mesh == 0 {
            return Err(Error::GridMismatch(format!("empty partition [{lo}, {hi}] or zero mesh")));
        }
        let mut nodes = vec![lo];
        let mut at = lo;
        while at < hi {
            let len = rng.random_range(mesh.div_ceil(2)..=mesh);
            at = (at + len).min(hi);
            nodes.push(at);
        }
        Ok(Self { nodes, level: None })
    }

    /// Largest piece, in grid steps.
    pub fn mesh(&self) -> usize {
        self.nodes.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn riemann_sum<A: Increments + ?Sized, Y: Fn(f64) -> f64>(&self, a: &A, y: &Y) -> Result<f64> {
        let t = a.times();
        self.nodes.windows(2).map(|w| a.delta(w[0], w[1], y(t[w[0]]))).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungIntegral {
    pub value: f64,
    /// `|S_d - S_{d-1}|` at the final depth.
    pub residual: f64,
    /// Geometric tail estimate `residual q / (1 - q)`, `q` the observed
    /// contraction of successive differences.
    pub error_estimate: f64,
    pub depth: usize,
}

/// Dyadic Riemann sums over `[t_lo, t_hi]` until the tail estimate drops
/// below `tol`. Depth is capped by `MAX_DEPTH` and by the grid.
pub fn young_integral<A: Increments + ?Sized, Y: Fn(f64) -> f64>(a: &A, y: Y, lo: usize, hi: usize, tol: f64) -> Result<YoungIntegral> {
    if hi <= lo || hi >= a.times().len() {
        return Err(Error::GridMismatch(format!("invalid index range [{lo}, {hi}]")));
    }
    let span = hi - lo;
    let depth_cap = (span.trailing_zeros() as usize).min(MAX_DEPTH);
    let mut prev = Partition::dyadic(lo, hi, 0)?.riemann_sum(a, &y)?;
    let mut prev_diff: Option<f64> = None;
    let mut last = (0.0, f64::INFINITY);
    for depth in 1..=depth_cap {
        let sum = Partition::dyadic(lo, hi, depth)?.riemann_sum(a, &y)?;
        let diff = (sum - prev).abs();
        let estimate = if diff <= f64::EPSILON * sum.abs().max(1e-300) {
            0.0
        } else {
            match prev_diff {
                Some(pd) if pd > 0.0 => {
                    let q = (diff / pd).min(0.95);
                    diff * q / (1.0 - q)
                }
                _ => f64::INFINITY,
            }
        };
        if estimate < tol {
            return Ok(YoungIntegral {
                value: sum,
                residual: diff,
                error_estimate: estimate,
                depth,
            });
        }
        last = (diff, estimate);
        prev_diff = Some(diff);
        prev = sum;
    }
    Err(Error::YoungNonConvergence {
        depth: depth_cap,
        residual: last.0,
    })
}

/// Constants of the sewing bound
/// `|sum_Pi - int| <= C_theta ||A||_{beta,gamma} [Y]_rho^gamma mesh^{theta-1} (t-s)`,
/// `theta = beta + gamma rho`, `C_theta = 1 / (1 - 2^{1-theta})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SewingConstants {
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub a_norm: f64,
    pub y_seminorm: f64,
}

impl SewingConstants {
    pub fn theta(&self) -> f64 {
        self.beta + self.gamma * self.rho
    }

    /// Bound on the distance between two partition sums of mesh `mesh`.
    pub fn envelope(&self, mesh: f64, length: f64) -> f64 {
        let theta = self.theta();
        if theta <= 1.0 {
            return f64::INFINITY;
        }
        let c = 1.0 / (1.0 - 2f64.powf(1.0 - theta));
        2.0 * c * self.a_norm * self.y_seminorm.powf(self.gamma) * mesh.powf(theta - 1.0) * length
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCheck {
    pub sums: (f64, f64),
    pub meshes: (f64, f64),
    pub difference: f64,
    pub envelope: f64,
    pub holds: bool,
}

/// Two random partitions of the same nominal mesh against the sewing bound.
pub fn partition_independence<A: Increments + ?Sized, Y: Fn(f64) -> f64, R: Rng>(
    a: &A,
    y: Y,
    lo: usize,
    hi: usize,
    mesh: usize,
    constants: &SewingConstants,
    rng: &mut R,
) -> Result<PartitionCheck> {
    let t = a.times();
    let p1 = Partition::random(lo, hi, mesh, rng)?;
    let p2 = Partition::random(lo, hi, mesh, rng)?;
    let s1 = p1.riemann_sum(a, &y)?;
    let s2 = p2.riemann_sum(a, &y)?;
    let dt = t[1] - t[0];
    let m = p1.mesh().max(p2.mesh()) as f64 * dt;
    let envelope = constants.envelope(m, t[hi] - t[lo]);
    let difference = (s1 - s2).abs();
    Ok(PartitionCheck {
        sums: (s1, s2),
        meshes: (p1.mesh() as f64 * dt, p2.mesh() as f64 * dt),
        difference,
        envelope,
        holds: difference <= envelope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Solver step in increment-grid steps.
    pub stride: usize,
    /// Exponent for the `C^beta` proxy of the solution.
    pub beta: f64,
    /// Spatial Hölder index used for the data-driven `beta(1 + gamma) > 1` check.
    pub gamma: f64,
    /// Estimate `beta` of `A` from the table (AveragedField only).
    pub fit_beta: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            stride: 1,
            beta: 0.5,
            gamma: 0.05,
            fit_beta: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungDiagnostics {
    /// Global order from solutions at strides `s, 2s, 4s`.
    pub richardson_order: Option<f64>,
    /// Extrapolated error of the final value.
    pub richardson_error: Option<f64>,
    /// `sup |Y| + [Y]_beta`.
    pub holder_proxy: f64,
    pub beta: f64,
    pub fitted_beta: Option<f64>,
    pub gamma: f64,
    /// `fitted_beta (1 + gamma) > 1`, when fitted.
    pub young_condition: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungSolution {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `delta A_{t_i, t_{i+1}}(Y_i)`.
    pub increments: Vec<f64>,
    pub diagnostics: YoungDiagnostics,
}

impl YoungSolution {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,Y\n");
        for (t, y) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t},{y}\n"));
        }
        out
    }
}

/// `Y_{i+1} = Y_i + delta A_{t_i, t_{i+1}}(Y_i)` on every `stride`-th node.
pub fn davie_steps<A: Increments + ?Sized>(a: &A, y0: f64, stride: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let t = a.times();
    let n = t.len() - 1;
    if stride == 0 || n % stride != 0 {
        return Err(Error::GridMismatch(format!("stride {stride} does not divide {n} steps")));
    }
    let window = a.window();
    let mut times = vec![t[0]];
    let mut values = vec![y0];
    let mut incs = Vec::with_capacity(n / stride);
    let mut y = y0;
    for i in (0..n).step_by(stride) {
        if let Some((lo, hi)) = window {
            if !(lo..=hi).contains(&y) {
                return Err(Error::LeftWindow { t: t[i], y, lo, hi });
            }
        }
        let d = a.delta(i, i + stride, y)?;
        y += d;
        if !y.is_finite() {
            return Err(Error::NonFinite);
        }
        incs.push(d);
        times.push(t[i + stride]);
        values.push(y);
    }
    Ok((times, values, incs))
}

/// `sup |Y| + max_{i<j} |Y_j - Y_i| / |t_j - t_i|^beta` over at most 256
/// evenly spaced nodes.
pub fn holder_proxy(times: &[f64], values: &[f64], beta: f64) -> f64 {
    let n = times.len();
    let idx: Vec<usize> = if n <= 256 {
        (0..n).collect()
    } else {
        (0..256).map(|k| k * (n - 1) / 255).collect()
    };
    let sup = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut semi: f64 = 0.0;
    for (p, &i) in idx.iter().enumerate() {
        for &j in &idx[p + 1..] {
            semi = semi.max((values[j] - values[i]).abs() / (times[j] - times[i]).powf(beta));
        }
    }
    sup + semi
}

fn solve_with<A: Increments + ?Sized>(a: &A, y0: f64, opts: &SolverOptions, fitted_beta: Option<f64>) -> Result<YoungSolution> {
    let (times, values, increments) = davie_steps(a, y0, opts.stride)?;
    let n = a.times().len() - 1;
    let coarse = |k: usize| -> Option<f64> {
        let s = opts.stride << k;
        (n % s == 0).then(|| davie_steps(a, y0, s).ok().and_then(|r| r.1.last().copied())).flatten()
    };
    let fine = *values.last().expect("non-empty");
    let (richardson_order, richardson_error) = match (coarse(1), coarse(2)) {
        (Some(c1), Some(c2)) => {
            let (d1, d2) = ((fine - c1).abs(), (c1 - c2).abs());
            if d1 > 0.0 && d2 > 0.0 {
                let p = (d2 / d1).log2();
                let err = if p > 0.0 { d1 / (2f64.powf(p) - 1.0) } else { d1 };
                (Some(p), Some(err))
            } else {
                (None, Some(d1))
            }
        }
        _ => (None, None),
    };
    Ok(YoungSolution {
        diagnostics: YoungDiagnostics {
            richardson_order,
            richardson_error,
            holder_proxy: holder_proxy(&times, &values, opts.beta),
            beta: opts.beta,
            fitted_beta,
            gamma: opts.gamma,
            young_condition: fitted_beta.map(|b| b * (1.0 + opts.gamma) > 1.0),
        },
        times,
        values,
        increments,
    })
}

/// Young ODE solution on a tabulated averaging operator.
pub fn solve_yode(a: &AveragedField, y0: f64, opts: &SolverOptions) -> Result<YoungSolution> {
    let fitted = if opts.fit_beta {
        holder_exponent_fit(a, opts.gamma).ok().map(|f| f.fit.slope)
    } else {
        None
    };
    solve_with(a, y0, opts, fitted)
}

/// Young ODE solution on any increment source; no `beta` fit.
pub fn solve_yode_with<A: Increments + ?Sized>(a: &A, y0: f64, opts: &SolverOptions) -> Result<YoungSolution> {
    solve_with(a, y0, opts, None)
}

/// One-step local error `|Y^{(1 step)}_h - Y^{fine}_h|` against `h` over
/// `levels` dyadic step sizes starting at `base` grid steps; returns the
/// fitted order and the table.
pub fn local_order<A: Increments + ?Sized>(a: &A, y0: f64, base: usize, levels: usize) -> Result<(f64, Vec<(f64, f64)>)> {
    let t = a.times();
    let mut rows = Vec::with_capacity(levels);
    for k in 0..levels {
        let h = base << k;
        if h >= t.len() {
            return Err(Error::InsufficientScales { needed: levels, got: k });
        }
        let one = y0 + a.delta(0, h, y0)?;
        let mut y = y0;
        for i in 0..h {
            y += a.delta(i, i + 1, y)?;
        }
        rows.push((t[h] - t[0], (one - y).abs()));
    }
    let (hs, es): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
    let fit = fit_loglog(&hs, &es).ok_or_else(|| Error::DegenerateFit("zero local errors".into()))?;
    Ok((fit.slope, rows))
}

/// `X = Y + W` on the solution's times.
pub fn sde_reconstruct(sol: &YoungSolution, path: &FbmPath) -> Result<Vec<(f64, f64, f64)>> {
    let (times, w) = path_with_origin(path)?;
    let mut out = Vec::with_capacity(sol.times.len());
    let mut k = 0;
    for (&t, &y) in sol.times.iter().zip(&sol.values) {
        while k < times.len() && times[k] < t - 1e-12 {
            k += 1;
        }
        if k == times.len() || (times[k] - t).abs() > 1e-12 {
            return Err(Error::GridMismatch(format!("path has no value at t={t}")));
        }
        out.push((t, y, y + w[k]));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub sup_difference: f64,
    pub steps: usize,
    pub step: f64,
    /// `(t, X_young, X_euler)`.
    pub rows: Vec<(f64, f64, f64)>,
}

/// Euler scheme `X_{i+1} = X_i + b(t_i, X_i) dt + (W_{i+1} - W_i)` against
/// the Young solution built from the same path.
pub fn euler_crosscheck(b: &FieldSpec, path: &FbmPath, y0: f64) -> Result<CrossCheck> {
    let inc = PathIncrements::from_path(b, path)?;
    let sol = solve_yode_with(&inc, y0, &SolverOptions::default())?;
    let young = sde_reconstruct(&sol, path)?;
    let (times, w) = (&inc.times, &inc.w);
    let mut x = y0 + w[0];
    let mut rows = Vec::with_capacity(times.len());
    let mut sup: f64 = 0.0;
    for (i, &(t, _, xy)) in young.iter().enumerate() {
        rows.push((t, xy, x));
        sup = sup.max((xy - x).abs());
        if i + 1 < times.len() {
            x += b.eval_deterministic(t, &[x])? * (times[i + 1] - t) + (w[i + 1] - w[i]);
        }
    }
    Ok(CrossCheck {
        sup_difference: sup,
        steps: times.len() - 1,
        step: times[1] - times[0],
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallProbe {
    pub max_gap: f64,
    pub perturbation: f64,
    /// `perturbation * exp(lipschitz * T)`.
    pub envelope: f64,
    pub holds: bool,
}

/// Runs from `y0` and `y0 + perturbation` against the Grönwall envelope.
pub fn gronwall_probe<A: Increments + ?Sized>(a: &A, y0: f64, perturbation: f64, lipschitz: f64) -> Result<GronwallProbe> {
    let (times, v0, _) = davie_steps(a, y0, 1)?;
    let (_, v1, _) = davie_steps(a, y0 + perturbation, 1)?;
    let max_gap = v0.iter().zip(&v1).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let horizon = times.last().expect("non-empty") - times[0];
    let envelope = perturbation * (lipschitz * horizon).exp();
    Ok(GronwallProbe {
        max_gap,
        perturbation,
        envelope,
        holds: max_gap <= envelope * (1.0 + 1e-9),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeanoWitness {
    pub times: Vec<f64>,
    pub from_zero: Vec<f64>,
    pub from_plus: Vec<f64>,
    pub from_minus: Vec<f64>,
    /// `(t - t0)^2 / 2`, the maximal solutions of `y' = sqrt(2) sgn(y) sqrt|y|`.
    pub envelope: Vec<f64>,
    /// `max |Y_pm(t)| / envelope(t) - 1` over `t >= t0 + (T - t0)/2`.
    pub late_relative_deviation: f64,
    pub zero_stays_zero: bool,
}

/// Non-uniqueness for the noiseless Peano drift: the scheme started at 0
/// stays there, while `y0 = +-perturbation` follows the `+-(t - t0)^2 / 2`
/// branches.
pub fn peano_witness(step: f64, horizon: f64, perturbation: f64) -> Result<PeanoWitness> {
    let b = FieldSpec::from_id("peano", 1)?;
    let n = (horizon / step).round() as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    let inc = PathIncrements::new(&b, times, vec![0.0; n + 1])?;
    let (times, from_zero, _) = davie_steps(&inc, 0.0, 1)?;
    let (_, from_plus, _) = davie_steps(&inc, perturbation, 1)?;
    let (_, from_minus, _) = davie_steps(&inc, -perturbation, 1)?;
    let t0 = times[0];
    let envelope: Vec<f64> = times.iter().map(|t| 0.5 * (t - t0).powi(2)).collect();
    let late = t0 + 0.5 * (horizon - t0);
    let late_relative_deviation = times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= late)
        .map(|(i, _)| {
            let e = envelope[i];
            ((from_plus[i] - e).abs() / e).max((from_minus[i] + e).abs() / e)
        })
        .fold(0.0, f64::max);
    Ok(PeanoWitness {
        zero_stays_zero: from_zero.iter().all(|&y| y == 0.0),
        times,
        from_zero,
        from_plus,
        from_minus,
        envelope,
        late_relative_deviation,
    })
}

/// `holder_proxy(Y) / (|Y_0| + 1)` for each start; a stable ratio reflects
/// the a-priori bound `||Y||_{C^beta} <= C (|Y_0| + 1)`.
pub fn apriori_ratios<A: Increments + ?Sized>(a: &A, starts: &[f64], beta: f64) -> Result<Vec<f64>> {
    starts
        .iter()
        .map(|&y0| {
            let (t, v, _) = davie_steps(a, y0, 1)?;
            Ok(holder_proxy(&t, &v, beta) / (y0.abs() + 1.0))
        })
        .collect()
}
