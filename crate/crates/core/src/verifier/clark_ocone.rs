//! Discrete martingale representation `F = E[F] + sum E_c[D F](c) dB_c`
//! for functionals of `B_1(t1)` with closed-form projected derivatives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{sample_lattice, LatticeConfig};
use crate::stats::{fit_loglog, LineFit, RunningStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `B(t1)`.
    B,
    /// `B(t1)^2`.
    B2,
    /// `exp(B(t1) - t1/2)`.
    Exp,
}

impl Functional {
    /// Accepts `b`, `b2`, `exp` with or without the `functional:` prefix.
    pub fn from_id(id: &str) -> Result<Self> {
        match id.strip_prefix("functional:").unwrap_or(id) {
            "b" => Ok(Self::B),
            "b2" => Ok(Self::B2),
            "exp" => Ok(Self::Exp),
            _ => Err(Error::UnknownFunctional(id.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::B => "functional:b",
            Self::B2 => "functional:b2",
            Self::Exp => "functional:exp",
        }
    }

    fn value(&self, b: f64, t1: f64) -> f64 {
        match self {
            Self::B => b,
            Self::B2 => b * b,
            Self::Exp => (b - 0.5 * t1).exp(),
        }
    }

    fn mean(&self, t1: f64) -> f64 {
        match self {
            Self::B => 0.0,
            Self::B2 => t1,
            Self::Exp => 1.0,
        }
    }

    /// `E[D_s F | F_s]` given `B(s)`.
    fn projected_derivative(&self, b: f64, s: f64) -> f64 {
        match self {
            Self::B => 1.0,
            Self::B2 => 2.0 * b,
            Self::Exp => (b - 0.5 * s).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClarkOconeConfig {
    pub functional: Functional,
    pub t1: f64,
    pub n_paths: usize,
    /// Dyadic steps; the finest is sampled, the rest are sums of it.
    pub steps: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClarkOconeLevel {
    pub step: f64,
    pub residual: RunningStats,
    pub residual_rms: f64,
    pub functional_rms: f64,
    pub relative_rms: Option<f64>,
    /// Max over paths of `|residual - (sum dB^2 - t1)|`, the quadratic
    /// variation form of the residual for `B^2`.
    pub quadratic_variation_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClarkOconeReport {
    pub config: ClarkOconeConfig,
    pub levels: Vec<ClarkOconeLevel>,
    /// Log-log slope of the residual RMS against the step.
    pub order: Option<LineFit>,
}

#[derive(Clone, Copy, Default)]
struct Acc {
    residual: RunningStats,
    residual_sq: RunningStats,
    f_sq: RunningStats,
    qv_gap: f64,
}

pub fn clark_ocone_check(cfg: &ClarkOconeConfig) -> Result<ClarkOconeReport> {
    if cfg.steps.len() < 3 {
        return Err(Error::ShortLadder(cfg.steps.len()));
    }
    let mut steps = cfg.steps.clone();
    steps.sort_by(|a, b| b.total_cmp(a));
    let finest = *steps.last().expect("non-empty");
    let coarsest = steps[0];
    let lattice = LatticeConfig::new(1, finest, coarsest, cfg.t1)?;
    let factors = steps
        .iter()
        .map(|s| {
            let k = (s / finest).round();
            if (s / finest - k).abs() > 1e-9 || !(k as usize).is_power_of_two() {
                Err(Error::GridMismatch(format!("step {s} is not a dyadic multiple of {finest}")))
            } else {
                Ok(k as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let f = cfg.functional;
    let per_path: Vec<Vec<Acc>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<Acc>> {
            let fine = sample_lattice(&lattice, cfg.seed, p)?;
            let fine = fine.post_increments(0);
            Ok(factors
                .iter()
                .zip(&steps)
                .map(|(&k, &step)| {
                    let db: Vec<f64> = fine.chunks(k).map(|c| c.iter().sum()).collect();
                    let (mut b, mut stoch, mut qv) = (0.0, 0.0, 0.0);
                    for (c, d) in db.iter().enumerate() {
                        stoch += f.projected_derivative(b, c as f64 * step) * d;
                        qv += d * d;
                        b += d;
                    }
                    let value = f.value(b, cfg.t1);
                    let r = value - (f.mean(cfg.t1) + stoch);
                    let mut a = Acc::default();
                    a.residual.push(r);
                    a.residual_sq.push(r * r);
                    a.f_sq.push(value * value);
                    if f == Functional::B2 {
                        a.qv_gap = (r - (qv - cfg.t1)).abs();
                    }
                    a
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![Acc::default(); steps.len()];
    for path in &per_path {
        for (m, a) in acc.iter_mut().zip(path) {
            m.residual.merge(&a.residual);
            m.residual_sq.merge(&a.residual_sq);
            m.f_sq.merge(&a.f_sq);
            m.qv_gap = m.qv_gap.max(a.qv_gap);
        }
    }
    let levels: Vec<ClarkOconeLevel> = steps
        .iter()
        .zip(&acc)
        .map(|(&step, a)| {
            let residual_rms = a.residual_sq.mean.max(0.0).sqrt();
            let functional_rms = a.f_sq.mean.max(0.0).sqrt();
            ClarkOconeLevel {
                step,
                residual: a.residual,
                residual_rms,
                functional_rms,
                relative_rms: (functional_rms > 0.0).then(|| residual_rms / functional_rms),
                quadratic_variation_gap: (f == Functional::B2).then_some(a.qv_gap),
            }
        })
        .collect();
    let order = fit_loglog(
        &levels.iter().map(|l| l.step).collect::<Vec<_>>(),
        &levels.iter().map(|l| l.residual_rms).collect::<Vec<_>>(),
    );
    Ok(ClarkOconeReport {
        config: cfg.clone(),
        levels,
        order,
    })
}
