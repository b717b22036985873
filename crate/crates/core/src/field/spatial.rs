//! Spatial parts of catalog fields: sums of separable products of
//! one-dimensional profiles, or truncated Fourier series on a periodic box.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::profile::{HeatedProfile, Profile1D};
use crate::error::{Error, Result};
use crate::quadrature::default_rule;
use crate::rng::aux_rng;

pub const MAX_DIMS: usize = 3;
const NONE: usize = usize::MAX;

/// Value, gradient and Hessian at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; MAX_DIMS],
    pub hess: [[f64; MAX_DIMS]; MAX_DIMS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub coef: f64,
    /// One factor per axis.
    pub factors: Vec<Profile1D>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: [i32; 2],
    pub re: f64,
    pub im: f64,
}

/// `f(y) = Re sum_k c_k exp(i omega k.y)` with `omega = 2 pi / circumference`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub dims: usize,
    pub circumference: f64,
    pub modes: Vec<FourierMode>,
}

impl FourierSeries {
    /// Random series `sum_{k=1}^K k^{-decay} (a_k cos + b_k sin)` with
    /// i.i.d. standard normal `a_k, b_k`. `decay = 0` is truncated white noise.
    pub fn white_noise(modes: usize, decay: f64, seed: u64, circumference: f64) -> Self {
        let mut rng = aux_rng(seed, 0x00f0_u64);
        let modes = (1..=modes)
            .map(|k| {
                let scale = (k as f64).powf(-decay);
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                // a cos - (-b) sin
                FourierMode {
                    k: [k as i32, 0],
                    re: scale * a,
                    im: -scale * b,
                }
            })
            .collect();
        Self {
            dims: 1,
            circumference,
            modes,
        }
    }

    /// Partial sum keeping modes with `max |k_i| <= cutoff`.
    pub fn truncated(&self, cutoff: usize) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .filter(|m| m.k.iter().all(|k| k.unsigned_abs() as usize <= cutoff))
                .copied()
                .collect(),
            ..self.clone()
        }
    }

    /// Reads `k_1[,k_2],re,im` rows. A header line is allowed.
    pub fn from_csv(path: &Path, circumference: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut modes = Vec::new();
        let mut dims = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
            let Ok(vals) = parsed else {
                if lineno == 0 {
                    continue;
                }
                return Err(Error::MalformedCatalogId {
                    id: path.display().to_string(),
                    reason: format!("line {}: non-numeric entry", lineno + 1),
                });
            };
            let d = vals.len().checked_sub(2).filter(|d| (1..=2).contains(d)).ok_or_else(|| {
                Error::MalformedCatalogId {
                    id: path.display().to_string(),
                    reason: format!("line {}: expected 3 or 4 columns", lineno + 1),
                }
            })?;
            if *dims.get_or_insert(d) != d {
                return Err(Error::MalformedCatalogId {
                    id: path.display().to_string(),
                    reason: format!("line {}: inconsistent column count", lineno + 1),
                });
            }
            let mut k = [0i32; 2];
            for (slot, v) in k.iter_mut().zip(&vals[..d]) {
                *slot = *v as i32;
            }
            modes.push(FourierMode {
                k,
                re: vals[d],
                im: vals[d + 1],
            });
        }
        Ok(Self {
            dims: dims.unwrap_or(1),
            circumference,
            modes,
        })
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.circumference
    }

    pub fn max_mode(&self) -> usize {
        self.modes
            .iter()
            .flat_map(|m| m.k.iter().map(|k| k.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spatial {
    Product { dims: usize, terms: Vec<ProductTerm> },
    Fourier(FourierSeries),
}

impl Spatial {
    /// A single profile on axis 0, constant in the others.
    pub fn axis0(dims: usize, profile: Profile1D) -> Self {
        let mut factors = vec![Profile1D::Const; dims];
        factors[0] = profile;
        Spatial::Product {
            dims,
            terms: vec![ProductTerm { coef: 1.0, factors }],
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Spatial::Product { dims, .. } => *dims,
            Spatial::Fourier(f) => f.dims,
        }
    }

    pub fn has_gradient(&self) -> bool {
        match self {
            Spatial::Product { terms, .. } => terms.iter().all(|t| t.factors.iter().all(Profile1D::has_gradient)),
            Spatial::Fourier(_) => true,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Spatial::Fourier(_))
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Spatial::Product { terms, .. } => terms.iter().all(|t| t.factors.iter().all(Profile1D::is_const)),
            Spatial::Fourier(f) => f.modes.iter().all(|m| m.k == [0, 0]),
        }
    }

    pub fn periodic_circumference(&self) -> Option<f64> {
        match self {
            Spatial::Fourier(f) => Some(f.circumference),
            _ => None,
        }
    }

    /// `sup |f|` when a finite bound is known.
    pub fn sup_norm(&self) -> Option<f64> {
        match self {
            Spatial::Product { terms, .. } => terms.iter().try_fold(0.0, |acc, t| {
                let mut prod = t.coef.abs();
                for f in &t.factors {
                    prod *= f.sup_norm()?;
                }
                Some(acc + prod)
            }),
            Spatial::Fourier(f) => Some(f.modes.iter().map(|m| m.re.hypot(m.im)).sum()),
        }
    }

    /// Lipschitz constant of a one-dimensional product field, when finite.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Spatial::Product { dims: 1, terms } => terms
                .iter()
                .try_fold(0.0, |acc, t| Some(acc + t.coef.abs() * t.factors[0].lipschitz()?)),
            Spatial::Fourier(f) if f.dims == 1 => {
                let w = f.omega();
                Some(f.modes.iter().map(|m| w * m.k[0].abs() as f64 * m.re.hypot(m.im)).sum())
            }
            _ => None,
        }
    }

    pub fn heated(&self, tau: f64) -> Result<HeatedSpatial> {
        if tau < 0.0 {
            return Err(Error::NegativeHeatTime(tau));
        }
        Ok(match self {
            Spatial::Product { dims, terms } => HeatedSpatial::Product {
                dims: *dims,
                terms: terms
                    .iter()
                    .map(|t| (t.coef, t.factors.iter().map(|f| f.heated(tau)).collect()))
                    .collect(),
            },
            Spatial::Fourier(f) => {
                let w = f.omega();
                HeatedSpatial::Fourier {
                    dims: f.dims,
                    omega: w,
                    modes: f
                        .modes
                        .iter()
                        .map(|m| {
                            let k2 = (m.k[0] as f64).powi(2) + (m.k[1] as f64).powi(2);
                            let damp = (-0.5 * w * w * k2 * tau).exp();
                            ([m.k[0] as f64, m.k[1] as f64], m.re * damp, m.im * damp)
                        })
                        .collect(),
                }
            }
        })
    }

    /// Pointwise value.
    pub fn value(&self, y: &[f64]) -> f64 {
        self.heated(0.0).expect("tau = 0").jet(y, 0).value
    }

    /// Value and derivatives up to `order` (at most 2).
    pub fn jet(&self, y: &[f64], order: usize) -> Result<Jet> {
        if order > 0 && !self.has_gradient() {
            return Err(Error::NoGradient(format!("{self:?}")));
        }
        Ok(self.heated(0.0)?.jet(y, order))
    }

    /// Heat action by Gauss-Hermite quadrature over the `d` Gaussian axes.
    pub fn heat_quadrature(&self, tau: f64, y: &[f64]) -> Result<f64> {
        if tau < 0.0 {
            return Err(Error::NegativeHeatTime(tau));
        }
        let sd = tau.sqrt();
        let rule = default_rule();
        let mut probe = [0.0; MAX_DIMS];
        rule.expect_tensor(y.len(), |z| {
            for k in 0..y.len() {
                probe[k] = y[k] + sd * z[k];
            }
            self.value(&probe[..y.len()])
        })
    }
}

/// Heat-smoothed spatial part for one fixed heat time.
#[derive(Debug, Clone, PartialEq)]
pub enum HeatedSpatial {
    Product {
        dims: usize,
        terms: Vec<(f64, Vec<HeatedProfile>)>,
    },
    Fourier {
        dims: usize,
        omega: f64,
        modes: Vec<([f64; 2], f64, f64)>,
    },
}

impl HeatedSpatial {
    /// Value and derivatives up to `order` (at most 2) at `y`.
    pub fn jet(&self, y: &[f64], order: usize) -> Jet {
        let mut out = Jet::default();
        match self {
            HeatedSpatial::Product { dims, terms } => {
                let d = *dims;
                for (coef, factors) in terms {
                    let mut d0 = [0.0; MAX_DIMS];
                    let mut d1 = [0.0; MAX_DIMS];
                    let mut d2 = [0.0; MAX_DIMS];
                    for a in 0..d {
                        [d0[a], d1[a], d2[a]] = factors[a].jet(order, y[a]);
                    }
                    // product of the value factors outside {j, l}
                    let others = |j: usize, l: usize| -> f64 {
                        let mut p = 1.0;
                        for (a, v) in d0.iter().enumerate().take(d) {
                            if a != j && a != l {
                                p *= v;
                            }
                        }
                        p
                    };
                    out.value += coef * others(NONE, NONE);
                    if order >= 1 {
                        for j in 0..d {
                            out.grad[j] += coef * d1[j] * others(j, NONE);
                        }
                    }
                    if order >= 2 {
                        for j in 0..d {
                            for l in 0..d {
                                out.hess[j][l] += coef
                                    * if j == l {
                                        d2[j] * others(j, NONE)
                                    } else {
                                        d1[j] * d1[l] * others(j, l)
                                    };
                            }
                        }
                    }
                }
            }
            HeatedSpatial::Fourier { dims, omega, modes } => {
                let d = *dims;
                for &(k, re, im) in modes {
                    let theta = omega * (0..d).map(|a| k[a] * y[a]).sum::<f64>();
                    let (s, c) = theta.sin_cos();
                    // Re((re + i im) e^{i theta}) = re c - im s
                    out.value += re * c - im * s;
                    if order >= 1 {
                        let dv = -re * s - im * c;
                        for j in 0..d {
                            out.grad[j] += omega * k[j] * dv;
                        }
                    }
                    if order >= 2 {
                        let ddv = -(re * c - im * s);
                        for j in 0..d {
                            for l in 0..d {
                                out.hess[j][l] += omega * omega * k[j] * k[l] * ddv;
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_jet_matches_finite_differences() {
        let s = Spatial::Product {
            dims: 2,
            terms: vec![
                ProductTerm {
                    coef: 1.0,
                    factors: vec![Profile1D::sin(1.0), Profile1D::cos(1.0)],
                },
                ProductTerm {
                    coef: 0.5,
                    factors: vec![
                        Profile1D::Bump {
                            sigma: 0.7,
                            center: 0.0,
                        },
                        Profile1D::linear(),
                    ],
                },
            ],
        };
        let y = [0.3, -0.4];
        let jet = s.jet(&y, 2).unwrap();
        let e = 1e-5;
        for j in 0..2 {
            let mut p = y;
            let mut m = y;
            p[j] += e;
            m[j] -= e;
            let fd = (s.value(&p) - s.value(&m)) / (2.0 * e);
            assert!((fd - jet.grad[j]).abs() < 1e-8);
            let jp = s.jet(&p, 1).unwrap();
            let jm = s.jet(&m, 1).unwrap();
            for l in 0..2 {
                let fd2 = (jp.grad[l] - jm.grad[l]) / (2.0 * e);
                assert!((fd2 - jet.hess[j][l]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn fourier_heat_damps_modes() {
        let f = FourierSeries {
            dims: 1,
            circumference: 2.0 * std::f64::consts::PI,
            modes: vec![FourierMode {
                k: [2, 0],
                re: 1.0,
                im: 0.0,
            }],
        };
        let s = Spatial::Fourier(f);
        let h = s.heated(0.3).unwrap().jet(&[0.4], 0).value;
        assert!((h - (-0.5f64 * 4.0 * 0.3).exp() * (0.8f64).cos()).abs() < 1e-14);
        let q = s.heat_quadrature(0.3, &[0.4]).unwrap();
        assert!((h - q).abs() < 1e-10);
    }

    #[test]
    fn fourier_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, "k_1,re,im\n1,0.5,0\n3,0,-0.25\n").unwrap();
        let f = FourierSeries::from_csv(&path, 2.0 * std::f64::consts::PI).unwrap();
        assert_eq!(f.modes.len(), 2);
        let s = Spatial::Fourier(f);
        let y: f64 = 0.9;
        let expected = 0.5 * y.cos() + 0.25 * (3.0 * y).sin();
        assert!((s.value(&[y]) - expected).abs() < 1e-14);
    }

    #[test]
    fn negative_heat_time_rejected() {
        let s = Spatial::axis0(1, Profile1D::sin(1.0));
        assert!(matches!(s.heated(-1.0), Err(Error::NegativeHeatTime(_))));
    }
}
