//! One-dimensional building blocks with closed-form heat actions.
//!
//! Every profile knows `P_tau p` and its first two derivatives, where
//! `P_tau p(y) = E[p(y + sqrt(tau) Z)]`. The Peano drift is the exception:
//! its heat action falls back to Gauss-Hermite quadrature and it declares no
//! pointwise gradient.

use serde::{Deserialize, Serialize};

use crate::quadrature::default_rule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile1D {
    Const,
    /// `sin(freq * y + phase)`.
    Sin { freq: f64, phase: f64 },
    /// `exp(rate * y)`.
    Exp { rate: f64 },
    /// `exp(-(y - center)^2 / (2 sigma^2))`.
    Bump { sigma: f64, center: f64 },
    /// `sum_n coeffs[n] y^n`.
    Poly { coeffs: Vec<f64> },
    /// `sum_{k=0}^{modes} 2^{-k s} cos(2^k y)`.
    Weierstrass { s: f64, modes: usize },
    /// `sqrt(2) sgn(y) sqrt(|y|)`.
    Peano,
}

pub fn peano(y: f64) -> f64 {
    std::f64::consts::SQRT_2 * y.signum() * y.abs().sqrt()
}

impl Profile1D {
    pub fn cos(freq: f64) -> Self {
        Profile1D::Sin {
            freq,
            phase: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn sin(freq: f64) -> Self {
        Profile1D::Sin { freq, phase: 0.0 }
    }

    pub fn linear() -> Self {
        Profile1D::Poly {
            coeffs: vec![0.0, 1.0],
        }
    }

    pub fn has_gradient(&self) -> bool {
        !matches!(self, Profile1D::Peano)
    }

    pub fn is_const(&self) -> bool {
        match self {
            Profile1D::Const => true,
            Profile1D::Poly { coeffs } => coeffs.iter().skip(1).all(|&c| c == 0.0),
            _ => false,
        }
    }

    /// `sup |p|`, when finite.
    pub fn sup_norm(&self) -> Option<f64> {
        match self {
            Profile1D::Const => Some(1.0),
            Profile1D::Sin { .. } | Profile1D::Bump { .. } => Some(1.0),
            Profile1D::Weierstrass { s, modes } => {
                Some((0..=*modes).map(|k| 2f64.powf(-(k as f64) * s)).sum())
            }
            Profile1D::Poly { .. } if self.is_const() => match self {
                Profile1D::Poly { coeffs } => Some(coeffs.first().copied().unwrap_or(0.0).abs()),
                _ => unreachable!(),
            },
            _ => None,
        }
    }

    /// Global Lipschitz constant, when finite.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Profile1D::Const => Some(0.0),
            Profile1D::Sin { freq, .. } => Some(freq.abs()),
            Profile1D::Bump { sigma, .. } => Some((-0.5f64).exp() / sigma),
            Profile1D::Poly { coeffs } if coeffs.len() <= 2 => {
                Some(coeffs.get(1).copied().unwrap_or(0.0).abs())
            }
            Profile1D::Weierstrass { s, modes } => {
                Some((0..=*modes).map(|k| 2f64.powf(k as f64 * (1.0 - s))).sum())
            }
            _ => None,
        }
    }

    /// Heat-smoothed profile `P_tau p`, with per-`tau` factors precomputed.
    pub fn heated(&self, tau: f64) -> HeatedProfile {
        debug_assert!(tau >= 0.0);
        match self {
            Profile1D::Const => HeatedProfile::Const,
            Profile1D::Sin { freq, phase } => HeatedProfile::Sin {
                freq: *freq,
                phase: *phase,
                damp: (-0.5 * freq * freq * tau).exp(),
            },
            Profile1D::Exp { rate } => HeatedProfile::Exp {
                rate: *rate,
                gain: (0.5 * rate * rate * tau).exp(),
            },
            Profile1D::Bump { sigma, center } => {
                let var = sigma * sigma + tau;
                HeatedProfile::Bump {
                    center: *center,
                    var,
                    amp: sigma / var.sqrt(),
                }
            }
            Profile1D::Poly { coeffs } => HeatedProfile::Poly {
                coeffs: heat_polynomial(coeffs, tau),
            },
            Profile1D::Weierstrass { s, modes } => HeatedProfile::Lacunary {
                modes: (0..=*modes)
                    .map(|k| {
                        let freq = 2f64.powi(k as i32);
                        let amp = 2f64.powf(-(k as f64) * s) * (-0.5 * freq * freq * tau).exp();
                        (freq, amp)
                    })
                    .collect(),
            },
            Profile1D::Peano => HeatedProfile::Peano { sd: tau.sqrt() },
        }
    }

    /// Pointwise derivative of order `order`.
    pub fn eval(&self, order: usize, y: f64) -> f64 {
        self.heated(0.0).eval(order, y)
    }
}

/// `P_tau` applied to `sum c_n y^n`, using `E[Z^{2k}] = (2k-1)!!`.
pub fn heat_polynomial(coeffs: &[f64], tau: f64) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len()];
    for (n, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        // term y^{n-2k} * C(n, 2k) (2k-1)!! tau^k
        let mut factor = 1.0;
        let mut k = 0;
        while 2 * k <= n {
            out[n - 2 * k] += c * factor;
            let a = (n - 2 * k) as f64;
            factor *= a * (a - 1.0) / (2.0 * k as f64 + 2.0) * tau;
            k += 1;
        }
    }
    out
}

fn poly_derivative(coeffs: &[f64], order: usize, y: f64) -> f64 {
    let mut acc = 0.0;
    for n in (order..coeffs.len()).rev() {
        let mut falling = 1.0;
        for m in 0..order {
            falling *= (n - m) as f64;
        }
        acc = acc * y + coeffs[n] * falling;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeatedProfile {
    Const,
    Sin { freq: f64, phase: f64, damp: f64 },
    Exp { rate: f64, gain: f64 },
    Bump { center: f64, var: f64, amp: f64 },
    Poly { coeffs: Vec<f64> },
    Lacunary { modes: Vec<(f64, f64)> },
    Peano { sd: f64 },
}

impl HeatedProfile {
    /// Derivatives `0..=order` (order at most 2) at `y`; one trig call for
    /// sine profiles.
    pub fn jet(&self, order: usize, y: f64) -> [f64; 3] {
        match self {
            HeatedProfile::Sin { freq, phase, damp } => {
                let (s, c) = (freq * y + phase).sin_cos();
                [damp * s, damp * freq * c, -damp * freq * freq * s]
            }
            _ => {
                let mut out = [0.0; 3];
                for (k, v) in out.iter_mut().enumerate().take(order + 1) {
                    *v = self.eval(k, y);
                }
                out
            }
        }
    }

    /// Derivative of order `order` of the smoothed profile at `y`.
    pub fn eval(&self, order: usize, y: f64) -> f64 {
        match self {
            HeatedProfile::Const => {
                if order == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            HeatedProfile::Sin { freq, phase, damp } => {
                let shift = order as f64 * std::f64::consts::FRAC_PI_2;
                damp * freq.powi(order as i32) * (freq * y + phase + shift).sin()
            }
            HeatedProfile::Exp { rate, gain } => gain * rate.powi(order as i32) * (rate * y).exp(),
            HeatedProfile::Bump { center, var, amp } => {
                let z = y - center;
                let g = amp * (-0.5 * z * z / var).exp();
                match order {
                    0 => g,
                    1 => -z / var * g,
                    2 => (z * z / (var * var) - 1.0 / var) * g,
                    3 => (3.0 * z / (var * var) - z * z * z / (var * var * var)) * g,
                    _ => f64::NAN,
                }
            }
            HeatedProfile::Poly { coeffs } => poly_derivative(coeffs, order, y),
            HeatedProfile::Lacunary { modes } => {
                let shift = std::f64::consts::FRAC_PI_2 * (1.0 + order as f64);
                modes
                    .iter()
                    .map(|&(f, a)| a * f.powi(order as i32) * (f * y + shift).sin())
                    .sum()
            }
            HeatedProfile::Peano { sd } => {
                let sd = *sd;
                if sd == 0.0 {
                    return match order {
                        0 => peano(y),
                        _ => f64::NAN,
                    };
                }
                // Gaussian integration by parts: derivatives move onto the
                // Hermite weights He_n(Z) / sd^n.
                let rule = default_rule();
                rule.expect(|z| {
                    let he = match order {
                        0 => 1.0,
                        1 => z,
                        2 => z * z - 1.0,
                        _ => f64::NAN,
                    };
                    peano(y + sd * z) * he
                }) / sd.powi(order as i32)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussianRule;

    fn samples() -> Vec<Profile1D> {
        vec![
            Profile1D::Const,
            Profile1D::sin(1.3),
            Profile1D::cos(2.0),
            Profile1D::Exp { rate: 0.7 },
            Profile1D::Bump {
                sigma: 0.4,
                center: 0.2,
            },
            Profile1D::Poly {
                coeffs: vec![1.0, -2.0, 0.5, 0.25, -0.1],
            },
            Profile1D::Weierstrass { s: 0.6, modes: 3 },
        ]
    }

    #[test]
    fn heated_matches_quadrature() {
        let rule = GaussianRule::new(60);
        for p in samples() {
            for &tau in &[0.0, 0.01, 0.3] {
                let h = p.heated(tau);
                for &y in &[-0.7, 0.0, 0.45] {
                    for order in 0..=2 {
                        let q = rule.expect(|z| p.eval(order, y + tau.sqrt() * z));
                        let a = h.eval(order, y);
                        assert!((a - q).abs() < 1e-9 * (1.0 + q.abs()), "{p:?} tau={tau} y={y} order={order}: {a} vs {q}");
                    }
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let e = 1e-5;
        for p in samples() {
            for &y in &[-1.1, 0.3, 0.9] {
                for order in 0..=1 {
                    let fd = (p.eval(order, y + e) - p.eval(order, y - e)) / (2.0 * e);
                    let an = p.eval(order + 1, y);
                    assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{p:?} {order} {fd} {an}");
                }
            }
        }
    }

    #[test]
    fn polynomial_heat_is_exact() {
        // P_tau y^4 = y^4 + 6 tau y^2 + 3 tau^2
        let c = heat_polynomial(&[0.0, 0.0, 0.0, 0.0, 1.0], 0.5);
        let expected = [0.75, 0.0, 3.0, 0.0, 1.0];
        for (a, b) in c.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let c = heat_polynomial(&[0.0, 0.0, 0.0, 1.0], 2.0);
        assert_eq!(c, vec![0.0, 6.0, 0.0, 1.0]);
    }

    #[test]
    fn peano_heat_is_odd_and_bounded_by_envelope() {
        let h = Profile1D::Peano.heated(0.1);
        assert!(h.eval(0, 0.0).abs() < 1e-12);
        assert!((h.eval(0, 0.5) + h.eval(0, -0.5)).abs() < 1e-12);
        assert!(!Profile1D::Peano.has_gradient());
    }
}
