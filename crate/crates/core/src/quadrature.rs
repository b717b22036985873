//! Gauss-Hermite rules for expectations over standard Gaussians.

use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;

use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 21;
pub const MAX_DIMENSION: usize = 3;

/// Nodes and weights for `E[g(Z)]`, `Z ~ N(0,1)` (probabilists' weight,
/// weights sum to one).
#[derive(Debug, Clone)]
pub struct GaussianRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussianRule {
    pub fn new(n: usize) -> Self {
        let n = NonZeroUsize::new(n.max(1)).expect("non-zero");
        let rule = GaussHermite::new(n);
        let norm = std::f64::consts::PI.sqrt();
        let mut pairs: Vec<(f64, f64)> = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (x * std::f64::consts::SQRT_2, w / norm))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // the eigen-solver leaves O(1e-15) asymmetry; odd integrands should vanish
        let m = pairs.len();
        let sym: Vec<(f64, f64)> = (0..m)
            .map(|i| {
                let (a, b) = (pairs[i], pairs[m - 1 - i]);
                (0.5 * (a.0 - b.0), 0.5 * (a.1 + b.1))
            })
            .collect();
        let total: f64 = sym.iter().map(|p| p.1).sum();
        let (nodes, weights) = sym.into_iter().map(|(x, w)| (x, w / total)).unzip();
        Self { nodes, weights }
    }

    pub fn expect<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * g(z))
            .sum()
    }

    /// `E[g(Z_1, .., Z_k)]` for independent standard normals, `k <= 3`.
    pub fn expect_tensor<F: FnMut(&[f64]) -> f64>(&self, dim: usize, mut g: F) -> Result<f64> {
        let mut total = 0.0;
        self.for_each_node(dim, |z, w| total += w * g(z))?;
        Ok(total)
    }

    /// Visits every tensor node with its product weight.
    pub fn for_each_node<F: FnMut(&[f64], f64)>(&self, dim: usize, mut visit: F) -> Result<()> {
        if dim > MAX_DIMENSION {
            return Err(Error::QuadratureDimension(dim));
        }
        if dim == 0 {
            visit(&[], 1.0);
            return Ok(());
        }
        let n = self.nodes.len();
        let mut idx = [0usize; MAX_DIMENSION];
        let mut z = [0.0; MAX_DIMENSION];
        loop {
            let mut w = 1.0;
            for k in 0..dim {
                z[k] = self.nodes[idx[k]];
                w *= self.weights[idx[k]];
            }
            visit(&z[..dim], w);
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == dim {
                    return Ok(());
                }
            }
        }
    }
}

/// Shared default rule.
pub fn default_rule() -> &'static GaussianRule {
    static RULE: std::sync::OnceLock<GaussianRule> = std::sync::OnceLock::new();
    RULE.get_or_init(GaussianRule::default)
}

impl Default for GaussianRule {
    fn default() -> Self {
        Self::new(DEFAULT_NODES)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments_are_exact() {
        let rule = GaussianRule::default();
        // E[Z^{2k}] = (2k-1)!!
        let expected = [1.0, 1.0, 3.0, 15.0, 105.0, 945.0];
        for (k, e) in expected.iter().enumerate() {
            let m = rule.expect(|z| z.powi(2 * k as i32));
            assert!((m - e).abs() < 1e-10 * e, "moment {k}: {m}");
            let odd = rule.expect(|z| z.powi(2 * k as i32 + 1));
            assert!(odd.abs() < 1e-10);
        }
    }

    #[test]
    fn tensor_rule_factorizes() {
        let rule = GaussianRule::new(9);
        let v = rule.expect_tensor(3, |z| (z[0] * z[1]).powi(2) + z[2].powi(4)).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        assert!(matches!(rule.expect_tensor(4, |_| 1.0), Err(Error::QuadratureDimension(4))));
    }
}
