//! Anchored Brownian arguments `B_k(gamma ∧ t)` and their conditional
//! moments.
//!
//! Anchor times are snapped down to the lattice grid, where `B` is known
//! exactly. Conditioning on `F_u` at grid index `c` leaves each anchor
//! `e = min(gamma, s)` with `e > c` Gaussian around `B_k(u)`; anchors with
//! `e <= c` are frozen at their observed values.

use serde::{Deserialize, Serialize};

use super::profile::Profile1D;
use super::spatial::MAX_DIMS;
use crate::quadrature::default_rule;

pub const MAX_ANCHORS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub time: f64,
    /// Zero-based Brownian component.
    pub component: usize,
    pub profile: Profile1D,
}

/// `E_u[Psi]` together with its first two derivatives in the current
/// Brownian value, summed per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorJet {
    pub q: f64,
    pub g: [f64; MAX_DIMS],
    pub h: [[f64; MAX_DIMS]; MAX_DIMS],
}

impl AnchorJet {
    pub const ONE: AnchorJet = AnchorJet {
        q: 1.0,
        g: [0.0; MAX_DIMS],
        h: [[0.0; MAX_DIMS]; MAX_DIMS],
    };

    pub fn has_derivative(&self) -> bool {
        self.g.iter().any(|&x| x != 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentRoute {
    /// Closed forms whenever every component carries at most one live anchor.
    #[default]
    Analytic,
    /// Tensor Gauss-Hermite over the live increments.
    Quadrature,
}

/// Anchors bound to a lattice: grid index plus profile.
#[derive(Debug, Clone)]
pub struct SnappedAnchors {
    pub index: Vec<usize>,
    pub component: Vec<usize>,
    pub profile: Vec<Profile1D>,
}

impl SnappedAnchors {
    pub fn new(anchors: &[Anchor], step: f64, n_right: usize) -> Self {
        let index = anchors
            .iter()
            .map(|a| (((a.time / step) + 1e-9).floor().max(0.0) as usize).min(n_right))
            .collect();
        Self {
            index,
            component: anchors.iter().map(|a| a.component).collect(),
            profile: anchors.iter().map(|a| a.profile.clone()).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Largest snapped anchor index, the end of the Malliavin support.
    pub fn last_index(&self) -> Option<usize> {
        self.index.iter().copied().max()
    }

    /// Moments of `Psi(B(gamma ∧ s))` given information up to grid index
    /// `cond`, where `eval` is the grid index of `s`. `brownian[k][i]` is
    /// `B_k` at grid index `i`. Derivatives count the anchors still random
    /// at `cond`.
    pub fn jet(&self, brownian: &[Vec<f64>], step: f64, cond: usize, eval: usize, route: MomentRoute) -> AnchorJet {
        self.jet_with_support(brownian, step, cond, eval, route, None)
    }

    /// As [`SnappedAnchors::jet`], with an explicit set of anchors whose
    /// derivative is counted. Frozen anchors in the set contribute their
    /// observed slope.
    pub fn jet_with_support(
        &self,
        brownian: &[Vec<f64>],
        step: f64,
        cond: usize,
        eval: usize,
        route: MomentRoute,
        support: Option<&[bool]>,
    ) -> AnchorJet {
        let n = self.index.len();
        if n == 0 {
            return AnchorJet::ONE;
        }
        let mut st = State {
            n,
            random: [false; MAX_ANCHORS],
            active: [false; MAX_ANCHORS],
            mean: [0.0; MAX_ANCHORS],
            end: [0; MAX_ANCHORS],
            cond,
            step,
        };
        let mut shared = false;
        let mut seen = [false; MAX_DIMS];
        for a in 0..n {
            let k = self.component[a];
            let e = self.index[a].min(eval);
            st.end[a] = e;
            if e > cond {
                st.random[a] = true;
                st.mean[a] = brownian[k][cond];
                if seen[k] {
                    shared = true;
                }
                seen[k] = true;
            } else {
                st.mean[a] = brownian[k][e];
            }
            st.active[a] = support.map_or(st.random[a], |s| s[a]);
        }
        if route == MomentRoute::Analytic && !shared {
            self.analytic(&st)
        } else {
            self.quadrature(&st)
        }
    }

    fn analytic(&self, st: &State) -> AnchorJet {
        let n = st.n;
        let mut m = [[0.0; 3]; MAX_ANCHORS];
        for a in 0..n {
            let var = if st.random[a] {
                (st.end[a] - st.cond) as f64 * st.step
            } else {
                0.0
            };
            let heated = self.profile[a].heated(var);
            for (order, slot) in m[a].iter_mut().enumerate() {
                *slot = heated.eval(order, st.mean[a]);
            }
        }
        self.assemble(st, &m, 1.0, AnchorJet { q: 0.0, ..AnchorJet::ONE })
    }

    /// Adds `weight` times the moments built from per-anchor derivative
    /// values `v[a][order]`.
    fn assemble(&self, st: &State, v: &[[f64; 3]; MAX_ANCHORS], weight: f64, mut jet: AnchorJet) -> AnchorJet {
        let n = st.n;
        let prod_except = |skip_a: usize, skip_b: usize| -> f64 {
            let mut p = 1.0;
            for (a, row) in v.iter().enumerate().take(n) {
                if a != skip_a && a != skip_b {
                    p *= row[0];
                }
            }
            p
        };
        jet.q += weight * prod_except(usize::MAX, usize::MAX);
        for a in 0..n {
            if !st.active[a] {
                continue;
            }
            let j = self.component[a];
            jet.g[j] += weight * v[a][1] * prod_except(a, usize::MAX);
            for b in 0..n {
                if !st.active[b] {
                    continue;
                }
                let l = self.component[b];
                jet.h[j][l] += weight
                    * if a == b {
                        v[a][2] * prod_except(a, usize::MAX)
                    } else {
                        v[a][1] * v[b][1] * prod_except(a, b)
                    };
            }
        }
        jet
    }

    fn quadrature(&self, st: &State) -> AnchorJet {
        let n = st.n;
        // random anchors sorted by end index within each component share the
        // increments before them; slot p carries the piece ending at order[p]
        let mut order: Vec<usize> = (0..n).filter(|&a| st.random[a]).collect();
        order.sort_by_key(|&a| (self.component[a], st.end[a]));
        let mut piece_sd = [0.0; MAX_ANCHORS];
        let mut parent = [usize::MAX; MAX_ANCHORS];
        for (p, &a) in order.iter().enumerate() {
            let prev = if p > 0 && self.component[order[p - 1]] == self.component[a] {
                parent[p] = p - 1;
                st.end[order[p - 1]]
            } else {
                st.cond
            };
            piece_sd[p] = ((st.end[a] - prev) as f64 * st.step).sqrt();
        }
        let mut jet = AnchorJet { q: 0.0, ..AnchorJet::ONE };
        let mut pos = [0.0; MAX_ANCHORS];
        let rule = default_rule();
        rule.for_each_node(order.len(), |z, w| {
            let mut y = st.mean;
            for (p, &a) in order.iter().enumerate() {
                let base = if parent[p] == usize::MAX { st.mean[a] } else { pos[parent[p]] };
                pos[p] = base + piece_sd[p] * z[p];
                y[a] = pos[p];
            }
            let mut v = [[0.0; 3]; MAX_ANCHORS];
            for a in 0..n {
                for (o, slot) in v[a].iter_mut().enumerate() {
                    *slot = self.profile[a].eval(o, y[a]);
                }
            }
            jet = self.assemble(st, &v, w, jet);
        })
        .expect("at most three anchors");
        jet
    }
}

struct State {
    n: usize,
    random: [bool; MAX_ANCHORS],
    active: [bool; MAX_ANCHORS],
    mean: [f64; MAX_ANCHORS],
    end: [usize; MAX_ANCHORS],
    cond: usize,
    step: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_anchor(time: f64) -> Anchor {
        Anchor {
            time,
            component: 0,
            profile: Profile1D::Poly {
                coeffs: vec![0.0, 0.0, 1.0],
            },
        }
    }

    #[test]
    fn conditional_square_moment() {
        // E_t[B(g)^2] = B(t)^2 + (g - t)
        let step = 0.25;
        let b = vec![vec![0.0, 0.3, -0.2, 0.5, 1.0]];
        let s = SnappedAnchors::new(&[square_anchor(0.75)], step, 4);
        for route in [MomentRoute::Analytic, MomentRoute::Quadrature] {
            let jet = s.jet(&b, step, 1, 4, route);
            assert!((jet.q - (0.09 + 0.5)).abs() < 1e-12);
            assert!((jet.g[0] - 0.6).abs() < 1e-12);
            assert!((jet.h[0][0] - 2.0).abs() < 1e-12);
            let frozen = s.jet(&b, step, 3, 4, route);
            assert_eq!(frozen.q, 0.25);
            assert_eq!(frozen.g[0], 0.0);
        }
    }

    #[test]
    fn shared_component_uses_nested_increments() {
        // E_0[B(a) B(b)] = a for a < b
        let step = 0.25;
        let b = vec![vec![0.0; 5]];
        let lin = |t| Anchor {
            time: t,
            component: 0,
            profile: Profile1D::linear(),
        };
        let s = SnappedAnchors::new(&[lin(0.5), lin(1.0)], step, 4);
        let jet = s.jet(&b, step, 0, 4, MomentRoute::Analytic);
        assert!((jet.q - 0.5).abs() < 1e-12);
        assert!((jet.h[0][0] - 2.0).abs() < 1e-12);
    }
}
