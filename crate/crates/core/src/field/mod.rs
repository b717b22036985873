//! Adapted cylindrical random fields
//! `f(t, x) = c(t) S(x) prod_i psi_i(B_{k_i}(gamma_i ∧ t))` with closed-form
//! conditional projections and Malliavin data.

mod anchor;
mod catalog;
mod profile;
mod spatial;

pub use anchor::{Anchor, AnchorJet, MomentRoute, SnappedAnchors, MAX_ANCHORS};
pub use catalog::{list_catalog, parse_field_id, CatalogEntry, Regularity};
pub use profile::{heat_polynomial, peano, HeatedProfile, Profile1D};
pub use spatial::{FourierMode, FourierSeries, HeatedSpatial, Jet, ProductTerm, Spatial, MAX_DIMS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::BrownianLattice;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeFactor {
    #[default]
    One,
    /// `cos(omega t)`.
    Cos { omega: f64 },
}

impl TimeFactor {
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeFactor::One => 1.0,
            TimeFactor::Cos { omega } => (omega * t).cos(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub id: String,
    pub dims: usize,
    pub time: TimeFactor,
    pub spatial: Spatial,
    pub anchors: Vec<Anchor>,
    pub regularity: Regularity,
}

impl FieldSpec {
    pub fn from_id(id: &str, dims: usize) -> Result<Self> {
        parse_field_id(id, dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 || self.dims > MAX_DIMS {
            return Err(Error::Dimension {
                expected: MAX_DIMS,
                got: self.dims,
            });
        }
        if self.spatial.dims() != self.dims {
            return Err(Error::Dimension {
                expected: self.dims,
                got: self.spatial.dims(),
            });
        }
        if self.anchors.len() > MAX_ANCHORS {
            return Err(Error::QuadratureDimension(self.anchors.len()));
        }
        for a in &self.anchors {
            if a.component >= self.dims {
                return Err(Error::Component(a.component));
            }
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        self.anchors.is_empty()
    }

    /// `S(x) B_k(tau ∧ t)` with no other time dependence.
    pub fn is_product_form(&self) -> bool {
        self.anchors.len() == 1
            && self.anchors[0].profile == Profile1D::linear()
            && self.time == TimeFactor::One
    }

    pub fn is_distributional(&self) -> bool {
        self.spatial.is_periodic()
    }

    pub fn has_gradient(&self) -> bool {
        self.spatial.has_gradient()
    }

    /// Deterministic evaluation `f(t, y)`.
    pub fn eval_deterministic(&self, t: f64, y: &[f64]) -> Result<f64> {
        if !self.is_deterministic() {
            return Err(Error::RandomField(self.id.clone()));
        }
        Ok(self.time.value(t) * self.spatial.value(y))
    }

    pub fn bind<'a>(&'a self, lattice: &BrownianLattice) -> Result<FieldSample<'a>> {
        self.validate()?;
        if lattice.dims() != self.dims {
            return Err(Error::Dimension {
                expected: self.dims,
                got: lattice.dims(),
            });
        }
        let brownian = (0..lattice.dims()).map(|j| lattice.brownian(j)).collect();
        Ok(FieldSample {
            spec: self,
            step: lattice.step(),
            n_right: lattice.n_right(),
            anchors: SnappedAnchors::new(&self.anchors, lattice.step(), lattice.n_right()),
            brownian,
            route: MomentRoute::Analytic,
        })
    }
}

/// A field bound to one Brownian path. `B` is read on the lattice grid and
/// held constant between grid points.
#[derive(Debug, Clone)]
pub struct FieldSample<'a> {
    pub spec: &'a FieldSpec,
    step: f64,
    n_right: usize,
    anchors: SnappedAnchors,
    brownian: Vec<Vec<f64>>,
    route: MomentRoute,
}

impl<'a> FieldSample<'a> {
    pub fn with_route(mut self, route: MomentRoute) -> Self {
        self.route = route;
        self
    }

    pub fn anchors(&self) -> &SnappedAnchors {
        &self.anchors
    }

    pub fn brownian(&self) -> &[Vec<f64>] {
        &self.brownian
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn index(&self, t: f64) -> usize {
        (((t / self.step) + 1e-9).floor().max(0.0) as usize).min(self.n_right)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.dims {
            return Err(Error::Dimension {
                expected: self.spec.dims,
                got: x.len(),
            });
        }
        if let Some(c) = self.spec.spatial.periodic_circumference() {
            if let Some(&bad) = x.iter().find(|&&v| !(0.0..c).contains(&v)) {
                return Err(Error::OutsidePeriodicDomain {
                    x: bad,
                    circumference: c,
                });
            }
        }
        Ok(())
    }

    /// Anchor moments at grid indices (conditioning `cond`, evaluation `eval`).
    #[inline]
    pub fn anchor_jet(&self, cond: usize, eval: usize) -> AnchorJet {
        self.anchors.jet(&self.brownian, self.step, cond, eval, self.route)
    }

    /// `f(t, x)`.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let i = self.index(t);
        let q = self.anchor_jet(i, i).q;
        Ok(self.spec.time.value(t) * self.spec.spatial.value(x) * q)
    }

    /// `f^a(s, t, x) = E_t[f(s, x)]`.
    pub fn eval_fa(&self, s: f64, t: f64, x: &[f64]) -> Result<f64> {
        if t > s {
            return Err(Error::ConditioningAfterEvaluation { t, s });
        }
        self.check_point(x)?;
        let q = self.anchor_jet(self.index(t), self.index(s)).q;
        Ok(self.spec.time.value(s) * self.spec.spatial.value(x) * q)
    }

    /// Per-component anchor derivative of `E_u[f(s, ·)]` with the pointwise
    /// support `u <= gamma ∧ s`.
    fn malliavin_weights(&self, s: f64, u: f64) -> Result<[f64; MAX_DIMS]> {
        if u > s {
            return Err(Error::ConditioningAfterEvaluation { t: u, s });
        }
        let cond = self.index(u);
        let eval = self.index(s);
        let mut support = [false; MAX_ANCHORS];
        for (a, slot) in support.iter_mut().enumerate().take(self.anchors.index.len()) {
            let e = self.anchors.index[a].min(eval);
            *slot = u <= e as f64 * self.step + 1e-12;
        }
        let jet = self
            .anchors
            .jet_with_support(&self.brownian, self.step, cond, eval, self.route, Some(&support));
        Ok(jet.g)
    }

    /// `g_j(s, u, x) = E_u[(D_j f(s, x))(u)]`.
    pub fn eval_g(&self, j: usize, s: f64, u: f64, x: &[f64]) -> Result<f64> {
        if j >= self.spec.dims {
            return Err(Error::Component(j));
        }
        self.check_point(x)?;
        let g = self.malliavin_weights(s, u)?;
        Ok(self.spec.time.value(s) * self.spec.spatial.value(x) * g[j])
    }

    /// `sum_j d/dx_j g_j(s, u, x)`.
    pub fn eval_divergence(&self, s: f64, u: f64, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let g = self.malliavin_weights(s, u)?;
        let jet = self.spec.spatial.jet(x, 1)?;
        Ok(self.spec.time.value(s) * (0..self.spec.dims).map(|j| jet.grad[j] * g[j]).sum::<f64>())
    }
}
