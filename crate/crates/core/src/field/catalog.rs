//! String identifiers for catalog fields, e.g. `product:cos:tau=0.5:k=1`.
//!
//! Grammar: `head[:sub][:key=value]*`. Brownian components are one-based
//! (`k=1` is `B_1`); spatial frequencies use `freq`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::anchor::Anchor;
use super::profile::Profile1D;
use super::spatial::{FourierSeries, ProductTerm, Spatial};
use super::{FieldSpec, TimeFactor};
use crate::error::{Error, Result};

/// Regularity data used by the regime validators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    /// Sup of `s` with `f in W^{s,2}` locally; `None` for smooth fields.
    pub sobolev_index: Option<f64>,
    /// Spatial Hölder exponent where it is the natural measure.
    pub holder: Option<f64>,
}

impl Regularity {
    pub fn smooth() -> Self {
        Self {
            sobolev_index: None,
            holder: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub kind: &'static str,
    pub description: &'static str,
    pub dims: usize,
    pub deterministic: bool,
    pub product_form: bool,
    pub distributional: bool,
    pub sobolev_index: Option<f64>,
}

const ENTRIES: &[(&str, &str, &str, usize)] = &[
    ("const", "field", "f = 1", 1),
    ("linear", "field", "f = y_1", 1),
    ("sin:omega=1", "field", "sin(freq y_1) cos(omega t)", 1),
    ("cos:freq=1", "field", "cos(freq y_1) cos(omega t)", 1),
    ("sin1cos2", "field", "sin(y_1) cos(y_2)", 2),
    ("bump:sigma=0.5", "field", "exp(-(y_1 - center)^2 / (2 sigma^2))", 1),
    ("poly:c=0,0,1", "field", "sum_n c_n y_1^n", 1),
    ("weierstrass:s=0.5:K=10", "drift", "sum_{k<=K} 2^{-ks} cos(2^k y)", 1),
    ("peano", "drift", "sqrt(2) sgn(y) sqrt|y|", 1),
    ("fourier:K=256:decay=0:seed=1", "drift", "sum_{k<=K} k^{-decay} (a_k cos ky + b_k sin ky), a,b ~ N(0,1)", 1),
    ("fourier:csv=coeffs.csv", "drift", "Fourier series from k_1..k_d,re,im rows", 1),
    ("product:cos:tau=0.5:k=1", "field", "S(y) B_k(tau ∧ t), S from the sub-id", 1),
    ("anchor-poly:gamma=0.5:deg=2", "field", "B_k(gamma ∧ t)^deg y_1", 1),
    ("anchor-exp:gamma=0.5:a=1", "field", "exp(a B_k(gamma ∧ t)) cos(y_1)", 1),
    ("anchor-pair:g1=0.3:g2=0.7", "field", "B_k(g1 ∧ t) B_k(g2 ∧ t) sin(y_1)", 1),
    ("functional:b", "functional", "F = B_1(t1)", 1),
    ("functional:b2", "functional", "F = B_1(t1)^2", 1),
    ("functional:exp", "functional", "F = exp(B_1(t1) - t1/2)", 1),
];

/// Shipped catalog in stable order.
pub fn list_catalog() -> Vec<CatalogEntry> {
    ENTRIES
        .iter()
        .map(|&(id, kind, description, dims)| {
            let spec = if kind == "functional" || id.contains("csv=") {
                None
            } else {
                parse_field_id(id, dims).ok()
            };
            CatalogEntry {
                id,
                kind,
                description,
                dims,
                deterministic: spec.as_ref().is_none_or(FieldSpec::is_deterministic),
                product_form: spec.as_ref().is_some_and(FieldSpec::is_product_form),
                distributional: id.starts_with("fourier"),
                sobolev_index: spec.and_then(|s| s.regularity.sobolev_index),
            }
        })
        .collect()
}

struct Params<'a> {
    id: &'a str,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Params<'a> {
    fn malformed(&self, reason: impl Into<String>) -> Error {
        Error::MalformedCatalogId {
            id: self.id.to_string(),
            reason: reason.into(),
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| self.malformed(format!("`{key}={v}` is not a finite number"))),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| self.malformed(format!("`{key}={v}` is not a non-negative integer"))),
        }
    }

    fn component(&mut self, dims: usize) -> Result<usize> {
        let k = self.usize("k", 1)?;
        if k == 0 || k > dims {
            return Err(self.malformed(format!("component k={k} outside 1..={dims}")));
        }
        Ok(k - 1)
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.map.keys().next() {
            return Err(self.malformed(format!("unknown parameter `{k}`")));
        }
        Ok(())
    }
}

/// Builds a [`FieldSpec`] in `dims` dimensions from its catalog id.
pub fn parse_field_id(id: &str, dims: usize) -> Result<FieldSpec> {
    let mut parts = id.split(':');
    let head = parts.next().unwrap_or_default().trim();
    let mut sub = None;
    let mut map = BTreeMap::new();
    for part in parts {
        match part.split_once('=') {
            Some((k, v)) => {
                map.insert(k.trim(), v.trim());
            }
            None if sub.is_none() && map.is_empty() => sub = Some(part.trim()),
            None => {
                return Err(Error::MalformedCatalogId {
                    id: id.to_string(),
                    reason: format!("expected key=value, got `{part}`"),
                })
            }
        }
    }
    let mut p = Params { id, map };
    let mut time = TimeFactor::One;
    let mut anchors = Vec::new();
    let spatial_head = match head {
        "product" => {
            let sub = sub.ok_or_else(|| p.malformed("product needs a spatial sub-id"))?;
            let tau = p.f64("tau", 0.5)?;
            let component = p.component(dims)?;
            anchors.push(Anchor {
                time: tau,
                component,
                profile: Profile1D::linear(),
            });
            sub
        }
        "anchor-poly" => {
            let gamma = p.f64("gamma", 0.5)?;
            let deg = p.usize("deg", 2)?;
            let component = p.component(dims)?;
            let mut coeffs = vec![0.0; deg + 1];
            coeffs[deg] = 1.0;
            anchors.push(Anchor {
                time: gamma,
                component,
                profile: Profile1D::Poly { coeffs },
            });
            "linear"
        }
        "anchor-exp" => {
            let gamma = p.f64("gamma", 0.5)?;
            let rate = p.f64("a", 1.0)?;
            let component = p.component(dims)?;
            anchors.push(Anchor {
                time: gamma,
                component,
                profile: Profile1D::Exp { rate },
            });
            "cos"
        }
        "anchor-pair" => {
            let g1 = p.f64("g1", 0.3)?;
            let g2 = p.f64("g2", 0.7)?;
            let component = p.component(dims)?;
            for time in [g1, g2] {
                anchors.push(Anchor {
                    time,
                    component,
                    profile: Profile1D::linear(),
                });
            }
            "sin"
        }
        other => {
            if let Some(s) = sub {
                return Err(p.malformed(format!("unexpected sub-id `{s}`")));
            }
            other
        }
    };
    let (spatial, regularity) = parse_spatial(spatial_head, dims, &mut p, &mut time)?;
    p.finish()?;
    let spec = FieldSpec {
        id: id.to_string(),
        dims,
        time,
        spatial,
        anchors,
        regularity,
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_spatial(head: &str, dims: usize, p: &mut Params, time: &mut TimeFactor) -> Result<(Spatial, Regularity)> {
    let mut take_omega = |p: &mut Params| -> Result<()> {
        let omega = p.f64("omega", 0.0)?;
        if omega != 0.0 {
            *time = TimeFactor::Cos { omega };
        }
        Ok(())
    };
    let one = |profile| Ok((Spatial::axis0(dims, profile), Regularity::smooth()));
    match head {
        "const" => one(Profile1D::Const),
        "linear" => one(Profile1D::linear()),
        "sin" | "cos" => {
            let freq = p.f64("freq", 1.0)?;
            take_omega(p)?;
            one(if head == "sin" {
                Profile1D::sin(freq)
            } else {
                Profile1D::cos(freq)
            })
        }
        "sin1cos2" => {
            if dims != 2 {
                return Err(p.malformed("sin1cos2 needs d = 2"));
            }
            take_omega(p)?;
            Ok((
                Spatial::Product {
                    dims,
                    terms: vec![ProductTerm {
                        coef: 1.0,
                        factors: vec![Profile1D::sin(1.0), Profile1D::cos(1.0)],
                    }],
                },
                Regularity::smooth(),
            ))
        }
        "bump" => {
            let sigma = p.f64("sigma", 0.5)?;
            if sigma <= 0.0 {
                return Err(p.malformed("sigma must be positive"));
            }
            let center = p.f64("center", 0.0)?;
            one(Profile1D::Bump { sigma, center })
        }
        "poly" => {
            let coeffs = match p.map.remove("c") {
                None => vec![0.0, 0.0, 1.0],
                Some(v) => v
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| p.malformed(format!("bad coefficient list `{v}`")))?,
            };
            one(Profile1D::Poly { coeffs })
        }
        "weierstrass" => {
            let s = p.f64("s", 0.5)?;
            let modes = p.usize("K", 10)?;
            Ok((
                Spatial::axis0(dims, Profile1D::Weierstrass { s, modes }),
                Regularity {
                    sobolev_index: Some(s),
                    holder: Some(s.min(1.0)),
                },
            ))
        }
        "peano" => Ok((
            Spatial::axis0(dims, Profile1D::Peano),
            Regularity {
                sobolev_index: Some(1.0),
                holder: Some(0.5),
            },
        )),
        "fourier" => {
            let circumference = p.f64("L", 2.0 * std::f64::consts::PI)?;
            if circumference <= 0.0 {
                return Err(p.malformed("circumference L must be positive"));
            }
            let series = if let Some(path) = p.map.remove("csv") {
                FourierSeries::from_csv(Path::new(path), circumference)?
            } else {
                let modes = p.usize("K", 256)?;
                let decay = p.f64("decay", 0.0)?;
                let seed = p.usize("seed", 1)? as u64;
                FourierSeries::white_noise(modes, decay, seed, circumference)
            };
            if series.dims != dims {
                return Err(Error::Dimension {
                    expected: dims,
                    got: series.dims,
                });
            }
            let decay_guess = estimate_decay(&series);
            Ok((
                Spatial::Fourier(series),
                Regularity {
                    sobolev_index: Some(decay_guess - 0.5 * dims as f64),
                    holder: None,
                },
            ))
        }
        other => Err(Error::UnknownCatalogId(other.to_string())),
    }
}

/// Fitted power-law decay of `|c_k|` against `|k|`, zero when undetermined.
fn estimate_decay(series: &FourierSeries) -> f64 {
    let pts: Vec<(f64, f64)> = series
        .modes
        .iter()
        .filter_map(|m| {
            let k = ((m.k[0] as f64).powi(2) + (m.k[1] as f64).powi(2)).sqrt();
            let a = m.re.hypot(m.im);
            (k > 0.0 && a > 0.0).then(|| (k.ln(), a.ln()))
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    crate::stats::fit_line(&xs, &ys).map_or(0.0, |f| (-f.slope).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_required_entries() {
        let list = list_catalog();
        assert!(list.len() >= 10);
        assert!(list.iter().any(|e| e.id == "product:cos:tau=0.5:k=1"));
        assert!(list.iter().any(|e| e.id == "peano"));
        for e in list.iter().filter(|e| e.kind != "functional" && !e.id.contains("csv=")) {
            parse_field_id(e.id, e.dims).unwrap_or_else(|err| panic!("{}: {err}", e.id));
        }
    }

    #[test]
    fn product_id_parses() {
        let f = parse_field_id("product:cos:tau=0.5:k=1", 1).unwrap();
        assert!(f.is_product_form());
        assert_eq!(f.anchors[0].time, 0.5);
        assert_eq!(f.anchors[0].component, 0);
        let f = parse_field_id("sin:omega=1", 1).unwrap();
        assert_eq!(f.time, TimeFactor::Cos { omega: 1.0 });
        assert!(f.is_deterministic());
    }

    #[test]
    fn bad_ids_are_rejected() {
        assert!(matches!(parse_field_id("nope", 1), Err(Error::UnknownCatalogId(_))));
        assert!(matches!(parse_field_id("sin:freq=abc", 1), Err(Error::MalformedCatalogId { .. })));
        assert!(matches!(parse_field_id("sin:zzz=1", 1), Err(Error::MalformedCatalogId { .. })));
        assert!(matches!(parse_field_id("product:cos:k=3", 1), Err(Error::MalformedCatalogId { .. })));
        assert!(parse_field_id("sin1cos2", 1).is_err());
    }

    #[test]
    fn white_noise_regularity() {
        let f = parse_field_id("fourier:K=64:decay=0", 1).unwrap();
        let s = f.regularity.sobolev_index.unwrap();
        assert!(s < 0.0, "{s}");
        assert!(f.is_distributional());
    }
}
