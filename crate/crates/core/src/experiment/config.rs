use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::averaging::TimeRuleKind;
use crate::error::{Error, Result};
use crate::fbm::LatticeConfig;
use crate::field::{FieldSpec, MomentRoute};
use crate::space::SpaceGrid;
use crate::verifier::{regime_check, Functional, RegimeCheck, StochasticScheme, T1Reading};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SimulateFbm,
    VerifyItoTanaka,
    ClarkOcone,
    RegularityScan,
    SolveSde,
    EulerCrosscheck,
    RoughnessStress,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SimulateFbm => "simulate-fbm",
            Self::VerifyItoTanaka => "verify-ito-tanaka",
            Self::ClarkOcone => "clark-ocone",
            Self::RegularityScan => "regularity-scan",
            Self::SolveSde => "solve-sde",
            Self::EulerCrosscheck => "euler-crosscheck",
            Self::RoughnessStress => "roughness-stress",
        }
    }

    fn needs_hurst(&self) -> bool {
        !matches!(self, Self::ClarkOcone)
    }

    fn needs_field(&self) -> bool {
        !matches!(self, Self::SimulateFbm | Self::ClarkOcone)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadingChoice {
    #[default]
    Auto,
    W2,
    Literal,
}

impl ReadingChoice {
    pub fn fixed(&self) -> Option<T1Reading> {
        match self {
            Self::Auto => None,
            Self::W2 => Some(T1Reading::W2),
            Self::Literal => Some(T1Reading::Literal),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Window { lo: f64, hi: f64, points: usize },
    Periodic { points: usize, circumference: f64 },
}

impl SpaceSpec {
    pub fn grid(&self) -> SpaceGrid {
        match *self {
            Self::Window { lo, hi, points } => SpaceGrid::window(lo, hi, points),
            Self::Periodic { points, circumference } => SpaceGrid::periodic(points, circumference),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Finest lattice step.
    #[serde(default = "defaults::step")]
    pub step: f64,
    /// Verification ladder; empty means `[4 step, 2 step, step]`.
    #[serde(default)]
    pub steps: Vec<f64>,
    /// Left truncation of the Brownian lattice.
    #[serde(default = "defaults::left")]
    pub left: f64,
    #[serde(default = "defaults::horizon")]
    pub horizon: f64,
    /// Spatial resolution for tabulated fields.
    #[serde(default = "defaults::points")]
    pub points: usize,
    /// Spatial table; `None` picks the drift's period or `[-4, 4]`.
    #[serde(default)]
    pub space: Option<SpaceSpec>,
    #[serde(default = "defaults::probes")]
    pub probes: Vec<Vec<f64>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            step: defaults::step(),
            steps: Vec::new(),
            left: defaults::left(),
            horizon: defaults::horizon(),
            points: defaults::points(),
            space: None,
            probes: defaults::probes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual bound (verifier, Clark-Ocone).
    #[serde(default = "defaults::relative")]
    pub relative: f64,
    /// Absolute bound when the reference scale vanishes.
    #[serde(default = "defaults::absolute")]
    pub absolute: f64,
    /// Standard errors allowed in moment checks.
    #[serde(default = "defaults::sigmas")]
    pub sigmas: f64,
    /// Decomposition bound `|W1 + W2 - W|`.
    #[serde(default = "defaults::decomposition")]
    pub decomposition: f64,
    /// Expected Clark-Ocone residual order and its allowance; unchecked when `None`.
    #[serde(default)]
    pub order: Option<(f64, f64)>,
    /// Young-versus-Euler sup difference.
    #[serde(default = "defaults::sup_difference")]
    pub sup_difference: f64,
    /// Require a positive residual decay slope.
    #[serde(default = "defaults::yes")]
    pub require_decay: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            relative: defaults::relative(),
            absolute: defaults::absolute(),
            sigmas: defaults::sigmas(),
            decomposition: defaults::decomposition(),
            order: None,
            sup_difference: defaults::sup_difference(),
            require_decay: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default = "defaults::ell")]
    pub ell: f64,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    #[serde(default = "defaults::gaps")]
    pub gaps: Vec<usize>,
    #[serde(default = "defaults::windows")]
    pub windows: usize,
    #[serde(default)]
    pub rule: TimeRuleKind,
    #[serde(default = "defaults::bootstrap")]
    pub bootstrap_reps: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            ell: defaults::ell(),
            gamma: defaults::gamma(),
            gaps: defaults::gaps(),
            windows: defaults::windows(),
            rule: TimeRuleKind::default(),
            bootstrap_reps: defaults::bootstrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressSection {
    #[serde(default = "defaults::cutoffs")]
    pub cutoffs: Vec<usize>,
    #[serde(default = "defaults::ratio_pair")]
    pub ratio_pair: (usize, usize),
    #[serde(default = "defaults::subgrid")]
    pub rule: TimeRuleKind,
    /// Pass when the noise ratio stays below this.
    #[serde(default = "defaults::noise_max")]
    pub noise_max: f64,
    /// Pass when the control ratio exceeds this.
    #[serde(default = "defaults::control_min")]
    pub control_min: f64,
}

impl Default for StressSection {
    fn default() -> Self {
        Self {
            cutoffs: defaults::cutoffs(),
            ratio_pair: defaults::ratio_pair(),
            rule: defaults::subgrid(),
            noise_max: defaults::noise_max(),
            control_min: defaults::control_min(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    #[serde(default)]
    pub y0: f64,
    #[serde(default = "defaults::stride")]
    pub stride: usize,
    #[serde(default = "defaults::beta")]
    pub beta: f64,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub rule: TimeRuleKind,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            y0: 0.0,
            stride: defaults::stride(),
            beta: defaults::beta(),
            gamma: defaults::gamma(),
            rule: TimeRuleKind::default(),
        }
    }
}

/// One experiment. Every default is materialized when the config is echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub hurst: Option<f64>,
    #[serde(default = "defaults::one")]
    pub dims: usize,
    pub seed: u64,
    pub n_paths: usize,
    /// Worker threads; results do not depend on it.
    #[serde(default = "defaults::one")]
    pub workers: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub field: Option<String>,
    #[serde(default)]
    pub functional: Option<String>,
    #[serde(default)]
    pub reading: ReadingChoice,
    #[serde(default)]
    pub scheme: StochasticScheme,
    #[serde(default)]
    pub route: MomentRoute,
    #[serde(default)]
    pub dump_terms: bool,
    /// Regime validator inputs `(m, p)`.
    #[serde(default = "defaults::regime")]
    pub regime: (f64, f64),
    #[serde(default)]
    pub tolerance: Tolerances,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub stress: StressSection,
    #[serde(default)]
    pub solve: SolveSection,
}

mod defaults {
    pub fn one() -> usize {
        1
    }
    pub fn yes() -> bool {
        true
    }
    pub fn step() -> f64 {
        1.0 / 1024.0
    }
    pub fn left() -> f64 {
        50.0
    }
    pub fn horizon() -> f64 {
        1.0
    }
    pub fn points() -> usize {
        1024
    }
    pub fn probes() -> Vec<Vec<f64>> {
        vec![vec![0.0]]
    }
    pub fn relative() -> f64 {
        0.02
    }
    pub fn absolute() -> f64 {
        1e-8
    }
    pub fn sigmas() -> f64 {
        3.0
    }
    pub fn decomposition() -> f64 {
        1e-12
    }
    pub fn sup_difference() -> f64 {
        1e-3
    }
    pub fn ell() -> f64 {
        4.0
    }
    pub fn gamma() -> f64 {
        0.05
    }
    pub fn gaps() -> Vec<usize> {
        vec![2, 4, 8, 16, 32, 64]
    }
    pub fn windows() -> usize {
        8
    }
    pub fn bootstrap() -> usize {
        200
    }
    pub fn cutoffs() -> Vec<usize> {
        vec![1, 2, 4, 8, 16, 32, 64, 128, 256]
    }
    pub fn ratio_pair() -> (usize, usize) {
        (32, 256)
    }
    pub fn subgrid() -> crate::averaging::TimeRuleKind {
        crate::averaging::TimeRuleKind::Subgrid
    }
    pub fn noise_max() -> f64 {
        2.0
    }
    pub fn control_min() -> f64 {
        4.0
    }
    pub fn stride() -> usize {
        1
    }
    pub fn beta() -> f64 {
        0.5
    }
    pub fn regime() -> (f64, f64) {
        (1.0, 2.0)
    }
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses TOML; errors name the offending key path.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| config_error("", e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().message().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error("", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn hurst(&self) -> f64 {
        self.hurst.unwrap_or(0.5)
    }

    /// Ladder sorted coarse to fine.
    pub fn ladder(&self) -> Vec<f64> {
        let mut s = if self.grid.steps.is_empty() {
            vec![4.0 * self.grid.step, 2.0 * self.grid.step, self.grid.step]
        } else {
            self.grid.steps.clone()
        };
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn lattice(&self) -> Result<LatticeConfig> {
        LatticeConfig::new(self.dims, self.grid.step, self.grid.left, self.grid.horizon)
    }

    pub fn field_spec(&self) -> Result<Option<FieldSpec>> {
        self.field
            .as_deref()
            .map(|id| FieldSpec::from_id(id, self.dims).map_err(|e| config_error("field", e.to_string())))
            .transpose()
    }

    pub fn functional(&self) -> Result<Functional> {
        let id = self.functional.as_deref().ok_or_else(|| config_error("functional", "missing field"))?;
        Functional::from_id(id).map_err(|e| config_error("functional", e.to_string()))
    }

    /// Spatial table for averaged drifts.
    pub fn space(&self, field: &FieldSpec) -> SpaceGrid {
        match (&self.grid.space, field.spatial.periodic_circumference()) {
            (Some(s), _) => s.grid(),
            (None, Some(c)) => SpaceGrid::periodic(self.grid.points, c),
            (None, None) => SpaceGrid::window(-4.0, 4.0, self.grid.points + 1),
        }
    }

    pub fn regime(&self) -> Result<RegimeCheck> {
        let sobolev = self.field_spec()?.and_then(|f| f.regularity.sobolev_index);
        Ok(regime_check(self.hurst(), self.regime.0, self.regime.1, sobolev))
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.needs_hurst() {
            match self.hurst {
                None => return Err(config_error("hurst", "missing field")),
                Some(h) if !(h > 0.0 && h < 1.0) || h == 0.5 => {
                    return Err(config_error("hurst", format!("must lie in (0,1) without 1/2, got {h}")))
                }
                _ => {}
            }
        }
        if self.kind.needs_field() && self.field.is_none() {
            return Err(config_error("field", "missing field"));
        }
        if self.kind == ExperimentKind::ClarkOcone {
            self.functional()?;
        }
        if self.n_paths == 0 {
            return Err(config_error("n_paths", "must be positive"));
        }
        if self.workers == 0 {
            return Err(config_error("workers", "must be positive"));
        }
        if self.dims == 0 || self.dims > crate::field::MAX_DIMS {
            return Err(config_error("dims", format!("must lie in 1..={}", crate::field::MAX_DIMS)));
        }
        if let Some(p) = self.grid.probes.iter().position(|x| x.len() != self.dims) {
            return Err(config_error(&format!("grid.probes[{p}]"), format!("expected {} coordinates", self.dims)));
        }
        self.lattice().map_err(|e| config_error("grid", e.to_string()))?;
        self.field_spec()?;
        Ok(())
    }
}
