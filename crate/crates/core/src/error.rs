use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("lattice horizon and left extent must be positive (left={left}, horizon={horizon})")]
    NonPositiveHorizon { left: f64, horizon: f64 },
    #[error("{what} = {value} is not an integral number of steps of size {step}")]
    NonIntegralCells {
        what: &'static str,
        value: f64,
        step: f64,
    },
    #[error("Hurst index must lie in (0,1) and differ from 1/2, got {0}")]
    InvalidHurst(f64),
    #[error("time {0} is not a point of the lattice grid")]
    NotOnLattice(f64),
    #[error("time {0} is not a point of the evaluation grid")]
    NotOnEvalGrid(f64),
    #[error("expected u <= r, got u={u}, r={r}")]
    ReversedTimes { u: f64, r: f64 },
    #[error("conditioning time {t} exceeds evaluation time {s}")]
    ConditioningAfterEvaluation { t: f64, s: f64 },
    #[error("cannot coarsen lattice by factor {factor}: {reason}")]
    Coarsening { factor: usize, reason: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("component index {0} out of range")]
    Component(usize),

    #[error("unknown catalog id `{0}`")]
    UnknownCatalogId(String),
    #[error("malformed catalog id `{id}`: {reason}")]
    MalformedCatalogId { id: String, reason: String },
    #[error("point {x} lies outside the periodic domain [0, {circumference})")]
    OutsidePeriodicDomain { x: f64, circumference: f64 },
    #[error("field `{0}` has no declared spatial gradient")]
    NoGradient(String),
    #[error("Gauss-Hermite quadrature dimension {0} exceeds the supported maximum of 3")]
    QuadratureDimension(usize),
    #[error("field `{0}` is random; this operation needs a deterministic field")]
    RandomField(String),

    #[error("heat time must be non-negative, got {0}")]
    NegativeHeatTime(f64),
    #[error("grid size {0} is not a power of two")]
    GridNotPowerOfTwo(usize),
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("need at least {needed} scales, got {got}")]
    InsufficientScales { needed: usize, got: usize },
    #[error("embedding probe needs gamma < epsilon_1 (gamma={gamma}, epsilon_1={epsilon})")]
    EmbeddingExponent { gamma: f64, epsilon: f64 },
    #[error("need at least {needed} sample paths, got {got}")]
    InsufficientPaths { needed: usize, got: usize },

    #[error("Young sums did not converge by depth {depth}: Cauchy residual {residual:e}")]
    YoungNonConvergence { depth: usize, residual: f64 },
    #[error("solution left the tabulated window at t={t}: Y={y} outside [{lo}, {hi}]")]
    LeftWindow { t: f64, y: f64, lo: f64, hi: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unknown functional id `{0}`")]
    UnknownFunctional(String),
    #[error("missing analytic data: {0}")]
    MissingAnalytic(String),
    #[error("neither reading of the semigroup term shows a decaying residual")]
    NoDecayingReading,
    #[error("grid ladder needs at least 3 levels, got {0}")]
    ShortLadder(usize),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
