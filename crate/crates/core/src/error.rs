use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid Besov parameters: {0}")]
    InvalidBesovParams(String),
    #[error("dyadic block {j} outside -1..={j_max}")]
    BlockOutOfRange { j: i32, j_max: i32 },
    #[error("scale {requested} exceeds grid maximum {j_max}")]
    ScaleOverflow { requested: i32, j_max: i32 },
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("conical kernel needs dimension 2")]
    DegenerateCone,
    #[error("sigma field is singular (|det| = {det:e})")]
    SingularSigma { det: f64 },
    #[error("quadrature error estimate {estimate:e} exceeds slack {slack:e}")]
    QuadratureUnderResolved { estimate: f64, slack: f64 },
    #[error("kernel depends on x; a multiplier table needs a translation invariant kernel")]
    NotTranslationInvariant,
    #[error("quadrature remainder bracket {bracket:e} exceeds tolerance {tolerance:e}")]
    RemainderTooLarge { bracket: f64, tolerance: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("admissibility violated ({hypothesis}): {detail}")]
    Admissibility { hypothesis: String, detail: String },
    #[error("iteration is not contracting (factor {factor:.4} at step {iteration})")]
    NotContracting { factor: f64, iteration: usize },
    #[error("residual stalled at {residual:e} after {iterations} iterations")]
    ResidualStall { residual: f64, iterations: usize },
    #[error("lambda {lambda:e} exceeded the doubling limit")]
    LambdaOverflow { lambda: f64 },
    #[error("bad truncation band: eps = {eps}, R = {r}")]
    BadBand { eps: f64, r: f64 },
    #[error("density mass {mass:e} at the torus boundary")]
    AliasingDetected { mass: f64 },
    #[error("admissible region is empty (gamma_max = {gamma_max})")]
    EmptyRegion { gamma_max: f64 },
    #[error("mass drift {drift:e} at step {step}")]
    MassDrift { step: usize, drift: f64 },
    #[error("time step {dt} unstable (amplification {radius})")]
    UnstableStep { dt: f64, radius: f64 },
    #[error("clipped mass fraction {fraction:e} above 1%")]
    ClippingExcess { fraction: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn admissibility(hypothesis: &str, detail: impl Into<String>) -> Error {
    Error::Admissibility {
        hypothesis: hypothesis.to_string(),
        detail: detail.into(),
    }
}
