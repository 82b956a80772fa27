use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeoError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeoError {
    /// A chart point fell outside the surface's domain.
    #[error("chart point {point:?} lies outside the chart domain")]
    OutOfChart { point: Vec<f64> },

    /// A flow evaluation left the flow domain (the geodesic exits the chart first).
    #[error("flow undefined at t = {t}: geodesic left the chart at t = {exit_time}")]
    OutOfDomain { t: f64, exit_time: f64 },

    #[error("step control failed at t = {t} (step {step:e})")]
    StepFailure { t: f64, step: f64 },

    #[error("tangent vectors span a degenerate plane (area {area:e})")]
    DegeneratePlane { area: f64 },

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("quadrature failed to converge on [{lo}, {hi}]")]
    QuadratureFailure { lo: f64, hi: f64 },

    #[error("mesh vertices {0} and {1} are not connected")]
    Disconnected(usize, usize),

    #[error("unknown surface '{0}'")]
    UnknownSurface(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GeoError {
    fn from(e: std::io::Error) -> Self {
        GeoError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for GeoError {
    fn from(e: serde_json::Error) -> Self {
        GeoError::Config(e.to_string())
    }
}
