use thiserror::Error;

/// Errors raised by the engine.
///
/// Geometric failures (critical points, degenerate level sets) are kept
/// apart from usage failures so that callers can map them to different
/// exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("domain error in {func}: argument value {value} ({context})")]
    Domain {
        func: &'static str,
        value: f64,
        context: String,
    },

    #[error("syntax error at byte {offset}: expected one of {}", expected.join(", "))]
    Syntax { offset: usize, expected: Vec<String> },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),

    #[error("builtin `{tag}` expects {expected} parameter(s), got {got}")]
    Arity {
        tag: String,
        expected: String,
        got: usize,
    },

    #[error("singular form: |det| = {det:e} is below {threshold:e}")]
    SingularForm { det: f64, threshold: f64 },

    #[error("critical point: |dF| = {0:e}")]
    CriticalPoint(f64),

    #[error("degenerate level set: |U(F)| = {0:e}")]
    Degenerate(f64),

    #[error("stationary reparameterization: psi'(F) = {0:e}")]
    StationaryPsi(f64),

    #[error("singular map: {0}")]
    SingularMap(String),

    #[error("non-centroaffine immersion: det[A|dA] = {value:e} at {point:?}")]
    NonCentroaffine { value: f64, point: Vec<f64> },

    #[error("calibration failure: det[A|dA] varies by {max_dev:e} (relative)")]
    Calibration { max_dev: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    /// True for failures caused by the geometry of the input rather than by
    /// a malformed request.
    pub fn is_geometric(&self) -> bool {
        matches!(
            self,
            Error::CriticalPoint(_)
                | Error::Degenerate(_)
                | Error::Calibration { .. }
                | Error::NonCentroaffine { .. }
                | Error::SingularForm { .. }
                | Error::SingularMap(_)
                | Error::StationaryPsi(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
