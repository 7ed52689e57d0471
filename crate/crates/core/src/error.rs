use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Errors split into two classes: validation errors (bad input, bad model)
/// and numerical errors (a computation that did not reach its tolerance).
/// The CLI maps the first class to exit status 1 and the second to 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {message}")]
    InvalidModel {
        code: &'static str,
        path: String,
        message: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{a}, {b}]: error estimate {estimate:e} > tolerance {tolerance:e}")]
    Integration {
        a: f64,
        b: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("service law has no density on t > 0: {0}")]
    NoDensity(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("series does not contract: {0}")]
    SeriesDivergence(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("near-singular point at t = {t}: a(t) = {value} is within {distance:e} of the excluded value {excluded}")]
    NearSingular {
        t: f64,
        value: f64,
        excluded: f64,
        distance: f64,
    },

    #[error("reconstructed function is not a tail: {0}")]
    NonTail(String),

    #[error("Laplace inversion failed: {0}")]
    Inversion(String),

    #[error("inversion order {order} is not supported: {reason}")]
    OrderOverflow { order: usize, reason: &'static str },

    #[error("Talbot inversion needs a transform evaluable off the real axis")]
    MethodUnavailable,

    #[error("{what}: deviation {violation:e} exceeds {limit:e}")]
    Accuracy {
        what: &'static str,
        violation: f64,
        limit: f64,
    },

    #[error("moment order {requested} exceeds the configured cap {cap}")]
    MomentCap { requested: usize, cap: usize },

    #[error("simulation produced no complete busy periods")]
    ZeroPeriods,

    #[error("customer exceeded {hops} routing hops")]
    RoutingTrap { hops: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("finite-difference step underflow: {0}")]
    StepUnderflow(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(code: &'static str, path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidModel {
            code,
            path: path.into(),
            message: message.into(),
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidModel { code, .. } => code,
            Error::Domain(_) => "DOMAIN",
            Error::Integration { .. } => "INTEGRATION_FAILURE",
            Error::Divergent(_) => "DIVERGENT_INTEGRAL",
            Error::Overflow(_) => "OVERFLOW",
            Error::NoDensity(_) => "NO_DENSITY",
            Error::GridTooCoarse(_) => "GRID_TOO_COARSE",
            Error::SeriesDivergence(_) => "SERIES_DIVERGENCE",
            Error::Singular(_) => "SINGULAR_MATRIX",
            Error::NearSingular { .. } => "NEAR_SINGULAR",
            Error::NonTail(_) => "NON_TAIL",
            Error::Inversion(_) => "INVERSION_FAILURE",
            Error::OrderOverflow { .. } => "ORDER_OVERFLOW",
            Error::MethodUnavailable => "METHOD_UNAVAILABLE",
            Error::Accuracy { .. } => "ACCURACY",
            Error::MomentCap { .. } => "MOMENT_CAP",
            Error::ZeroPeriods => "ZERO_PERIODS",
            Error::RoutingTrap { .. } => "ROUTING_TRAP",
            Error::EmptySample => "EMPTY_SAMPLE",
            Error::StepUnderflow(_) => "STEP_UNDERFLOW",
            Error::Expression(_) => "EXPRESSION",
            Error::Io(_) => "IO",
        }
    }

    /// JSON-pointer style location of the offending input, when known.
    pub fn path(&self) -> Option<&str> {
        match self {
            Error::InvalidModel { path, .. } => Some(path),
            _ => None,
        }
    }

    /// True for bad-input errors, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel { .. }
                | Error::Domain(_)
                | Error::Expression(_)
                | Error::OrderOverflow { .. }
                | Error::MethodUnavailable
                | Error::MomentCap { .. }
                | Error::NoDensity(_)
                | Error::EmptySample
                | Error::Io(_)
        )
    }
}
