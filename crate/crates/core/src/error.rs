use thiserror::Error;

/// Errors raised by the numerical layers and the front ends built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown distribution `{0}` (expected normal, centered_exponential, t2 or cauchy)")]
    UnknownDistribution(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tilted integral diverges at s = {s}, t = {t}")]
    DomainDiverges { s: f64, t: f64 },

    #[error("quadrature did not reach tolerance: estimated error {error:e} after {subdivisions} subdivisions")]
    QuadratureFailure { error: f64, subdivisions: usize },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("no feasible a > 0 for b = {0}: upper tail is zero")]
    InfeasibleEverywhere(f64),

    #[error("singular tilted covariance (det = {0:e})")]
    SingularHessian(f64),

    #[error("b = {0} is outside the supported range 0.01 <= |b| <= 0.99")]
    DomainUnsupported(f64),

    #[error("sup of g(t, a; b) over t is not attained at t < 0 (a = {a}, b = {b}); the method needs EX = 0 or EX^2 = infinity")]
    NonNegativeTilt { a: f64, b: f64 },

    #[error("moment undefined for `{0}`: Edgeworth expansion needs finite variance and skewness")]
    MomentUndefined(String),

    #[error("distribution `{0}` has no quantile function, Monte Carlo is unavailable")]
    SamplerUnavailable(String),
}

impl Error {
    /// True for failures of an iterative or quadrature routine, as opposed to
    /// a request that lies outside the method's domain.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure { .. } | Error::NoConvergence(_) | Error::SingularHessian(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
