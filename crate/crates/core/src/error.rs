use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown profile `{0}` (expected tanh, algebraic or smoothstep)")]
    UnknownProfile(String),

    #[error("profile `{profile}` is not admissible: {condition} fails at t = {t}")]
    AdmissibilityViolation {
        profile: String,
        condition: &'static str,
        t: f64,
    },

    #[error("denominator x + beta*sigma_a(x) = {denominator} is not positive at x = {x}")]
    DomainError { x: f64, denominator: f64 },

    #[error("{kind} regularization is not a multiplicative potential")]
    NotMultiplicative { kind: &'static str },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("quadrature failed in {context}: error estimate {estimate:e} above tolerance")]
    QuadratureFailure { context: String, estimate: f64 },

    #[error("interaction matrix is not unimodular: ad - bc = {det}")]
    NotUnimodular { det: f64 },

    #[error("step size underflow at x = {x} (h = {h:e})")]
    StepSizeUnderflow { x: f64, h: f64 },

    #[error("cannot rescale: psi(x0) = {value:e} vanishes (k x0 hits a node)")]
    RescaleImpossible { value: f64 },

    #[error("no free region: |V| < tolerance only beyond x = {x_fit}, but x0 = {x0}")]
    NoFreeRegion { x_fit: f64, x0: f64 },

    #[error("ill-conditioned free-wave fit ({reason}); try another x0")]
    IllConditionedFit { reason: String },

    #[error("coefficient 1 - beta*sigma_a'(x) has a degenerate zero near x = {x}")]
    SingularCoefficient { x: f64 },

    #[error("resonant box: sin(k x0) = {value:e}")]
    ResonantBox { value: f64 },

    #[error("grid too coarse: {reason}")]
    GridTooCoarse { reason: String },

    #[error("extrapolation to 0+ unstable: {reason}")]
    ExtrapolationUnstable { reason: String },

    #[error("vanishing energy denominator with nonzero numerator at (lambda, mu, nu) = ({lambda}, {mu}, {nu})")]
    DegenerateDenominator { lambda: f64, mu: f64, nu: f64 },

    #[error("Hilbert space dimension {dim} exceeds the limit {limit}")]
    DimensionTooLarge { dim: u128, limit: u128 },

    #[error("{what} did not converge (last residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },

    #[error("fit is poor: {reason}")]
    FitPoor { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be non-negative and finite",
        })
    }
}
