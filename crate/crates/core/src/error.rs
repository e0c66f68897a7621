use thiserror::Error;

/// Errors raised by the market, agent and equilibrium solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("storage {alpha} outside [0, {pi0}]")]
    AlphaOutOfRange { alpha: f64, pi0: f64 },

    #[error("no sign change of the derivative on [{lo}, {hi}] (values {f_lo}, {f_hi})")]
    NoRoot {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("cumulant is affine; the Esscher equation has no isolated root")]
    Degenerate,

    #[error("objective is not concave (d1 = {d1}, d4 = {d4}, discriminant = {discriminant})")]
    NotConcave { d1: f64, d4: f64, discriminant: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("|rho| = 1 leaves the investor without unhedgeable risk (rho = {rho})")]
    DegenerateCorrelation { rho: f64 },

    #[error("terminal spot price has zero variance")]
    ZeroVariance,

    #[error("model has jump atoms; the Brownian closed form does not apply")]
    NotBrownian,

    #[error("clearing map keeps one sign on [{lo}, {hi}] (values {phi_lo}, {phi_hi})")]
    NoBracket {
        lo: f64,
        hi: f64,
        phi_lo: f64,
        phi_hi: f64,
    },

    #[error("clearing map is not strictly monotone around F = {forward}")]
    NonUniqueClearing { forward: f64 },

    #[error("spot price is zero or negative ({0})")]
    ZeroSpot(f64),

    #[error("forward price is zero")]
    ZeroForward,

    #[error("storage depreciation eps = {0} must be below 1")]
    DegenerateStorageCost(f64),

    #[error("log-sum-exp overflow in the certainty equivalent")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
