//! Crate-wide error type.

use crate::model::Marginal;

/// Everything that can go wrong in this crate, split between invalid inputs
/// and genuine numerical failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parameter `{name}` = {value}: must satisfy {constraint}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("Feller index mu = 2a/xi^2 = {mu}: must exceed 1")]
    FellerIndexTooSmall { mu: f64 },

    #[error("no sign change for {what} on [{lo}, {hi}]")]
    RootNotBracketed {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("imaginary residue {imag:.3e} of the cgf at u = {u} exceeds 1e-9 (branch error)")]
    NonRealResult { u: f64, imag: f64 },

    #[error("difference stencil at u = {u} does not fit inside the domain (margin {margin:.3e})")]
    TooCloseToBoundary { u: f64, margin: f64 },

    #[error("x = {x} lies outside the admissible set of marginal {marginal}")]
    OutsideSupport { marginal: Marginal, x: f64 },

    #[error("sharp tail for the X marginal needs a prefactor; supply one or extract it first")]
    MissingPrefactor,

    #[error("Fourier integrand does not decay at t = {t}; reduce t")]
    IntegrandNotDecaying { t: f64 },

    #[error("saddlepoint u* = {u_star} is not positive; the tilted inversion requires u* > 0")]
    NonPositiveSaddle { u_star: f64 },

    #[error(
        "only {hits} of {n_paths} paths hit the event (need >= 10); \
         increase t or move x toward 0"
    )]
    ProbabilityTooSmallForN { hits: u64, n_paths: usize },

    #[error("minimizer hit the iteration cap with gradient norm {grad_norm:.3e}; best value {best}")]
    NonConvergence { best: f64, grad_norm: f64 },

    #[error("quadrature did not reach the requested tolerance on [{a}, {b}]")]
    QuadratureFailed { a: f64, b: f64 },

    #[error("method `{method}` is not available for marginal {marginal}")]
    UnsupportedMethod {
        method: &'static str,
        marginal: Marginal,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
