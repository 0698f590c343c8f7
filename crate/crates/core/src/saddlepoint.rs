//! The time-dependent saddlepoint equation `dLambda_M/du (u, t) = x`.
//!
//! The derivative of the rescaled cgf is strictly increasing on the
//! effective domain and maps it onto the support of the marginal, so the
//! equation has a unique solution `u*_M(x, t)` for every admissible `x`.
//! As `t` goes to zero, `u*` converges to the relevant domain endpoint
//! (`u_+` or `u_-` for X, `2/xi^2` for V); for `x = 0` it converges to 0.

use crate::cgf::{derivative_refined, BOUNDARY_GUARD};
use crate::error::{Error, Result};
use crate::model::{Marginal, ModelParams};

/// Solution of the saddlepoint equation with its solver diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct SaddlepointResult {
    pub u_star: f64,
    /// `|dLambda/du (u*, t) - x|`, measured with the same derivative the
    /// solver used.
    pub residual: f64,
    /// Bracketing interval the root was isolated in.
    pub bracket: (f64, f64),
    pub t: f64,
    pub x: f64,
}

fn residual_tol(x: f64) -> f64 {
    1e-10 * x.abs().max(1.0)
}

/// Closed-form saddlepoint for the V marginal:
/// `u*_V(x,t) = (2t/xi^2) (b/(e^{bt}-1) - a/x)`, for `x > 0`.
pub fn saddle_v(p: &ModelParams, x: f64, t: f64) -> Result<SaddlepointResult> {
    if !Marginal::V.supports(x) {
        return Err(Error::OutsideSupport {
            marginal: Marginal::V,
            x,
        });
    }
    check_t(t)?;
    let u_star =
        2.0 * t / (p.xi() * p.xi()) * (p.b() / ((p.b() * t).exp() - 1.0) - p.a() / x);
    // self-check through the numerical derivative; when x is so large that
    // u* sits within the evaluation guard of the domain boundary, report
    // the float defect of the cancellation-free identity
    // Lambda'(u*) = x mu xi^2 / (2a) * a/a = x
    let residual = match derivative_refined(p, Marginal::V, u_star, t) {
        Ok(d) => (d - x).abs(),
        Err(Error::TooCloseToBoundary { .. }) => {
            (x * (p.mu() * p.xi() * p.xi() / (2.0 * p.a()) - 1.0)).abs()
        }
        Err(e) => return Err(e),
    };
    Ok(SaddlepointResult {
        u_star,
        residual,
        bracket: (u_star, u_star),
        t,
        x,
    })
}

/// Saddlepoint for the X marginal at `x != 0`, by bracketed root finding on
/// `u -> dLambda_X/du (u, t) - x` over the interior of the effective domain.
pub fn saddle_x(p: &ModelParams, x: f64, t: f64) -> Result<SaddlepointResult> {
    if !Marginal::X.supports(x) {
        return Err(Error::OutsideSupport {
            marginal: Marginal::X,
            x,
        });
    }
    solve_x(p, x, t)
}

/// The `x = 0` saddlepoint of the X marginal: the minimizer of
/// `Lambda_X(., t)`, strictly positive and converging to 0 as `t -> 0`.
pub fn saddle_x0(p: &ModelParams, t: f64) -> Result<SaddlepointResult> {
    solve_x(p, 0.0, t)
}

/// Dispatch on the marginal; `x = 0` is admissible for X only.
pub fn saddle(p: &ModelParams, m: Marginal, x: f64, t: f64) -> Result<SaddlepointResult> {
    match m {
        Marginal::V => saddle_v(p, x, t),
        Marginal::X if x == 0.0 => saddle_x0(p, t),
        Marginal::X => saddle_x(p, x, t),
    }
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "t",
            value: t,
            constraint: "t > 0",
        });
    }
    Ok(())
}

/// Generic bracketed solve, shared by `saddle_x`/`saddle_x0` and used as a
/// cross-check against the closed form for V. The bracket shrink factor
/// walks the ladder eps, eps/10, eps/100 before giving up: the root exists
/// strictly inside the domain but `Lambda'` blows up at the boundary, so a
/// bracket too close to it can defeat the finite-difference objective.
pub(crate) fn solve_x(p: &ModelParams, x: f64, t: f64) -> Result<SaddlepointResult> {
    solve_on(p, Marginal::X, x, t)
}

pub(crate) fn solve_on(
    p: &ModelParams,
    m: Marginal,
    x: f64,
    t: f64,
) -> Result<SaddlepointResult> {
    check_t(t)?;
    let bounds = p.domain_bounds(m, t)?;
    // For V the domain is a half line; bracket the root between a far-left
    // point (where Lambda' is small) and the upper boundary.
    let (lo_limit, hi_limit) = if bounds.lower.is_finite() {
        (bounds.lower, bounds.upper)
    } else {
        // Lambda_V' spans (0, inf) on (lo, upper) once lo is far enough left
        let width = 2.0 * bounds.upper.abs().max(1.0);
        let mut lo = bounds.upper - width;
        while derivative_refined(p, m, lo, t)? > x {
            lo -= width;
        }
        (lo, bounds.upper)
    };
    let range = hi_limit - lo_limit;

    // warm start from the limiting value alpha0(x)
    let seed = match (m, x) {
        (Marginal::X, x) if x != 0.0 => {
            let (lo, hi) = p.limiting_u_pm();
            Some(if x > 0.0 { hi } else { lo })
        }
        (Marginal::V, _) => Some(2.0 / (p.xi() * p.xi())),
        _ => None,
    };

    let objective = |u: f64| -> f64 {
        match derivative_refined(p, m, u, t) {
            Ok(d) => d - x,
            // outside/too close to the boundary: sign of the divergence
            Err(_) => {
                if u > 0.5 * (lo_limit + hi_limit) {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    };

    let mut eps = 1e-8;
    for _ in 0..3 {
        let margin = (eps * range).max(2.0 * BOUNDARY_GUARD);
        let lo = lo_limit + margin;
        let hi = hi_limit - margin;
        let flo = objective(lo);
        let fhi = objective(hi);
        if flo.is_finite() && fhi.is_finite() && flo < 0.0 && fhi > 0.0 {
            let u_star = crate::roots::brent_seeded(
                &objective,
                lo,
                hi,
                seed.filter(|s| *s > lo && *s < hi),
                residual_tol(x),
                300,
            )?;
            let residual = (derivative_refined(p, m, u_star, t)? - x).abs();
            return Ok(SaddlepointResult {
                u_star,
                residual,
                bracket: (lo, hi),
                t,
                x,
            });
        }
        eps /= 10.0;
    }
    Err(Error::RootNotBracketed {
        what: "saddlepoint equation",
        lo: lo_limit,
        hi: hi_limit,
    })
}
