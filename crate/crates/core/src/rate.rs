//! Rate functions, saddlepoint limit coefficients, the Freidlin-Wentzell
//! marginal rate function, and a generic numeric Legendre-Fenchel transform
//! with steepness diagnostics.
//!
//! The limiting rescaled cgf of either marginal is identically zero on its
//! effective domain and infinite outside, so its convex conjugate is
//! piecewise linear:
//!
//! ```text
//! Lambda*_X(x) = u_- x  (x < 0),   u_+ x  (x >= 0),
//! Lambda*_V(x) = 2x/xi^2  (x >= 0),   +inf  (x < 0).
//! ```
//!
//! A flat cgf on an interval is the textbook failure mode of essential
//! smoothness: the boundary slopes are 0, not infinity, which is exactly
//! what [`steepness_report`] diagnoses.

use crate::error::{Error, Result};
use crate::fitting::richardson;
use crate::model::{DomainBounds, Marginal, ModelParams};
use crate::saddlepoint;

/// A rate-function value at a point; `value` may be `+inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateValue {
    pub value: f64,
    pub x: f64,
}

/// `Lambda*_X(x) = (u_- 1{x<0} + u_+ 1{x>=0}) x`: finite, nonnegative,
/// piecewise linear.
pub fn rate_x(p: &ModelParams, x: f64) -> RateValue {
    let (u_minus, u_plus) = p.limiting_u_pm();
    let value = if x < 0.0 { u_minus * x } else { u_plus * x };
    RateValue { value, x }
}

/// `Lambda*_V(x) = 2x/xi^2` for `x >= 0`, `+inf` below.
pub fn rate_v(p: &ModelParams, x: f64) -> RateValue {
    let value = if x >= 0.0 {
        2.0 * x / (p.xi() * p.xi())
    } else {
        f64::INFINITY
    };
    RateValue { value, x }
}

/// `Lambda*_M(x)` for either marginal.
pub fn rate(p: &ModelParams, m: Marginal, x: f64) -> RateValue {
    match m {
        Marginal::X => rate_x(p, x),
        Marginal::V => rate_v(p, x),
    }
}

/// Small-time saddlepoint coefficients `(alpha0, alpha1)` in
/// `u*_M(x, t) = alpha0(x) + alpha1(x) t + O(t^2)`.
///
/// `alpha0` has closed forms (`u_±` for X, `2/xi^2` for V); `alpha1` is
/// `-b/xi^2 - mu/x` for V (from the closed-form saddlepoint) and is
/// extracted for X by Richardson extrapolation of `(u*(x,t) - alpha0)/t`
/// over `t in {0.02, 0.01, 0.005}`.
pub fn alpha_coeffs(p: &ModelParams, m: Marginal, x: f64) -> Result<(f64, f64)> {
    if !m.supports(x) {
        return Err(Error::OutsideSupport { marginal: m, x });
    }
    match m {
        Marginal::V => {
            let alpha0 = 2.0 / (p.xi() * p.xi());
            let alpha1 = -p.b() / (p.xi() * p.xi()) - p.mu() / x;
            Ok((alpha0, alpha1))
        }
        Marginal::X => {
            let (u_minus, u_plus) = p.limiting_u_pm();
            let alpha0 = if x > 0.0 { u_plus } else { u_minus };
            let ts = [0.02, 0.01, 0.005];
            let mut vals = Vec::with_capacity(ts.len());
            for &t in &ts {
                let u = saddlepoint::saddle_x(p, x, t)?.u_star;
                vals.push((u - alpha0) / t);
            }
            Ok((alpha0, richardson(&ts, &vals)))
        }
    }
}

/// Freidlin-Wentzell marginal rate function started from `v0 >= 0`:
/// `(2/xi^2)(sqrt(x) - sqrt(v0))^2` for `x >= 0`, `+inf` below.
/// At `v0 = 0` this collapses to [`rate_v`].
pub fn fw_rate(p: &ModelParams, v0: f64, x: f64) -> RateValue {
    assert!(v0 >= 0.0, "fw_rate requires v0 >= 0, got {v0}");
    let value = if x >= 0.0 {
        let d = x.sqrt() - v0.sqrt();
        2.0 / (p.xi() * p.xi()) * d * d
    } else {
        f64::INFINITY
    };
    RateValue { value, x }
}

/// Numeric Legendre-Fenchel transform `sup_u { u x - cgf(u) }` of a curve
/// on the (possibly unbounded) domain `(lower, upper)`.
///
/// The objective is maximized on an `n`-point grid (`n >= 100`) and refined
/// by golden section around the interior argmax. When the argmax sits at a
/// finite endpoint the endpoint value is returned as-is, so suprema
/// attained at domain boundaries are exact to machine precision. Divergence
/// toward an unbounded end (objective still increasing over the last three
/// grid points) yields `+inf`.
pub fn legendre_transform<F: Fn(f64) -> f64>(
    cgf: F,
    lower: f64,
    upper: f64,
    n: usize,
    x: f64,
) -> RateValue {
    assert!(n >= 100, "need at least 100 grid points, got {n}");
    assert!(lower < upper, "empty domain");
    let window = 50.0 * (1.0 + x.abs());
    let lo = if lower.is_finite() { lower } else { -window };
    let hi = if upper.is_finite() { upper } else { window };
    let obj = |u: f64| x * u - cgf(u);

    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    let vals: Vec<f64> = (0..=n)
        .map(|k| {
            let u = lo + (hi - lo) * k as f64 / n as f64;
            obj(u)
        })
        .collect();
    for (i, &v) in vals.iter().enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }

    // divergence toward an unbounded end
    let increasing_tail =
        |a: f64, b: f64, c: f64| a < b && b < c;
    if upper.is_infinite()
        && best_i == n
        && increasing_tail(vals[n - 2], vals[n - 1], vals[n])
    {
        return RateValue {
            value: f64::INFINITY,
            x,
        };
    }
    if lower.is_infinite() && best_i == 0 && increasing_tail(vals[2], vals[1], vals[0]) {
        return RateValue {
            value: f64::INFINITY,
            x,
        };
    }

    // supremum attained at a finite boundary: return it exactly
    if (best_i == 0 && lower.is_finite()) || (best_i == n && upper.is_finite()) {
        return RateValue { value: best, x };
    }

    // golden-section refinement between the argmax neighbours
    let (mut a, mut b) = (
        lo + (hi - lo) * best_i.saturating_sub(1) as f64 / n as f64,
        lo + (hi - lo) * (best_i + 1).min(n) as f64 / n as f64,
    );
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = obj(d);
        }
    }
    RateValue {
        value: best.max(fc).max(fd),
        x,
    }
}

/// Steepness diagnostic of a limiting cgf.
#[derive(Clone, Debug)]
pub struct SteepnessReport {
    pub domain: DomainBounds,
    /// Estimated limits of `|Lambda'|` toward the lower and upper domain
    /// boundaries; `+inf` when the slope diverges (or the side is
    /// unbounded, where the steepness condition is vacuous).
    pub boundary_slopes: (f64, f64),
    /// Both slopes infinite with nonempty interior.
    pub essentially_smooth: bool,
}

/// Run the boundary-slope probe on an arbitrary curve.
pub fn steepness_from_curve<F: Fn(f64) -> f64>(
    cgf: F,
    lower: f64,
    upper: f64,
) -> SteepnessReport {
    let width = if lower.is_finite() && upper.is_finite() {
        upper - lower
    } else {
        1.0
    };
    let probe = |boundary: f64, inward: f64| -> f64 {
        if boundary.is_infinite() {
            return f64::INFINITY;
        }
        let mut slopes = Vec::new();
        for k in 2..=7 {
            let delta = width * 10f64.powi(-k);
            let u = boundary + inward * delta;
            let h = delta / 10.0;
            let s = ((cgf(u + h) - cgf(u - h)) / (2.0 * h)).abs();
            if s.is_finite() {
                slopes.push(s);
            }
        }
        match slopes.last() {
            None => f64::INFINITY,
            Some(&last) => {
                let grows = slopes
                    .windows(2)
                    .all(|w| w[1] > 4.0 * w[0].max(f64::MIN_POSITIVE));
                if grows && slopes.len() > 2 {
                    f64::INFINITY
                } else {
                    last
                }
            }
        }
    };
    let lo_slope = probe(lower, 1.0);
    let hi_slope = probe(upper, -1.0);
    SteepnessReport {
        domain: DomainBounds {
            lower,
            upper,
            t: 0.0,
        },
        boundary_slopes: (lo_slope, hi_slope),
        essentially_smooth: lower < upper && lo_slope.is_infinite() && hi_slope.is_infinite(),
    }
}

/// Steepness of the limiting cgf of marginal `m`, probed through the
/// smallest time in `t_grid` (the limit is approached linearly in `t`).
///
/// The limiting cgf here is zero on the interior, so the boundary slopes
/// come out near zero and `essentially_smooth` is `false` for both
/// marginals: the classical smoothness hypothesis fails even though the
/// tail asymptotics hold.
pub fn steepness_report(p: &ModelParams, m: Marginal, t_grid: &[f64]) -> Result<SteepnessReport> {
    assert!(!t_grid.is_empty(), "t_grid must be nonempty");
    let t_min = t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(t_min.is_finite() && t_min > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "t_grid",
            value: t_min,
            constraint: "all entries > 0",
        });
    }
    let limiting = p.domain_bounds(m, 0.0)?;
    let curve = |u: f64| match crate::cgf::cgf_eval(p, m, u, t_min) {
        Ok(v) if v.finite => v.lambda,
        _ => f64::INFINITY,
    };
    let mut report = steepness_from_curve(curve, limiting.lower, limiting.upper);
    report.domain = limiting;
    Ok(report)
}
