//! Rescaled cumulant generating functions of the two marginals and their
//! small-time expansion coefficients.
//!
//! For `M` either marginal, `Lambda_M(u, t) = t log E[exp(u M_t / t)]` has
//! the closed form
//!
//! ```text
//! Lambda_M(u,t) = -(mu t / 2) [ g_t(u) + 2 log f_t(u) ],
//!
//! f_t_x(u) = cosh(d(u/t) t/2) - g_t_x(u)/(t d(u/t)) * sinh(d(u/t) t/2),
//! f_t_v(u) = 1 + u xi^2 (1 - e^{bt}) / (2bt),
//! g_t_x(u) = b t + rho xi u,          g_t_v(u) = 0,
//! d(u)     = [ (b + rho xi u)^2 + u (1 - u) xi^2 ]^{1/2}.
//! ```
//!
//! All trigonometric/hyperbolic work happens in complex arithmetic with the
//! principal branch: `d(u/t)` is purely imaginary at leading order inside
//! the domain and branch errors are the dominant bug class, so realness of
//! the assembled `Lambda` is asserted rather than assumed. `log f_t_x` is
//! evaluated through the exponentially-split representation
//!
//! ```text
//! f = (e^z / 2) [ (1 - G) + (1 + G) e^{-2z} ],   z = d t/2,  G = g/(t d),
//! ```
//!
//! which keeps the logarithm single-valued on the integration strips used
//! by the Fourier inversion (the principal square root gives `Re d >= 0`,
//! so `|e^{-2z}| <= 1` and no overflow can occur).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Marginal, ModelParams};

/// Distance from a domain boundary below which evaluation is refused;
/// log f suffers catastrophic cancellation closer in.
pub(crate) const BOUNDARY_GUARD: f64 = 1e-8;

/// `d(u) = [(b + rho xi u)^2 + u(1-u) xi^2]^{1/2}`, principal branch.
pub fn d_fn(p: &ModelParams, u: Complex64) -> Complex64 {
    let s = Complex64::new(p.b(), 0.0) + p.rho() * p.xi() * u;
    let radicand = s * s + u * (Complex64::new(1.0, 0.0) - u) * (p.xi() * p.xi());
    radicand.sqrt()
}

/// `sinh(z)/z` with a series fallback near the removable singularity.
fn sinhc(z: Complex64) -> Complex64 {
    if z.norm_sqr() < 1e-12 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) + z2 / 6.0 * (Complex64::new(1.0, 0.0) + z2 / 20.0)
    } else {
        z.sinh() / z
    }
}

fn g_x(p: &ModelParams, w: Complex64, t: f64) -> Complex64 {
    Complex64::new(p.b() * t, 0.0) + p.rho() * p.xi() * w
}

fn c_v(p: &ModelParams, t: f64) -> f64 {
    p.xi() * p.xi() * (1.0 - (p.b() * t).exp()) / (2.0 * p.b() * t)
}

/// `f_t_m` at a complex argument, by direct evaluation. Safe for all real
/// arguments (there `|d t/2|` stays bounded), used for domain scans and the
/// `f` field of [`CgfValue`].
pub(crate) fn f_complex(p: &ModelParams, m: Marginal, w: Complex64, t: f64) -> Complex64 {
    match m {
        Marginal::V => Complex64::new(1.0, 0.0) + w * c_v(p, t),
        Marginal::X => {
            let z = d_fn(p, w / t) * (0.5 * t);
            let g = g_x(p, w, t);
            z.cosh() - 0.5 * g * sinhc(z)
        }
    }
}

/// Real-argument `f_t_x`; the zeros nearest the origin are the domain
/// boundaries of `Lambda_X(., t)`.
pub(crate) fn f_x_real(p: &ModelParams, u: f64, t: f64) -> f64 {
    f_complex(p, Marginal::X, Complex64::new(u, 0.0), t).re
}

/// Branch-stable `log f_t_m(w)`. Valid on the closure of the real domain
/// and on the vertical strips `w = u* + i u t` used by the tilted Fourier
/// inversion; not meant for real arguments beyond the first zeros of `f`.
pub(crate) fn log_f(p: &ModelParams, m: Marginal, w: Complex64, t: f64) -> Complex64 {
    match m {
        Marginal::V => (Complex64::new(1.0, 0.0) + w * c_v(p, t)).ln(),
        Marginal::X => {
            let d = d_fn(p, w / t);
            let z = d * (0.5 * t);
            let g = g_x(p, w, t);
            if z.norm() < 0.25 {
                // near the removable d = 0 point f is close to 1
                (z.cosh() - 0.5 * g * sinhc(z)).ln()
            } else {
                let ratio = g / (t * d);
                let one = Complex64::new(1.0, 0.0);
                let h = (one - ratio) + (one + ratio) * (-2.0 * z).exp();
                z - std::f64::consts::LN_2 + h.ln()
            }
        }
    }
}

/// Value of the rescaled cgf together with its building blocks.
#[derive(Clone, Copy, Debug)]
pub struct CgfValue {
    /// `Lambda_M(u, t)`, `+inf` outside the closed effective domain.
    pub lambda: f64,
    /// `f_t_m(u)`; real (up to roundoff) for real `u`.
    pub f: Complex64,
    /// `g_t_m(u)`.
    pub g: f64,
    /// Whether `u` lies strictly inside the effective domain (with a 1e-8
    /// safety margin at the boundaries).
    pub finite: bool,
}

/// Evaluate `Lambda_M(u, t)` for real `u` and `t > 0`.
///
/// Outside the guarded domain this returns `lambda = +inf`, `finite =
/// false` rather than an error; [`Error::NonRealResult`] signals a branch
/// failure inside the domain.
pub fn cgf_eval(p: &ModelParams, m: Marginal, u: f64, t: f64) -> Result<CgfValue> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "t",
            value: t,
            constraint: "t > 0",
        });
    }
    let bounds = p.domain_bounds(m, t)?;
    let w = Complex64::new(u, 0.0);
    let f = f_complex(p, m, w, t);
    let g = match m {
        Marginal::X => p.b() * t + p.rho() * p.xi() * u,
        Marginal::V => 0.0,
    };
    if !bounds.strictly_inside(u, BOUNDARY_GUARD) {
        return Ok(CgfValue {
            lambda: f64::INFINITY,
            f,
            g,
            finite: false,
        });
    }
    let lf = log_f(p, m, w, t);
    let imag = p.mu() * t * lf.im;
    if imag.abs() > 1e-9 {
        return Err(Error::NonRealResult { u, imag });
    }
    let lambda = -(p.mu() * t / 2.0) * (g + 2.0 * lf.re);
    Ok(CgfValue {
        lambda,
        f,
        g,
        finite: true,
    })
}

/// Leading small-time coefficients of `f_t` and `g_t`:
/// `f_t = f0 + f1 t + O(t^2)`, `g_t = g0 + O(t)`.
#[derive(Clone, Copy, Debug)]
pub struct ExpansionCoeffs {
    pub f0: f64,
    pub f1: f64,
    pub g0: f64,
}

/// Closed forms of the expansion coefficients on the open limiting domain.
///
/// With `theta = rho_bar xi u / 2`:
///
/// ```text
/// f0_x = cos(theta) - (rho/rho_bar) sin(theta),
/// f1_x = rho(xi + 2 b rho)/(4 rho_bar^2) cos(theta)
///        + [ (xi + 2 b rho)/(4 rho_bar) - (xi rho + 2b)/(2 u xi rho_bar^3) ] sin(theta),
/// f0_v = 1 - u xi^2 / 2,   f1_v = -b u xi^2 / 4,
/// g0_x = rho xi u,         g0_v = 0,
/// ```
///
/// with the continuous extension `f1_x(0) = -b/2`.
pub fn expansion_coeffs(p: &ModelParams, m: Marginal, u: f64) -> ExpansionCoeffs {
    match m {
        Marginal::V => ExpansionCoeffs {
            f0: 1.0 - u * p.xi() * p.xi() / 2.0,
            f1: -p.b() * u * p.xi() * p.xi() / 4.0,
            g0: 0.0,
        },
        Marginal::X => {
            let theta = p.rho_bar() * p.xi() * u / 2.0;
            let (s, c) = theta.sin_cos();
            let f0 = c - p.rho() / p.rho_bar() * s;
            let f1 = if u == 0.0 {
                -p.b() / 2.0
            } else {
                let rb = p.rho_bar();
                p.rho() * (p.xi() + 2.0 * p.b() * p.rho()) / (4.0 * rb * rb) * c
                    + ((p.xi() + 2.0 * p.b() * p.rho()) / (4.0 * rb)
                        - (p.xi() * p.rho() + 2.0 * p.b()) / (2.0 * u * p.xi() * rb * rb * rb))
                        * s
            };
            ExpansionCoeffs {
                f0,
                f1,
                g0: p.rho() * p.xi() * u,
            }
        }
    }
}

/// Derivative of `f0` in closed form (used by the tail prefactor constant):
/// `f0_v' = -xi^2/2`,
/// `f0_x'(u) = -(rho_bar xi / 2) sin(theta) - (rho xi / 2) cos(theta)`.
pub fn f0_prime(p: &ModelParams, m: Marginal, u: f64) -> f64 {
    match m {
        Marginal::V => -p.xi() * p.xi() / 2.0,
        Marginal::X => {
            let theta = p.rho_bar() * p.xi() * u / 2.0;
            let (s, c) = theta.sin_cos();
            -(p.rho_bar() * p.xi() / 2.0) * s - (p.rho() * p.xi() / 2.0) * c
        }
    }
}

/// `d/du Lambda` (order 1) or `d^2/du^2 Lambda` (order 2) by central
/// differences with step `h = max(1e-6, 1e-6 |u|)`, shrunk so the stencil
/// stays strictly inside the guarded domain.
pub fn cgf_derivative(p: &ModelParams, m: Marginal, u: f64, t: f64, order: u32) -> Result<f64> {
    assert!(order == 1 || order == 2, "order must be 1 or 2");
    derivative_with_step(p, m, u, t, order, None)
}

/// Central difference with an optional caller-chosen step. `None` picks the
/// default `max(1e-6, 1e-6 |u|)`.
pub(crate) fn derivative_with_step(
    p: &ModelParams,
    m: Marginal,
    u: f64,
    t: f64,
    order: u32,
    step: Option<f64>,
) -> Result<f64> {
    let bounds = p.domain_bounds(m, t)?;
    let margin_lo = u - bounds.lower;
    let margin_hi = bounds.upper - u;
    let room = 0.5 * (margin_lo - BOUNDARY_GUARD).min(margin_hi - BOUNDARY_GUARD);
    if room <= 0.0 {
        return Err(Error::TooCloseToBoundary {
            u,
            margin: margin_lo.min(margin_hi),
        });
    }
    let h = step
        .unwrap_or_else(|| (1e-6f64).max(1e-6 * u.abs()))
        .min(room);
    if h < 1e-12 {
        return Err(Error::TooCloseToBoundary { u, margin: room });
    }
    let lam = |v: f64| -> Result<f64> {
        let c = cgf_eval(p, m, v, t)?;
        if c.finite {
            Ok(c.lambda)
        } else {
            Err(Error::TooCloseToBoundary { u: v, margin: 0.0 })
        }
    };
    match order {
        1 => Ok((lam(u + h)? - lam(u - h)?) / (2.0 * h)),
        _ => Ok((lam(u + h)? - 2.0 * lam(u)? + lam(u - h)?) / (h * h)),
    }
}

/// Fourth-order first derivative: one Richardson step over the central
/// differences at `h` and `h/2`. The saddlepoint solver needs this extra
/// order near the domain boundary, where `Lambda'''` is large enough to
/// push the plain stencil's truncation error above the 1e-10 residual
/// target.
pub(crate) fn derivative_refined(p: &ModelParams, m: Marginal, u: f64, t: f64) -> Result<f64> {
    let h = (1e-6f64).max(1e-6 * u.abs());
    let d_h = derivative_with_step(p, m, u, t, 1, Some(h))?;
    let d_h2 = derivative_with_step(p, m, u, t, 1, Some(0.5 * h))?;
    Ok((4.0 * d_h2 - d_h) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::log_log_slope;
    use proptest::prelude::*;

    fn p1() -> ModelParams {
        ModelParams::new(0.12, -1.0, 0.4, -0.5).unwrap()
    }

    #[test]
    fn d_at_zero_is_abs_b() {
        let p = p1();
        let d = d_fn(&p, Complex64::new(0.0, 0.0));
        assert!((d.re - 1.0).abs() < 1e-15 && d.im.abs() < 1e-15);
    }

    #[test]
    fn d_at_one_with_zero_rho_is_abs_b() {
        let p = ModelParams::new(0.12, -2.0, 0.4, 0.0).unwrap();
        let d = d_fn(&p, Complex64::new(1.0, 0.0));
        assert!((d.re - 2.0).abs() < 1e-14 && d.im.abs() < 1e-15);
    }

    /// d(u/t) = i u d0 / t + d1 + O(t) with d0 = rho_bar xi sgn(u) and
    /// d1 = -i sgn(u) (2 b rho + xi) / (2 rho_bar).
    #[test]
    fn d_large_argument_expansion() {
        let p = p1();
        for &u in &[5.0_f64, -5.0, 2.0, -2.0] {
            let sgn = if u >= 0.0 { 1.0 } else { -1.0 };
            let d0 = p.rho_bar() * p.xi() * sgn;
            let d1 = Complex64::new(0.0, -sgn * (2.0 * p.b() * p.rho() + p.xi())
                / (2.0 * p.rho_bar()));
            let ts = [0.1, 0.05, 0.02, 0.01];
            let errs: Vec<f64> = ts
                .iter()
                .map(|&t| {
                    let d = d_fn(&p, Complex64::new(u / t, 0.0));
                    (d - (Complex64::new(0.0, u * d0 / t) + d1)).norm()
                })
                .collect();
            let slope = log_log_slope(&ts, &errs);
            assert!((0.7..1.3).contains(&slope), "u={u}: slope {slope}, errs {errs:?}");
        }
    }

    #[test]
    fn cgf_vanishes_at_origin() {
        let p = p1();
        for m in [Marginal::X, Marginal::V] {
            for t in [0.5, 0.1, 0.01] {
                let v = cgf_eval(&p, m, 0.0, t).unwrap();
                assert!(v.finite);
                assert!(v.lambda.abs() < 1e-14, "{m} t={t}: {}", v.lambda);
            }
        }
    }

    /// Lambda_V agrees with the Gamma moment generating function:
    /// V_t ~ Gamma(mu, lambda_t) so Lambda_V(u,t) = -mu t log(1 - u/(t lambda_t)).
    #[test]
    fn cgf_v_matches_gamma_mgf() {
        let p = p1();
        for t in [0.3, 0.1, 0.02] {
            let lambda_t = -2.0 * p.b() / (p.xi() * p.xi() * (1.0 - (p.b() * t).exp()));
            for u in [-5.0, -1.0, 0.5, 2.0, 8.0] {
                let v = cgf_eval(&p, Marginal::V, u, t).unwrap();
                assert!(v.finite);
                let expected = -p.mu() * t * (1.0 - u / (t * lambda_t)).ln();
                assert!(
                    (v.lambda - expected).abs() <= 1e-12 * expected.abs().max(1e-12),
                    "u={u} t={t}: {} vs {expected}",
                    v.lambda
                );
                // the module formula itself
                let direct = -p.mu() * t
                    * (1.0 + u * p.xi() * p.xi() * (1.0 - (p.b() * t).exp()) / (2.0 * p.b() * t))
                        .ln();
                assert!((v.lambda - direct).abs() <= 1e-12 * direct.abs().max(1e-12));
            }
        }
    }

    /// Pointwise limit: |Lambda(u, t)| <= K(u) t inside the limiting domain,
    /// +inf outside its closure.
    #[test]
    fn cgf_pointwise_limit() {
        let p = p1();
        let (ulo, uhi) = p.limiting_u_pm();
        for m in [Marginal::X, Marginal::V] {
            let inside = match m {
                Marginal::X => [0.8 * ulo, 0.5 * uhi],
                Marginal::V => [-3.0, 0.9 * 2.0 / (p.xi() * p.xi())],
            };
            for u in inside {
                let ratios: Vec<f64> = [0.1, 0.05, 0.025]
                    .iter()
                    .map(|&t| cgf_eval(&p, m, u, t).unwrap().lambda.abs() / t)
                    .collect();
                // Lambda/t stays bounded as t halves
                assert!(ratios[2] < 2.0 * ratios[0].max(1e-12) + 1e-9, "{m} u={u}: {ratios:?}");
            }
            let outside = match m {
                Marginal::X => 1.5 * uhi,
                Marginal::V => 1.5 * 2.0 / (p.xi() * p.xi()),
            };
            // at small t the point leaves the (time-dependent) domain
            let v = cgf_eval(&p, m, outside, 0.005).unwrap();
            assert!(!v.finite && v.lambda.is_infinite());
        }
    }

    #[test]
    fn expansion_coeffs_examples() {
        let p = p1();
        // V at the domain edge: f0 = 0 exactly
        let e = expansion_coeffs(&p, Marginal::V, 2.0 / (p.xi() * p.xi()));
        assert_eq!(e.f0, 0.0);
        // X at u = 0
        let e = expansion_coeffs(&p, Marginal::X, 0.0);
        assert!((e.f0 - 1.0).abs() < 1e-15);
        assert!((e.f1 - 0.5).abs() < 1e-15);
        assert_eq!(e.g0, 0.0);
        // X at u = 3: f0 = cos(theta) + 0.57735 sin(theta), theta = 0.519615
        let e = expansion_coeffs(&p, Marginal::X, 3.0);
        let theta: f64 = 0.8660254037844386 * 0.4 * 3.0 / 2.0;
        let f0 = theta.cos() + 0.5 / 0.8660254037844386 * theta.sin();
        assert!((e.f0 - f0).abs() < 1e-12);
        assert!((e.f0 - 1.1547).abs() < 1e-3);
    }

    /// f1_x is the continuous extension at the origin: the u != 0 branch
    /// converges to -b/2 as u -> 0.
    #[test]
    fn f1_x_continuous_at_origin() {
        let p = p1();
        let at0 = expansion_coeffs(&p, Marginal::X, 0.0).f1;
        let near = expansion_coeffs(&p, Marginal::X, 1e-7).f1;
        assert!((at0 - near).abs() < 1e-6, "{at0} vs {near}");
    }

    /// |f_t - f0 - f1 t| = O(t^2) and |g_t - g0| = O(t), uniformly on a
    /// compact grid inside the limiting domain.
    #[test]
    fn f_and_g_expansion_orders() {
        let p = p1();
        let (ulo, uhi) = p.limiting_u_pm();
        let ts = [0.1, 0.05, 0.02, 0.01];
        for m in [Marginal::X, Marginal::V] {
            let grid: Vec<f64> = (0..25)
                .map(|k| match m {
                    Marginal::X => 0.9 * ulo + k as f64 * (0.9 * (uhi - ulo) / 24.0),
                    Marginal::V => -4.0 + k as f64 * (0.95 * 2.0 / (p.xi() * p.xi()) + 4.0) / 24.0,
                })
                .collect();
            let errs: Vec<f64> = ts
                .iter()
                .map(|&t| {
                    grid.iter()
                        .map(|&u| {
                            let e = expansion_coeffs(&p, m, u);
                            let ft = f_complex(&p, m, Complex64::new(u, 0.0), t).re;
                            (ft - e.f0 - e.f1 * t).abs()
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            let slope = log_log_slope(&ts, &errs);
            assert!((1.7..2.3).contains(&slope), "{m}: slope {slope} errs {errs:?}");
        }
        // g_t_x - g0_x = b t exactly
        let e = expansion_coeffs(&p, Marginal::X, 3.0);
        for &t in &ts {
            let g_t = p.b() * t + p.rho() * p.xi() * 3.0;
            assert!(((g_t - e.g0) - p.b() * t).abs() < 1e-15);
        }
    }

    /// The first derivative at 0 is the mean: a(e^{bt}-1)/b for V and
    /// -(a/2)[(e^{bt}-1)/b^2 - t/b] for X (minus half the integrated
    /// expected variance). The X case exercises the whole complex pipeline.
    #[test]
    fn derivative_at_zero_matches_means() {
        let p = p1();
        let t = 0.1;
        let mean_v = p.a() * ((p.b() * t).exp() - 1.0) / p.b();
        let dv = cgf_derivative(&p, Marginal::V, 0.0, t, 1).unwrap();
        assert!((dv - mean_v).abs() < 1e-9, "{dv} vs {mean_v}");

        let int_ev = p.a() * (((p.b() * t).exp() - 1.0) / (p.b() * p.b()) - t / p.b());
        let mean_x = -0.5 * int_ev;
        let dx = cgf_derivative(&p, Marginal::X, 0.0, t, 1).unwrap();
        assert!((dx - mean_x).abs() < 1e-9, "{dx} vs {mean_x}");
    }

    /// Analytic check of the V derivative at general u:
    /// dLambda_V/du = -mu t c / (1 + u c) with c = xi^2(1-e^{bt})/(2bt).
    #[test]
    fn derivative_v_closed_form() {
        let p = p1();
        let t = 0.05;
        let c = p.xi() * p.xi() * (1.0 - (p.b() * t).exp()) / (2.0 * p.b() * t);
        for u in [-4.0, -0.5, 1.0, 6.0, 11.0] {
            let expected = -p.mu() * t * c / (1.0 + u * c);
            let got = cgf_derivative(&p, Marginal::V, u, t, 1).unwrap();
            assert!(
                (got - expected).abs() < 1e-7 * expected.abs().max(1.0),
                "u={u}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn near_boundary_is_not_finite() {
        let p = p1();
        let t = 0.05;
        let b = p.domain_bounds(Marginal::X, t).unwrap();
        let v = cgf_eval(&p, Marginal::X, b.upper - 0.5e-8, t).unwrap();
        assert!(!v.finite);
        assert!(matches!(
            cgf_derivative(&p, Marginal::X, b.upper - 0.5e-8, t, 1),
            Err(Error::TooCloseToBoundary { .. })
        ));
    }

    proptest! {
        /// Strict convexity: the second derivative is positive at any
        /// interior point of either domain.
        #[test]
        fn second_derivative_positive(ux in -0.9f64..0.9, t in 0.02f64..0.5) {
            let p = p1();
            let (ulo, uhi) = p.limiting_u_pm();
            let u = if ux >= 0.0 { ux * uhi } else { -ux * ulo };
            let d2 = cgf_derivative(&p, Marginal::X, u, t, 2).unwrap();
            prop_assert!(d2 > 0.0, "X u={u} t={t}: {d2}");
            let uv = ux * 2.0 / (p.xi() * p.xi());
            let d2v = cgf_derivative(&p, Marginal::V, uv, t, 2).unwrap();
            prop_assert!(d2v > 0.0, "V u={uv} t={t}: {d2v}");
        }
    }
}
