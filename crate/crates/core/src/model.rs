//! Model parameters, derived constants and effective-domain boundaries.
//!
//! The system under study is
//!
//! ```text
//! dX_t = -(1/2) V_t dt + sqrt(V_t) dW_t,          X_0 = 0,
//! dV_t = (a + b V_t) dt + xi sqrt(V_t) dZ_t,      V_0 = 0,
//! d<W,Z>_t = rho dt,
//! ```
//!
//! with `a, xi > 0`, `b < 0`, `|rho| < 1` and Feller index `mu = 2a/xi^2 > 1`.
//! Everything downstream (cgfs, saddlepoints, tail expansions) is driven by
//! the effective domain of the rescaled cgf of `X_t` or `V_t`, whose
//! boundaries are computed here.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Which marginal of the system a computation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Marginal {
    /// The log-price-like integrated component `X_t`.
    X,
    /// The variance component `V_t` (a zero-started Feller/CIR diffusion).
    V,
}

impl Marginal {
    /// The admissible set for tail arguments: all of `R \ {0}` for X,
    /// the strictly positive half line for V.
    pub fn supports(self, x: f64) -> bool {
        match self {
            Marginal::X => x != 0.0,
            Marginal::V => x > 0.0,
        }
    }
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::X => write!(f, "X"),
            Marginal::V => write!(f, "V"),
        }
    }
}

/// Validated model parameters with derived constants.
///
/// Construction goes through [`ModelParams::new`], which enforces
/// `a > 0`, `b < 0`, `xi > 0`, `|rho| < 1` and `mu = 2a/xi^2 > 1`.
/// Values are immutable afterwards, so every invariant holds for the
/// lifetime of the object.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    a: f64,
    b: f64,
    xi: f64,
    rho: f64,
    mu: f64,
    rho_bar: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    a: f64,
    b: f64,
    xi: f64,
    rho: f64,
}

impl ModelParams {
    /// Validate raw parameters and fill in the derived fields
    /// `mu = 2a/xi^2` and `rho_bar = sqrt(1 - rho^2)`.
    pub fn new(a: f64, b: f64, xi: f64, rho: f64) -> Result<Self> {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::ParameterOutOfRange {
                name: "a",
                value: a,
                constraint: "a > 0",
            });
        }
        if !b.is_finite() || b >= 0.0 {
            return Err(Error::ParameterOutOfRange {
                name: "b",
                value: b,
                constraint: "b < 0",
            });
        }
        if !xi.is_finite() || xi <= 0.0 {
            return Err(Error::ParameterOutOfRange {
                name: "xi",
                value: xi,
                constraint: "xi > 0",
            });
        }
        if !rho.is_finite() || rho.abs() >= 1.0 {
            return Err(Error::ParameterOutOfRange {
                name: "rho",
                value: rho,
                constraint: "|rho| < 1",
            });
        }
        let mu = 2.0 * a / (xi * xi);
        if mu <= 1.0 {
            return Err(Error::FellerIndexTooSmall { mu });
        }
        Ok(Self {
            a,
            b,
            xi,
            rho,
            mu,
            rho_bar: (1.0 - rho * rho).sqrt(),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Feller index `mu = 2a/xi^2`; also the Gamma shape of the law of `V_t`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `sqrt(1 - rho^2)`.
    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }

    /// Endpoints `(u_-, u_+)` of the limiting effective domain of the
    /// rescaled cgf of X.
    ///
    /// Closed forms, with `q = 2/(xi*rho_bar)`:
    ///
    /// ```text
    /// rho < 0:  u_- = q atan(rho_bar/rho),          u_+ = q (atan(rho_bar/rho) + pi)
    /// rho = 0:  u_- = -pi/xi,                       u_+ =  pi/xi
    /// rho > 0:  u_- = q (atan(rho_bar/rho) - pi),   u_+ = q atan(rho_bar/rho)
    /// ```
    ///
    /// Both are the zeros of `u -> f0_x(u)` nearest the origin, and satisfy
    /// `u_- < -2/xi < 0 < 2/xi < u_+`.
    pub fn limiting_u_pm(&self) -> (f64, f64) {
        use std::f64::consts::PI;
        let q = 2.0 / (self.xi * self.rho_bar);
        if self.rho == 0.0 {
            (-PI / self.xi, PI / self.xi)
        } else {
            let at = (self.rho_bar / self.rho).atan();
            if self.rho < 0.0 {
                (q * at, q * (at + PI))
            } else {
                (q * (at - PI), q * at)
            }
        }
    }

    /// Effective domain of the rescaled cgf of marginal `m` at time `t`.
    ///
    /// `t = 0` is accepted as a sentinel for the limiting domain
    /// (`(u_-, u_+)` for X, `(-inf, 2/xi^2)` for V). For `t > 0`:
    ///
    /// * V: `(-inf, 2bt / (xi^2 (e^{bt} - 1)))` in closed form;
    /// * X: the zeros of `u -> f_t_x(u)` nearest the origin on each side,
    ///   located by an outward scan in steps of `0.2/xi` and bisected to
    ///   relative tolerance 1e-12.
    pub fn domain_bounds(&self, m: Marginal, t: f64) -> Result<DomainBounds> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::ParameterOutOfRange {
                name: "t",
                value: t,
                constraint: "t >= 0 (0 means the limiting domain)",
            });
        }
        if t == 0.0 {
            return Ok(match m {
                Marginal::X => {
                    let (lo, hi) = self.limiting_u_pm();
                    DomainBounds {
                        lower: lo,
                        upper: hi,
                        t,
                    }
                }
                Marginal::V => DomainBounds {
                    lower: f64::NEG_INFINITY,
                    upper: 2.0 / (self.xi * self.xi),
                    t,
                },
            });
        }
        match m {
            Marginal::V => {
                let upper = 2.0 * self.b * t / (self.xi * self.xi * ((self.b * t).exp() - 1.0));
                Ok(DomainBounds {
                    lower: f64::NEG_INFINITY,
                    upper,
                    t,
                })
            }
            Marginal::X => {
                let f = |u: f64| crate::cgf::f_x_real(self, u, t);
                let upper = scan_root(&f, 0.2 / self.xi, t)?;
                let lower = scan_root(&f, -0.2 / self.xi, t)?;
                Ok(DomainBounds { lower, upper, t })
            }
        }
    }
}

/// Scan outward from 0 in increments of `step` until `f` changes sign, then
/// bisect. `f(0) > 0` always (`f_t_x(0) = e^{|b|t/2}`). The scan window is
/// capped at 2000 steps, far beyond where the first zero can sit.
fn scan_root(f: &impl Fn(f64) -> f64, step: f64, t: f64) -> Result<f64> {
    const MAX_STEPS: usize = 2000;
    let mut prev = 0.0;
    let mut fprev = f(0.0);
    for k in 1..=MAX_STEPS {
        let u = step * k as f64;
        let fu = f(u);
        if fu == 0.0 {
            return Ok(u);
        }
        if fprev.signum() != fu.signum() {
            let (lo, hi) = if prev < u { (prev, u) } else { (u, prev) };
            return crate::roots::bisect(f, lo, hi, 1e-12, 200);
        }
        prev = u;
        fprev = fu;
    }
    let _ = t;
    Err(Error::RootNotBracketed {
        what: "X-domain boundary (zero of f_t_x)",
        lo: 0.0,
        hi: step * MAX_STEPS as f64,
    })
}

impl Serialize for ModelParams {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawParams {
            a: self.a,
            b: self.b,
            xi: self.xi,
            rho: self.rho,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawParams::deserialize(d)?;
        ModelParams::new(raw.a, raw.b, raw.xi, raw.rho).map_err(serde::de::Error::custom)
    }
}

/// An interval `(lower, upper)` of the real line, possibly unbounded on
/// either side (`f64::INFINITY` semantics, never sentinel large floats).
///
/// `t = 0` tags the limiting domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainBounds {
    pub lower: f64,
    pub upper: f64,
    pub t: f64,
}

impl DomainBounds {
    /// Width of the interval; `inf` when a side is unbounded.
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Strict interior membership with an absolute safety margin.
    pub fn strictly_inside(&self, u: f64, margin: f64) -> bool {
        u > self.lower + margin && u < self.upper - margin
    }
}
