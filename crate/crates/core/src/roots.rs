//! Scalar root finding: bisection and a Brent-style bracketing solver.

use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket, run until the bracket width drops
/// below `rel_tol * max(1, |midpoint|)`.
pub(crate) fn bisect(
    f: &impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootNotBracketed {
            what: "bisection",
            lo,
            hi,
        });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * mid.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Brent's method with an optional interior seed for the first trial point.
///
/// Stops when `|f| <= f_tol` or the bracket collapses to floating-point
/// resolution. The caller must supply a sign-changing bracket.
pub(crate) fn brent_seeded(
    f: &impl Fn(f64) -> f64,
    a0: f64,
    b0: f64,
    seed: Option<f64>,
    f_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut a = a0;
    let mut b = b0;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootNotBracketed {
            what: "brent",
            lo: a0,
            hi: b0,
        });
    }
    // Shrink one side of the bracket with the seed when it is interior.
    if let Some(s) = seed {
        if s > a && s < b {
            let fs = f(s);
            if fs == 0.0 {
                return Ok(s);
            }
            if fs.signum() == fa.signum() {
                a = s;
                fa = fs;
            } else {
                b = s;
                fb = fs;
            }
        }
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..max_iter {
        if fb.abs() <= f_tol {
            return Ok(b);
        }
        let s = if fa != fc && fb != fc {
            // inverse quadratic interpolation
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = 0.25 * (3.0 * a + b);
        let cond = !((lo.min(b) < s && s < lo.max(b))
            && !(mflag && (s - b).abs() >= 0.5 * (b - c).abs())
            && !(!mflag && (s - b).abs() >= 0.5 * (c - d).abs()));
        let s = if cond { 0.5 * (a + b) } else { s };
        mflag = cond;
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
        if (a - b).abs() <= f64::EPSILON * (a.abs() + b.abs()).max(1.0) {
            return Ok(b);
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_cosine_root() {
        let r = bisect(&|x: f64| x.cos(), 0.0, 3.0, 1e-14, 200).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        assert!(bisect(&|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_err());
    }

    #[test]
    fn brent_matches_cubic_root() {
        let f = |x: f64| x * x * x - 2.0;
        let r = brent_seeded(&f, 0.0, 2.0, Some(1.3), 1e-14, 200).unwrap();
        assert!((r - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn brent_steep_function_near_boundary() {
        // 1/(1-x) - 100 has its root close to the right end of (0,1)
        let f = |x: f64| 1.0 / (1.0 - x) - 100.0;
        let r = brent_seeded(&f, 0.0, 1.0 - 1e-9, None, 1e-10, 300).unwrap();
        assert!((r - 0.99).abs() < 1e-10);
    }
}
