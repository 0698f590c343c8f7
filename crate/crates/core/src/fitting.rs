//! Small least-squares and extrapolation helpers shared by the expansion
//! diagnostics and the prefactor extraction.

/// Ordinary least squares line `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points to fit a line");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log err` against `log t`: the empirical convergence order.
pub fn log_log_slope(ts: &[f64], errs: &[f64]) -> f64 {
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Polynomial extrapolation to `t = 0` (Neville's scheme) of samples
/// `v(t_i) = L + c_1 t_i + c_2 t_i^2 + ...`; exact when `v` is a polynomial
/// of degree below the sample count.
pub fn richardson(ts: &[f64], vals: &[f64]) -> f64 {
    assert_eq!(ts.len(), vals.len());
    assert!(!ts.is_empty());
    let mut tab = vals.to_vec();
    let n = tab.len();
    for level in 1..n {
        for i in 0..n - level {
            let t_lo = ts[i];
            let t_hi = ts[i + level];
            tab[i] = (t_lo * tab[i + 1] - t_hi * tab[i]) / (t_lo - t_hi);
        }
    }
    tab[0]
}

/// Two-point Richardson step assuming a leading O(t) error term.
pub fn richardson_linear(t1: f64, v1: f64, t2: f64, v2: f64) -> f64 {
    (t1 * v2 - t2 * v1) / (t1 - t2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_is_recovered_exactly() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, i) = linear_fit(&xs, &ys);
        assert!((s - 2.5).abs() < 1e-14);
        assert!((i + 1.0).abs() < 1e-13);
    }

    #[test]
    fn slope_of_quadratic_decay_is_two() {
        let ts = [0.1, 0.05, 0.02, 0.01];
        let errs: Vec<f64> = ts.iter().map(|t| 3.0 * t * t).collect();
        assert!((log_log_slope(&ts, &errs) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn richardson_kills_polynomial_error() {
        let ts = [0.02, 0.01, 0.005];
        let vals: Vec<f64> = ts.iter().map(|t| 7.0 + 3.0 * t - 11.0 * t * t).collect();
        assert!((richardson(&ts, &vals) - 7.0).abs() < 1e-12);
        let lin = richardson_linear(ts[1], vals[1], ts[2], vals[2]);
        assert!((lin - 7.0).abs() < 1e-3);
    }
}
