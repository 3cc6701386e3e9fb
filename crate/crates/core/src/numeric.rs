//! Shared numeric kernels: root bracketing/bisection, adaptive quadrature,
//! least squares, binomial confidence intervals, zeta values.

use crate::error::{Error, Result};

/// Bisection for a non-decreasing `f` with `f(lo) <= 0 <= f(hi)`.
/// Unconditionally convergent, which is why the solvers here prefer it to Newton:
/// tabulated integrands can have unbounded slope.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    debug_assert!(lo <= hi);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Grow `[start, start + step * 2^j]` geometrically until `f` turns positive.
pub fn grow_bracket(
    mut f: impl FnMut(f64) -> f64,
    start: f64,
    mut step: f64,
) -> Result<(f64, f64)> {
    let mut lo = start;
    for _ in 0..200 {
        let hi = lo + step;
        if f(hi) > 0.0 {
            return Ok((lo, hi));
        }
        lo = hi;
        step *= 2.0;
    }
    Err(Error::Domain("bracket growth failed: function never crossed zero".into()))
}

fn simpson(f0: f64, fm: f64, f1: f64, h: f64) -> f64 {
    h / 6.0 * (f0 + 4.0 * fm + f1)
}

fn adaptive_step(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol || (b - a) < 1e-14 * (a.abs() + b.abs() + 1.0) {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "recursion limit reached on [{a}, {b}], residual {err:.3e}"
        )));
    }
    let l = adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Simpson quadrature on [a, b] with a relative tolerance.
pub fn adaptive_quadrature(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, b - a);
    // Seed the absolute tolerance from a coarse magnitude estimate; refine once
    // if the first pass shows the estimate was badly off.
    let scale = whole.abs().max(1e-300);
    let first = adaptive_step(&mut f, a, b, fa, fm, fb, whole, rel_tol * scale, 48)?;
    let scale2 = first.abs().max(1e-300);
    if scale2 > 4.0 * scale || scale2 < 0.25 * scale {
        return adaptive_step(&mut f, a, b, fa, fm, fb, whole, rel_tol * scale2, 48);
    }
    Ok(first)
}

/// Least-squares line through (x, y) points; returns (slope, intercept).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Half-width of the normal-approximation binomial confidence interval.
pub fn binomial_ci_halfwidth(p_hat: f64, n: u64, z: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    z * (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

pub fn mean_and_standard_error(sum: f64, sum_sq: f64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Riemann zeta at integer s >= 2 by direct summation plus an Euler-Maclaurin tail.
pub fn zeta(s: u32) -> f64 {
    assert!(s >= 2);
    let n = 10_000u64;
    let sf = s as f64;
    let mut sum = 0.0;
    for j in 1..=n {
        sum += (j as f64).powf(-sf);
    }
    let nf = n as f64;
    // tail sum_{j > N}: N^{1-s}/(s-1) - N^{-s}/2 + s N^{-s-1}/12 (error far below 1e-15 here)
    sum += nf.powf(1.0 - sf) / (sf - 1.0) - 0.5 * nf.powf(-sf) + sf / 12.0 * nf.powf(-sf - 1.0);
    sum
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
