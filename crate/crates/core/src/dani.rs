//! The change of variables between non-increasing approximation functions psi
//! and quasi-increasing rate functions r, in both directions, plus integral
//! equivalence probes.
//!
//! Everything is phrased in the log coordinates L = -log psi, lambda = log x,
//! P(lambda) = -log psi(e^lambda). For a given t the pair (lambda(t), L(t)) is
//! the intersection of the non-decreasing curve L = P(lambda) with the
//! decreasing line L = ((m+n) t - m lambda) / n, and r = (L - lambda)/(m+n).

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::numeric::{adaptive_quadrature, bisect, grow_bracket};

/// Bisection tolerance in lambda for the intersection solver.
pub const SOLVE_TOL: f64 = 1e-10;
const VALIDATION_GRID: usize = 1000;

/// A non-increasing, strictly positive approximation function on [x0, oo).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PsiFunction {
    /// psi(x) = c * x^{-a} * (log x)^{-q}
    PowerLog { c: f64, a: f64, q: f64, x0: f64 },
    /// Monotone piecewise-linear graph in (lambda, P) coordinates; beyond the
    /// last knot the final slope is extrapolated and evaluations are flagged.
    Tabulated { lambda: Vec<f64>, p: Vec<f64> },
}

impl PsiFunction {
    pub fn power_log(c: f64, a: f64, q: f64, x0: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(validation("power_log needs c > 0"));
        }
        if a < 0.0 {
            return Err(validation("power_log needs a >= 0"));
        }
        if q != 0.0 && x0 <= 1.0 {
            return Err(validation("power_log with q != 0 needs x0 > 1"));
        }
        if !(x0 > 0.0) {
            return Err(validation("power_log needs x0 > 0"));
        }
        let psi = PsiFunction::PowerLog { c, a, q, x0 };
        psi.validate_grid()?;
        Ok(psi)
    }

    /// psi(x) = eps / x on [1, oo).
    pub fn eps_over_x(eps: f64) -> Result<Self> {
        Self::power_log(eps, 1.0, 0.0, 1.0)
    }

    /// Build a tabulated psi from sample points (x, psi(x)).
    pub fn tabulated(xs: &[f64], psis: &[f64]) -> Result<Self> {
        if xs.len() != psis.len() || xs.len() < 2 {
            return Err(validation("tabulated psi needs >= 2 samples"));
        }
        let mut lambda = Vec::with_capacity(xs.len());
        let mut p = Vec::with_capacity(xs.len());
        for (&x, &ps) in xs.iter().zip(psis) {
            if !(x > 0.0) || !(ps > 0.0) {
                return Err(validation("tabulated psi needs positive samples"));
            }
            lambda.push(x.ln());
            p.push(-ps.ln());
        }
        Self::from_knots(lambda, p)
    }

    pub(crate) fn from_knots(lambda: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        for w in lambda.windows(2) {
            if !(w[1] > w[0]) {
                return Err(validation("tabulated psi: x samples must strictly increase"));
            }
        }
        for w in p.windows(2) {
            if w[1] < w[0] - 1e-12 {
                return Err(validation("tabulated psi must be non-increasing"));
            }
        }
        Ok(PsiFunction::Tabulated { lambda, p })
    }

    /// Left end of the domain.
    pub fn x0(&self) -> f64 {
        match self {
            PsiFunction::PowerLog { x0, .. } => *x0,
            PsiFunction::Tabulated { lambda, .. } => lambda[0].exp(),
        }
    }

    pub fn lambda0(&self) -> f64 {
        match self {
            PsiFunction::PowerLog { x0, .. } => x0.ln(),
            PsiFunction::Tabulated { lambda, .. } => lambda[0],
        }
    }

    /// P(lambda) = -log psi(e^lambda); the boolean flags extrapolation beyond
    /// the last tabulated knot.
    pub fn log_eval(&self, lam: f64) -> Result<(f64, bool)> {
        match self {
            PsiFunction::PowerLog { c, a, q, .. } => {
                if lam < self.lambda0() - 1e-12 {
                    return Err(domain(format!("psi evaluated below x0: log x = {lam}")));
                }
                let mut v = a * lam - c.ln();
                if *q != 0.0 {
                    v += q * lam.ln();
                }
                Ok((v, false))
            }
            PsiFunction::Tabulated { lambda, p } => {
                let n = lambda.len();
                if lam < lambda[0] - 1e-12 {
                    return Err(domain(format!("psi evaluated below x0: log x = {lam}")));
                }
                if lam >= lambda[n - 1] {
                    let slope = (p[n - 1] - p[n - 2]) / (lambda[n - 1] - lambda[n - 2]);
                    return Ok((p[n - 1] + slope * (lam - lambda[n - 1]), lam > lambda[n - 1]));
                }
                let idx = match lambda.binary_search_by(|v| v.partial_cmp(&lam).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i.saturating_sub(1).min(n - 2),
                };
                let (l0, l1) = (lambda[idx], lambda[idx + 1]);
                let w = (lam - l0) / (l1 - l0);
                Ok((p[idx] * (1.0 - w) + p[idx + 1] * w, false))
            }
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(domain("psi needs x > 0"));
        }
        let (p, _) = self.log_eval(x.ln())?;
        Ok((-p).exp())
    }

    /// Check non-increase and positivity on a 1000-point grid.
    fn validate_grid(&self) -> Result<()> {
        let lam0 = self.lambda0();
        let span = 40.0;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..VALIDATION_GRID {
            let lam = lam0 + span * i as f64 / (VALIDATION_GRID - 1) as f64;
            let (p, _) = self.log_eval(lam)?;
            if !p.is_finite() {
                return Err(validation("psi must be strictly positive and finite"));
            }
            if p < prev - 1e-12 {
                return Err(validation("psi must be non-increasing"));
            }
            prev = p;
        }
        Ok(())
    }

    /// Parse a CLI spec like "power_log:c=1,a=1,q=2,x0=2".
    pub fn parse(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        match family.trim() {
            "power_log" => {
                let (mut c, mut a, mut q, mut x0) = (1.0, 1.0, 0.0, 1.0);
                for kv in rest.split(',').filter(|t| !t.trim().is_empty()) {
                    let (key, val) = kv
                        .split_once('=')
                        .ok_or_else(|| domain(format!("bad psi parameter {kv:?}")))?;
                    let val: f64 =
                        val.trim().parse().map_err(|_| domain(format!("bad value in {kv:?}")))?;
                    match key.trim() {
                        "c" => c = val,
                        "a" => a = val,
                        "q" => q = val,
                        "x0" => x0 = val,
                        other => return Err(domain(format!("unknown psi parameter {other:?}"))),
                    }
                }
                Self::power_log(c, a, q, x0)
            }
            other => Err(domain(format!("unknown psi family {other:?}"))),
        }
    }

    pub fn spec_string(&self) -> String {
        match self {
            PsiFunction::PowerLog { c, a, q, x0 } => {
                format!("power_log:c={c},a={a},q={q},x0={x0}")
            }
            PsiFunction::Tabulated { lambda, .. } => {
                format!("tabulated:{} knots", lambda.len())
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
enum RateEval {
    Constant(f64),
    /// r(t) = slope * t
    Linear(f64),
    /// r(t) = coeff * log t
    LogMultiple(f64),
    /// Solved pointwise from psi via the intersection construction.
    FromPsi { psi: PsiFunction, m: u32, n: u32 },
}

/// A rate function r on [t0, oo): evaluator plus its quasi-increasing constant
/// (r(t2) > r(t1) - C on unit windows).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateFunction {
    t0: f64,
    quasi_constant: f64,
    eval: RateEval,
}

/// One evaluated point of a rate function in all four coordinates.
#[derive(Clone, Copy, Debug)]
pub struct RatePoint {
    pub t: f64,
    pub r: f64,
    pub lambda: f64,
    pub big_l: f64,
    pub extrapolated: bool,
}

impl RateFunction {
    pub fn constant(rho: f64, t0: f64) -> Self {
        RateFunction { t0, quasi_constant: 1e-9, eval: RateEval::Constant(rho) }
    }

    pub fn linear(slope: f64, t0: f64) -> Self {
        RateFunction {
            t0,
            quasi_constant: slope.min(0.0).abs() + 1e-9,
            eval: RateEval::Linear(slope),
        }
    }

    pub fn log_multiple(coeff: f64, t0: f64) -> Result<Self> {
        if !(t0 > 0.0) {
            return Err(domain("log rate needs t0 > 0"));
        }
        Ok(RateFunction {
            t0,
            quasi_constant: if coeff >= 0.0 { 1e-9 } else { coeff.abs() / t0 + 1e-9 },
            eval: RateEval::LogMultiple(coeff),
        })
    }

    /// Parse "zero", "const:0.25", "linear:0.5" (slope) or "log:0.5" (coefficient).
    pub fn parse(s: &str, t0: f64) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = |what: &str| -> Result<f64> {
            arg.trim().parse().map_err(|_| domain(format!("bad {what} in rate spec {s:?}")))
        };
        match kind.trim() {
            "zero" => Ok(Self::constant(0.0, t0)),
            "const" => Ok(Self::constant(num("constant")?, t0)),
            "linear" => Ok(Self::linear(num("slope")?, t0)),
            "log" => Self::log_multiple(num("coefficient")?, t0.max(1.0)),
            other => Err(domain(format!("unknown rate kind {other:?}"))),
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn quasi_constant(&self) -> f64 {
        self.quasi_constant
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.eval_detailed(t, 0, 0)?.r)
    }

    /// Evaluate r together with lambda = t - n r and L = t + m r. For solved
    /// rate functions the stored (m, n) are used and must match.
    pub fn eval_detailed(&self, t: f64, m: u32, n: u32) -> Result<RatePoint> {
        if t < self.t0 - 1e-9 {
            return Err(domain(format!("rate function evaluated below t0 = {}: t = {t}", self.t0)));
        }
        match &self.eval {
            RateEval::Constant(rho) => Ok(plain_point(t, *rho, m, n)),
            RateEval::Linear(s) => Ok(plain_point(t, s * t, m, n)),
            RateEval::LogMultiple(c) => Ok(plain_point(t, c * t.ln(), m, n)),
            RateEval::FromPsi { psi, m: ms, n: ns } => {
                if (m != 0 && m != *ms) || (n != 0 && n != *ns) {
                    return Err(domain("rate function was built for different (m, n)"));
                }
                solve_intersection(psi, *ms, *ns, t)
            }
        }
    }
}

fn plain_point(t: f64, r: f64, m: u32, n: u32) -> RatePoint {
    RatePoint { t, r, lambda: t - n as f64 * r, big_l: t + m as f64 * r, extrapolated: false }
}

/// Intersection of L = P(lambda) with the line L = ((m+n) t - m lambda)/n,
/// found by bisection on the increasing function P(lambda) + (m/n) lambda.
fn solve_intersection(psi: &PsiFunction, m: u32, n: u32, t: f64) -> Result<RatePoint> {
    let (mf, nf) = (m as f64, n as f64);
    let lam0 = psi.lambda0();
    let line = |lam: f64| ((mf + nf) * t - mf * lam) / nf;
    let mut extrapolated = false;
    let mut g = |lam: f64| -> f64 {
        let (p, ex) = psi.log_eval(lam).expect("solver stays within psi domain");
        if ex {
            extrapolated = true;
        }
        p - line(lam)
    };
    if g(lam0) > 1e-9 {
        return Err(domain(format!("t = {t} below the domain start of the transform")));
    }
    let (lo, hi) = grow_bracket(&mut g, lam0, 1.0)?;
    let lam = bisect(&mut g, lo, hi, SOLVE_TOL);
    let big_l = line(lam);
    let r = (big_l - lam) / (mf + nf);
    Ok(RatePoint { t, r, lambda: lam, big_l, extrapolated })
}

/// The forward transform: psi to the rate function r with
/// psi(e^{t - n r(t)}) = e^{-t - m r(t)} for t >= t0.
pub fn dani_forward(psi: &PsiFunction, m: u32, n: u32) -> Result<RateFunction> {
    if m < 1 || n < 1 {
        return Err(domain("dani_forward needs m, n >= 1"));
    }
    let (mf, nf) = (m as f64, n as f64);
    let lam0 = psi.lambda0();
    let (p0, _) = psi.log_eval(lam0)?;
    let t0 = (mf * lam0 + nf * p0) / (mf + nf);
    Ok(RateFunction {
        t0,
        quasi_constant: 1.0 / mf + 1e-9,
        eval: RateEval::FromPsi { psi: psi.clone(), m, n },
    })
}

/// Log-scale residual of the defining equation at time t:
/// |P(lambda(t)) - L(t)|; the solver keeps this below ~1e-8.
pub fn forward_residual(psi: &PsiFunction, r: &RateFunction, m: u32, n: u32, t: f64) -> Result<f64> {
    let pt = r.eval_detailed(t, m, n)?;
    let (p, _) = psi.log_eval(pt.lambda)?;
    Ok((p - pt.big_l).abs())
}

/// Validate (strict increase of lambda, monotone L) on a probe grid and invert:
/// tabulate P(lambda) = L(t(lambda)) over a span of t, refining until the
/// piecewise-linear interpolant is accurate to ~5e-7.
pub fn dani_inverse(r: &RateFunction, m: u32, n: u32) -> Result<PsiFunction> {
    dani_inverse_span(r, m, n, 300.0)
}

pub fn dani_inverse_span(r: &RateFunction, m: u32, n: u32, span: f64) -> Result<PsiFunction> {
    if m < 1 || n < 1 {
        return Err(domain("dani_inverse needs m, n >= 1"));
    }
    let t0 = r.t0();
    let probe = 512usize;
    let mut prev_lam = f64::NEG_INFINITY;
    let mut prev_l = f64::NEG_INFINITY;
    for i in 0..=probe {
        let t = t0 + span * i as f64 / probe as f64;
        let pt = r.eval_detailed(t, m, n)?;
        if i > 0 {
            if pt.lambda <= prev_lam {
                return Err(validation(
                    "rate function invalid: t - n r(t) must strictly increase",
                ));
            }
            if pt.big_l < prev_l - 1e-9 {
                return Err(validation(
                    "rate function invalid: t + m r(t) must be non-decreasing",
                ));
            }
        }
        prev_lam = pt.lambda;
        prev_l = pt.big_l;
    }

    let mut knots: Vec<(f64, f64)> = Vec::new();
    let eval = |t: f64| -> Result<(f64, f64)> {
        let pt = r.eval_detailed(t, m, n)?;
        Ok((pt.lambda, pt.big_l))
    };
    let a = eval(t0)?;
    knots.push(a);
    refine_segment(&eval, t0, t0 + span, a, eval(t0 + span)?, 0, &mut knots)?;
    let (lambda, p): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
    PsiFunction::from_knots(lambda, p)
}

fn refine_segment(
    eval: &impl Fn(f64) -> Result<(f64, f64)>,
    ta: f64,
    tb: f64,
    pa: (f64, f64),
    pb: (f64, f64),
    depth: u32,
    out: &mut Vec<(f64, f64)>,
) -> Result<()> {
    let tm = 0.5 * (ta + tb);
    let pm = eval(tm)?;
    let width = pb.0 - pa.0;
    let interp = if width > 0.0 { pa.1 + (pb.1 - pa.1) * (pm.0 - pa.0) / width } else { pa.1 };
    let err = (interp - pm.1).abs();
    if (err <= 5e-7 && depth >= 4) || depth >= 28 || width <= 1e-9 {
        if pm.0 > out.last().unwrap().0 {
            out.push(pm);
        }
        if pb.0 > out.last().unwrap().0 {
            out.push(pb);
        }
        return Ok(());
    }
    refine_segment(eval, ta, tm, pa, pm, depth + 1, out)?;
    refine_segment(eval, tm, tb, pm, pb, depth + 1, out)
}

/// Truncated integral I1(X) = int_{x0}^{X} (log x)^q psi(x) dx, evaluated as
/// int lambda^q e^{lambda - P(lambda)} d lambda by adaptive quadrature.
pub fn integral_probe(psi: &PsiFunction, q: u32, x_max: f64) -> Result<f64> {
    let lam0 = psi.lambda0();
    let lam1 = x_max.ln();
    if lam1 <= lam0 {
        return Err(domain("integral endpoint below x0"));
    }
    adaptive_quadrature(
        |lam| {
            let (p, _) = psi.log_eval(lam).expect("within domain");
            (lam).powi(q as i32) * (lam - p).exp()
        },
        lam0,
        lam1,
        1e-8,
    )
}

/// Truncated integral I2(T) = int_{t0}^{T} t^q e^{-(m+n) r(t)} dt.
pub fn rate_integral_probe(r: &RateFunction, q: u32, m: u32, n: u32, t_max: f64) -> Result<f64> {
    let t0 = r.t0();
    if t_max <= t0 {
        return Err(domain("integral endpoint below t0"));
    }
    let k = (m + n) as f64;
    adaptive_quadrature(
        |t| {
            let rv = r.eval_detailed(t, m, n).expect("within domain").r;
            t.powi(q as i32) * (-k * rv).exp()
        },
        t0,
        t_max,
        1e-8,
    )
}

/// Does r satisfy r(t2) > r(t1) - c for all grid pairs with t1 <= t2 < t1 + 1?
pub fn quasi_increasing_check(r: &RateFunction, c: f64, grid: &[f64]) -> Result<bool> {
    for w in grid.windows(2) {
        if w[1] < w[0] {
            return Err(domain("grid must be sorted"));
        }
    }
    let vals: Result<Vec<f64>> = grid.iter().map(|&t| r.eval(t)).collect();
    let vals = vals?;
    for i in 0..grid.len() {
        for j in i..grid.len() {
            if grid[j] >= grid[i] + 1.0 {
                break;
            }
            if !(vals[j] > vals[i] - c) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
