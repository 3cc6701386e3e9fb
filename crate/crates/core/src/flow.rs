//! Diagonal flows on the space of lattices, the lattice-of-a-matrix embedding,
//! and the exponential-divergence diagnostic for flow sequences.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::LatticeBasis;
use crate::mat::Mat;

pub const TRACE_TOL: f64 = 1e-12;
/// |a_i * t| above this would leave 64-bit float range in downstream products.
pub const EXPONENT_GUARD: f64 = 500.0;

/// A one-parameter diagonal flow f_t = diag(e^{a_1 t}, ..., e^{a_k t}) with
/// trace-zero exponent vector a.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalFlow {
    exponents: Vec<f64>,
}

impl DiagonalFlow {
    pub fn new(exponents: Vec<f64>) -> Result<Self> {
        if exponents.len() < 2 {
            return Err(domain("flow needs at least 2 exponents"));
        }
        let trace: f64 = exponents.iter().sum();
        if trace.abs() > TRACE_TOL {
            return Err(domain(format!("exponents must sum to zero, got {trace:e}")));
        }
        Ok(DiagonalFlow { exponents })
    }

    /// The (m, n) block flow diag(e^{t/m} x m, e^{-t/n} x n).
    pub fn two_block(m: usize, n: usize) -> Self {
        assert!(m >= 1 && n >= 1);
        let mut exps = vec![1.0 / m as f64; m];
        exps.extend(std::iter::repeat_n(-1.0 / n as f64, n));
        // exact in binary only for power-of-two m, n; re-balance the tail entry
        let drift: f64 = exps.iter().sum();
        let last = exps.len() - 1;
        exps[last] -= drift;
        DiagonalFlow { exponents: exps }
    }

    /// Parse the CLI shorthand "m:n".
    pub fn from_shorthand(s: &str) -> Result<Self> {
        let (m, n) = s
            .split_once(':')
            .ok_or_else(|| domain(format!("flow shorthand must be m:n, got {s:?}")))?;
        let m: usize = m.trim().parse().map_err(|_| domain("bad m in flow shorthand"))?;
        let n: usize = n.trim().parse().map_err(|_| domain("bad n in flow shorthand"))?;
        if m == 0 || n == 0 {
            return Err(domain("flow shorthand needs m, n >= 1"));
        }
        Ok(Self::two_block(m, n))
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// Euclidean norm of the exponent vector; the displacement metric used by
    /// the exponential-divergence sum.
    pub fn exponent_norm(&self) -> f64 {
        self.exponents.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// A point t of the trace-zero Cartan algebra, with the negative-part norm
/// ||t||_- = max{|t_i| : t_i <= 0}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChamberPoint {
    t: Vec<f64>,
}

impl ChamberPoint {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.len() < 2 {
            return Err(domain("chamber point needs dimension >= 2"));
        }
        let trace: f64 = t.iter().sum();
        if trace.abs() > TRACE_TOL {
            return Err(domain(format!("chamber point must be trace-zero, got {trace:e}")));
        }
        Ok(ChamberPoint { t })
    }

    pub fn coords(&self) -> &[f64] {
        &self.t
    }

    pub fn neg_norm(&self) -> f64 {
        self.t.iter().filter(|&&x| x <= 0.0).fold(0.0, |m, &x| m.max(x.abs()))
    }
}

fn scaled_basis(basis: &LatticeBasis, scales: &[f64]) -> Result<LatticeBasis> {
    let mut m = basis.matrix().clone();
    for (i, &s) in scales.iter().enumerate() {
        m.scale_row(i, s);
    }
    LatticeBasis::from_matrix(m)
}

/// Apply f_t: row i of the basis is scaled by e^{a_i t}. Unimodularity is
/// re-checked on construction.
pub fn apply_flow(flow: &DiagonalFlow, t: f64, basis: &LatticeBasis) -> Result<LatticeBasis> {
    if flow.dim() != basis.dim() {
        return Err(domain("flow and basis dimension mismatch"));
    }
    let mut scales = Vec::with_capacity(flow.dim());
    for &a in flow.exponents() {
        let e = a * t;
        if e.abs() > EXPONENT_GUARD {
            return Err(Error::FlowOverflow(e));
        }
        scales.push(e.exp());
    }
    scaled_basis(basis, &scales)
}

/// Apply the multi-parameter flow exp(t) = diag(e^{t_1}, ..., e^{t_k}).
pub fn apply_multiflow(t: &ChamberPoint, basis: &LatticeBasis) -> Result<LatticeBasis> {
    if t.coords().len() != basis.dim() {
        return Err(domain("chamber point and basis dimension mismatch"));
    }
    let mut scales = Vec::with_capacity(basis.dim());
    for &x in t.coords() {
        if x.abs() > EXPONENT_GUARD {
            return Err(Error::FlowOverflow(x));
        }
        scales.push(x.exp());
    }
    scaled_basis(basis, &scales)
}

/// The lattice Lambda_A = [[I_m, A], [0, I_n]] Z^{m+n} attached to an m x n
/// matrix: its vectors are (A q + p, q) for integer p, q.
pub fn lattice_of_matrix(a: &Mat) -> Result<LatticeBasis> {
    let m = a.rows();
    let n = a.cols();
    if m < 1 || n < 1 || m + n > 6 {
        return Err(domain(format!("need m, n >= 1 and m + n <= 6, got m={m}, n={n}")));
    }
    let k = m + n;
    let mut b = Mat::identity(k);
    for i in 0..m {
        for j in 0..n {
            b.set(i, m + j, a.get(i, j));
        }
    }
    LatticeBasis::from_matrix(b)
}

/// The exponential-divergence diagnostic
/// max_{t <= T} sum_{s <= T} e^{-beta ||f_s f_t^{-1}||},
/// where the displacement of a diagonal element is the Euclidean norm of its
/// log-diagonal, here |s - t| * ||a||. Bounded uniformly in T for a != 0.
pub fn ed_sum(flow: &DiagonalFlow, beta: f64, t_max: u64) -> Result<f64> {
    if beta <= 0.0 {
        return Err(domain("ed_sum needs beta > 0"));
    }
    if t_max == 0 {
        return Err(domain("ed_sum needs T >= 1"));
    }
    let step = flow.exponent_norm();
    let q = (-beta * step).exp();
    let mut best = 0.0f64;
    for t in 1..=t_max {
        // 1 (s = t) plus two geometric pieces of lengths t-1 and T-t
        let left = t - 1;
        let right = t_max - t;
        let geom = |len: u64| -> f64 {
            if q == 1.0 {
                len as f64
            } else {
                q * (1.0 - q.powi(len as i32)) / (1.0 - q)
            }
        };
        best = best.max(1.0 + geom(left) + geom(right));
    }
    Ok(best)
}

/// Limit of `ed_sum` as T grows, for a nonzero flow: 1 + 2q/(1-q).
pub fn ed_sum_limit(flow: &DiagonalFlow, beta: f64) -> Result<f64> {
    if beta <= 0.0 {
        return Err(domain("ed_sum needs beta > 0"));
    }
    let q = (-beta * flow.exponent_norm()).exp();
    if q >= 1.0 {
        return Err(domain("flow has zero exponent vector"));
    }
    Ok(1.0 + 2.0 * q / (1.0 - q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{delta, NormKind};

    #[test]
    fn flow_at_zero_is_identity() {
        let f = DiagonalFlow::two_block(1, 1);
        let b = LatticeBasis::identity(2);
        let b2 = apply_flow(&f, 0.0, &b).unwrap();
        assert_eq!(b2.matrix().row_major(), b.matrix().row_major());
    }

    #[test]
    fn delta_grows_linearly_on_z2() {
        let f = DiagonalFlow::two_block(1, 1);
        let b = LatticeBasis::identity(2);
        for &t in &[0.5, 1.0, 2.0] {
            let bt = apply_flow(&f, t, &b).unwrap();
            let d = delta(&bt, NormKind::Sup).unwrap();
            assert!((d - t).abs() < 1e-12, "t = {t}, delta = {d}");
        }
    }

    #[test]
    fn flow_composition() {
        let f = DiagonalFlow::new(vec![0.7, -0.2, -0.5]).unwrap();
        let b = LatticeBasis::from_row_major(
            3,
            vec![1.0, 0.3, 0.1, 0.0, 1.0, 0.4, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let one = apply_flow(&f, 1.25, &apply_flow(&f, 0.75, &b).unwrap()).unwrap();
        let two = apply_flow(&f, 2.0, &b).unwrap();
        for (a, c) in one.matrix().row_major().iter().zip(two.matrix().row_major()) {
            assert!((a - c).abs() <= 1e-9 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn multiflow_neg_norm() {
        let t = ChamberPoint::new(vec![2.0, -1.0, -1.0]).unwrap();
        assert_eq!(t.neg_norm(), 1.0);
        let zero = ChamberPoint::new(vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(zero.neg_norm(), 0.0);
        let b = LatticeBasis::identity(3);
        assert_eq!(apply_multiflow(&zero, &b).unwrap().matrix().row_major(), b.matrix().row_major());
        let moved = apply_multiflow(&t, &b).unwrap();
        assert!((moved.det() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn determinant_preserved_for_random_flows() {
        // trace-zero scaling leaves the determinant fixed; construction
        // re-validates it on every call
        let mut state = 0xabcdefu64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for trial in 0..100 {
            let k = 2 + trial % 3;
            let mut a: Vec<f64> = (0..k).map(|_| next() - 0.5).collect();
            let mean = a.iter().sum::<f64>() / k as f64;
            for x in a.iter_mut() {
                *x -= mean;
            }
            let flow = DiagonalFlow::new(a).unwrap();
            // shear-built unimodular basis
            let mut m = Mat::identity(k);
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        m.set(i, j, next() - 0.5);
                    }
                }
            }
            let (sign, log_abs) = m.sign_log_det();
            if sign <= 0.0 {
                continue;
            }
            let scale = (-log_abs / k as f64).exp();
            for i in 0..k {
                m.scale_row(i, scale);
            }
            let b = LatticeBasis::from_matrix(m).unwrap();
            let t = 6.0 * (next() - 0.5);
            let moved = apply_flow(&flow, t, &b).unwrap();
            assert!((moved.det() - b.det()).abs() <= 1e-9);
        }
    }

    #[test]
    fn overflow_guard_fires() {
        let f = DiagonalFlow::two_block(1, 1);
        let b = LatticeBasis::identity(2);
        assert!(matches!(apply_flow(&f, 501.0, &b), Err(Error::FlowOverflow(_))));
    }

    #[test]
    fn lattice_of_matrix_cases() {
        let zero = Mat::zeros(1, 1);
        let b = lattice_of_matrix(&zero).unwrap();
        assert_eq!(b.matrix().row_major(), Mat::identity(2).row_major());

        // vectors are (alpha q + p, q); test membership of (alpha, 1) and (1, 0)
        let alpha = 0.7548776662466927;
        let a = Mat::from_row_major(1, 1, vec![alpha]).unwrap();
        let la = lattice_of_matrix(&a).unwrap();
        assert_eq!(la.embed(&[0, 1]), vec![alpha, 1.0]);
        assert_eq!(la.embed(&[1, 0]), vec![1.0, 0.0]);
        assert_eq!(la.det(), 1.0);
    }

    #[test]
    fn ed_sum_examples() {
        let f = DiagonalFlow::two_block(1, 1);
        assert_eq!(ed_sum(&f, 1.0, 1).unwrap(), 1.0);
        let limit = ed_sum_limit(&f, 1.0).unwrap();
        let q = (-std::f64::consts::SQRT_2).exp();
        assert!((limit - (1.0 + 2.0 * q / (1.0 - q))).abs() < 1e-15);
        assert!((limit - 1.6424).abs() < 5e-5);
        let s50 = ed_sum(&f, 1.0, 50).unwrap();
        assert!((s50 - limit).abs() < 1e-6);
        // monotone non-decreasing in T, bounded by the limit
        let mut prev = 0.0;
        for t in 1..=50 {
            let s = ed_sum(&f, 1.0, t).unwrap();
            assert!(s >= prev - 1e-15 && s <= limit + 1e-12);
            prev = s;
        }
    }

    #[test]
    fn ed_sum_rejects_bad_beta() {
        let f = DiagonalFlow::two_block(1, 1);
        assert!(ed_sum(&f, 0.0, 10).is_err());
    }

    #[test]
    fn flow_wire_format() {
        let f = DiagonalFlow::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"exponents":[1.0,-1.0]}"#);
        let back: DiagonalFlow = serde_json::from_str(r#"{"exponents":[0.5,0.5,-1.0]}"#).unwrap();
        assert_eq!(back.dim(), 3);
    }

    #[test]
    fn shorthand_parses() {
        let f = DiagonalFlow::from_shorthand("2:3").unwrap();
        assert_eq!(f.dim(), 5);
        assert!(f.exponents()[0] > 0.0 && f.exponents()[4] < 0.0);
        assert!(f.exponents().iter().sum::<f64>().abs() <= TRACE_TOL);
    }
}
