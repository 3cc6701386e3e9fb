//! Type-A root data on the trace-zero hyperplane of R^n: simple roots,
//! fundamental weights, the rho functional, the distance-function exponent,
//! and the Weyl-chamber tail integral.
//!
//! The inner product is pinned by the weight-norm table
//! ||omega_i||^2 = (i(n-i)/n^2)(n(n+1) - 2i(n-i)); no single rescaling of the
//! permutation-invariant form reproduces that table for n >= 3, so the form
//! here rescales each fundamental-weight axis, which reproduces the table
//! exactly and keeps the i <-> n-i diagram symmetry.

use crate::error::{domain, validation, Error, Result};
use crate::numeric::adaptive_quadrature;

pub const MAX_N: usize = 8;

pub struct RootSystemA {
    n: usize,
    /// Gram matrix of the inner product in the fundamental-weight basis.
    gram: Vec<Vec<f64>>,
}

/// ||omega_i||^2 from the closed-form table.
pub fn weight_norm_sq_formula(n: usize, i: usize) -> f64 {
    let (nf, ifl) = (n as f64, i as f64);
    (ifl * (nf - ifl) / (nf * nf)) * (nf * (nf + 1.0) - 2.0 * ifl * (nf - ifl))
}

impl RootSystemA {
    /// The system A_{n-1} for 2 <= n <= 8.
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=MAX_N).contains(&n) {
            return Err(domain(format!("rank: need 2 <= n <= {MAX_N}, got {n}")));
        }
        // Euclidean weight Gram on the trace-zero hyperplane, then rescale axis
        // i by s_i so the diagonal matches the table.
        let rank = n - 1;
        let mut scale = vec![0.0; rank];
        for i in 1..=rank {
            let euclid = i as f64 * (n - i) as f64 / n as f64;
            scale[i - 1] = (weight_norm_sq_formula(n, i) / euclid).sqrt();
        }
        let mut gram = vec![vec![0.0; rank]; rank];
        for i in 1..=rank {
            for j in 1..=rank {
                let euclid = (i.min(j) as f64) * (n - i.max(j)) as f64 / n as f64;
                gram[i - 1][j - 1] = scale[i - 1] * scale[j - 1] * euclid;
            }
        }
        Ok(RootSystemA { n, gram })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.n - 1
    }

    /// Fundamental weight omega_i as a trace-zero vector of R^n (1-indexed).
    pub fn fundamental_weight(&self, i: usize) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|row| if row < i { 1.0 - i as f64 / n as f64 } else { -(i as f64) / n as f64 })
            .collect()
    }

    /// Simple root alpha_i as a functional: alpha_i(z) = z_i - z_{i+1}.
    pub fn simple_root_apply(&self, i: usize, z: &[f64]) -> f64 {
        z[i - 1] - z[i]
    }

    /// Coefficient k_i of rho = sum k_i alpha_i; exactly i(n-i)/2.
    pub fn rho_coefficient(&self, i: usize) -> f64 {
        (i * (self.n - i)) as f64 / 2.0
    }

    /// rho(z) = sum_i k_i alpha_i(z).
    pub fn rho_apply(&self, z: &[f64]) -> f64 {
        (1..self.n).map(|i| self.rho_coefficient(i) * self.simple_root_apply(i, z)).sum()
    }

    /// rho(z) evaluated as the half-sum of all positive roots z_i - z_j (i < j).
    pub fn rho_apply_halfsum(&self, z: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                acc += z[i] - z[j];
            }
        }
        0.5 * acc
    }

    /// Fundamental-weight coordinates of a trace-zero vector: c_i = alpha_i(z).
    pub fn weight_coordinates(&self, z: &[f64]) -> Vec<f64> {
        (1..self.n).map(|i| self.simple_root_apply(i, z)).collect()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let ca = self.weight_coordinates(a);
        let cb = self.weight_coordinates(b);
        let mut acc = 0.0;
        for i in 0..self.rank() {
            for j in 0..self.rank() {
                acc += ca[i] * self.gram[i][j] * cb[j];
            }
        }
        acc
    }

    pub fn norm(&self, z: &[f64]) -> f64 {
        self.inner(z, z).sqrt()
    }

    fn gram_cholesky(&self) -> Result<Vec<Vec<f64>>> {
        let r = self.rank();
        let mut l = vec![vec![0.0; r]; r];
        for i in 0..r {
            for j in 0..=i {
                let mut v = self.gram[i][j];
                for t in 0..j {
                    v -= l[i][t] * l[j][t];
                }
                if i == j {
                    if v <= 0.0 {
                        return Err(validation("weight Gram matrix is not positive definite"));
                    }
                    l[i][j] = v.sqrt();
                } else {
                    l[i][j] = v / l[j][j];
                }
            }
        }
        Ok(l)
    }
}

/// ||omega_i||^2, cross-checked against the Gram matrix.
pub fn weight_norm_sq(n: usize, i: usize) -> Result<f64> {
    if i < 1 || i > n - 1 {
        return Err(domain(format!("weight index must satisfy 1 <= i <= {}", n - 1)));
    }
    let sys = RootSystemA::new(n)?;
    let formula = weight_norm_sq_formula(n, i);
    let omega = sys.fundamental_weight(i);
    let via_gram = sys.inner(&omega, &omega);
    if (formula - via_gram).abs() > 1e-12 * formula.max(1.0) {
        return Err(validation(format!(
            "weight norm mismatch at (n, i) = ({n}, {i}): {formula} vs {via_gram}"
        )));
    }
    Ok(formula)
}

/// Closed form (n/2) sqrt((n-1)/(n^2-n+2)).
pub fn dl_exponent_closed_form(n: usize) -> f64 {
    let nf = n as f64;
    nf / 2.0 * ((nf - 1.0) / (nf * nf - nf + 2.0)).sqrt()
}

/// The distance-function exponent k = min_i k_i/||omega_i||; asserts agreement
/// with the closed form and that the minimum sits at i = 1 or n-1.
pub fn dl_exponent(n: usize) -> Result<f64> {
    let sys = RootSystemA::new(n)?;
    let mut best = f64::INFINITY;
    let mut best_i = 0;
    for i in 1..n {
        let v = sys.rho_coefficient(i) / weight_norm_sq(n, i)?.sqrt();
        if v < best - 1e-15 {
            best = v;
            best_i = i;
        }
    }
    let closed = dl_exponent_closed_form(n);
    if (best - closed).abs() > 1e-12 {
        return Err(validation(format!("exponent mismatch: min ratio {best} vs closed {closed}")));
    }
    if best_i != 1 && best_i != n - 1 {
        return Err(validation(format!("exponent minimizer {best_i} not at an end node")));
    }
    Ok(best)
}

/// J(z) = integral of e^{-rho(w)} over {w in the closed chamber, ||w|| >= z}.
/// Rank 1 is closed form; rank 2 integrates the angular sector with the radial
/// part done analytically. Higher rank is unsupported.
pub fn chamber_tail_integral(n: usize, z: f64) -> Result<f64> {
    if z < 0.0 {
        return Err(domain("chamber tail integral needs z >= 0"));
    }
    let sys = RootSystemA::new(n)?;
    match n {
        2 => {
            let k = sys.rho_coefficient(1) / weight_norm_sq(2, 1)?.sqrt();
            Ok((-k * z).exp() / k)
        }
        3 => {
            // orthonormal coordinates w = L^T p for weight coordinates p >= 0
            let l = sys.gram_cholesky()?;
            let v1 = [l[0][0], l[0][1]]; // image of omega_1 (second entry is 0)
            let v2 = [l[1][0], l[1][1]]; // image of omega_2
            let phi1 = v1[1].atan2(v1[0]);
            let phi2 = v2[1].atan2(v2[0]);
            let (phi_lo, phi_hi) = if phi1 < phi2 { (phi1, phi2) } else { (phi2, phi1) };
            // rho in the orthonormal coordinates: solve L rho_vec = kappa
            let kappa = [sys.rho_coefficient(1), sys.rho_coefficient(2)];
            let r0 = kappa[0] / l[0][0];
            let r1 = (kappa[1] - l[1][0] * r0) / l[1][1];
            let radial = move |phi: f64| {
                let g = r0 * phi.cos() + r1 * phi.sin();
                // int_z^inf e^{-g r} r dr
                (-g * z).exp() * (z / g + 1.0 / (g * g))
            };
            adaptive_quadrature(radial, phi_lo, phi_hi, 1e-6)
                .map_err(|e| Error::Quadrature(format!("chamber integral: {e}")))
        }
        _ => Err(domain(format!("chamber tail integral supports n in {{2, 3}}, got {n}"))),
    }
}

/// Rows (i, k_i, ||omega_i||^2, k_i/||omega_i||) plus the closed-form exponent.
pub fn roots_table(n: usize) -> Result<(Vec<(usize, f64, f64, f64)>, f64)> {
    let sys = RootSystemA::new(n)?;
    let mut rows = Vec::new();
    for i in 1..n {
        let w2 = weight_norm_sq(n, i)?;
        let ki = sys.rho_coefficient(i);
        rows.push((i, ki, w2, ki / w2.sqrt()));
    }
    Ok((rows, dl_exponent(n)?))
}
