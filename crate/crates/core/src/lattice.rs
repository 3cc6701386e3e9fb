//! Exact geometry of unimodular lattices: Lovász-reduced bases, shortest vectors,
//! the height function delta, and primitive vectors / tuples.
//!
//! All enumerations are exact: candidates are generated from a reduced Gram
//! matrix with a small safety slack, then admitted by re-evaluating the norm of
//! `B * c` in the caller's original basis, so results agree bit-for-bit with a
//! brute-force scan over the same coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::mat::Mat;
use crate::snf::{gcd_slice, smith_divisors};

pub const UNIMODULAR_TOL: f64 = 1e-9;
pub const LOVASZ_DELTA: f64 = 0.99;
/// Hard cap on enumeration work; exceeding it is an explicit error, never a
/// silent truncation.
pub const ENUMERATION_CAP: u64 = 10_000_000;

/// Norm on R^k. Sup is the default; Euclidean is offered for cross-checks.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    #[default]
    Sup,
    Euclidean,
}

impl NormKind {
    #[inline]
    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            NormKind::Sup => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormKind::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    /// Euclidean radius of the smallest ball containing the `radius`-ball of
    /// this norm in dimension k.
    fn euclidean_cover(&self, radius: f64, k: usize) -> f64 {
        match self {
            NormKind::Sup => radius * (k as f64).sqrt(),
            NormKind::Euclidean => radius,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BasisRepr {
    dim: usize,
    data: Vec<f64>,
}

impl From<LatticeBasis> for BasisRepr {
    fn from(b: LatticeBasis) -> Self {
        BasisRepr { dim: b.dim(), data: b.cols.row_major().to_vec() }
    }
}

impl TryFrom<BasisRepr> for LatticeBasis {
    type Error = Error;
    fn try_from(r: BasisRepr) -> Result<Self> {
        LatticeBasis::from_row_major(r.dim, r.data)
    }
}

/// A unimodular lattice in R^k given by the columns of a k x k matrix.
/// Construction checks |det - 1| <= 1e-9.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisRepr", into = "BasisRepr")]
pub struct LatticeBasis {
    cols: Mat,
}

impl LatticeBasis {
    pub fn from_matrix(cols: Mat) -> Result<Self> {
        let k = cols.rows();
        if cols.cols() != k || k < 2 || k > 6 {
            return Err(domain(format!("basis must be k x k with 2 <= k <= 6, got {}x{}", cols.rows(), cols.cols())));
        }
        if !cols.is_finite() {
            return Err(Error::SingularBasis);
        }
        let (sign, log_abs) = cols.sign_log_det();
        if sign == 0.0 || !log_abs.is_finite() {
            return Err(Error::SingularBasis);
        }
        let det = sign * log_abs.exp();
        let dev = (det - 1.0).abs();
        if dev > UNIMODULAR_TOL {
            return Err(Error::NotUnimodular(dev));
        }
        Ok(LatticeBasis { cols })
    }

    /// Row-major entries of the matrix whose columns generate the lattice.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_matrix(Mat::from_row_major(dim, dim, data)?)
    }

    pub fn from_cols(cols: &[Vec<f64>]) -> Result<Self> {
        let k = cols.len();
        let mut m = Mat::zeros(k, k);
        for (j, col) in cols.iter().enumerate() {
            if col.len() != k {
                return Err(domain("column length mismatch"));
            }
            for i in 0..k {
                m.set(i, j, col[i]);
            }
        }
        Self::from_matrix(m)
    }

    pub fn identity(k: usize) -> Self {
        LatticeBasis { cols: Mat::identity(k) }
    }

    pub fn dim(&self) -> usize {
        self.cols.rows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.cols
    }

    pub fn det(&self) -> f64 {
        self.cols.det()
    }

    /// Embedding B * c of an integer coordinate vector.
    pub fn embed(&self, c: &[i64]) -> Vec<f64> {
        self.cols.mul_int_vec(c)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.cols.col(j)
    }

    /// Rescale so the determinant is 1 to machine precision. Long incremental
    /// orbits accumulate determinant drift of order e^{2 delta} * eps per
    /// reduction step; this projects back onto the unimodular locus.
    pub fn renormalized(&self) -> Result<Self> {
        let k = self.dim();
        let (sign, log_abs) = self.cols.sign_log_det();
        if sign <= 0.0 || !log_abs.is_finite() {
            return Err(Error::SingularBasis);
        }
        let scale = (-log_abs / k as f64).exp();
        let mut m = self.cols.clone();
        for i in 0..k {
            m.scale_row(i, scale);
        }
        Self::from_matrix(m)
    }
}

/// A nonzero lattice vector: integer coordinates (in the basis it was produced
/// from), its embedding B * c, and its norm under the chosen norm kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortVec {
    pub coords: Vec<i64>,
    pub embed: Vec<f64>,
    pub norm_value: f64,
}

impl ShortVec {
    fn build(basis: &LatticeBasis, coords: Vec<i64>, norm: NormKind) -> Self {
        let embed = basis.embed(&coords);
        let norm_value = norm.eval(&embed);
        ShortVec { coords, embed, norm_value }
    }

    pub fn negated(&self) -> ShortVec {
        ShortVec {
            coords: self.coords.iter().map(|&x| -x).collect(),
            embed: self.embed.iter().map(|&x| -x).collect(),
            norm_value: self.norm_value,
        }
    }
}

/// Canonical representative of {c, -c}: first nonzero coordinate positive.
fn canonicalize(c: &mut [i64]) {
    if let Some(&first) = c.iter().find(|&&x| x != 0) {
        if first < 0 {
            for x in c.iter_mut() {
                *x = -*x;
            }
        }
    }
}

fn lex_less(a: &[i64], b: &[i64]) -> bool {
    a.iter().lt(b.iter())
}

// ---------------------------------------------------------------------------
// Lovász reduction
// ---------------------------------------------------------------------------

struct GramSchmidt {
    bstar: Vec<Vec<f64>>,
    mu: Vec<Vec<f64>>,
    norms_sq: Vec<f64>,
}

fn gram_schmidt(cols: &[Vec<f64>]) -> GramSchmidt {
    let k = cols.len();
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut mu = vec![vec![0.0; k]; k];
    let mut norms_sq = vec![0.0; k];
    for i in 0..k {
        let mut v = cols[i].clone();
        for j in 0..i {
            let num: f64 = cols[i].iter().zip(&bstar[j]).map(|(a, b)| a * b).sum();
            let m = if norms_sq[j] == 0.0 { 0.0 } else { num / norms_sq[j] };
            mu[i][j] = m;
            for (t, bj) in v.iter_mut().zip(&bstar[j]) {
                *t -= m * bj;
            }
        }
        norms_sq[i] = v.iter().map(|x| x * x).sum();
        bstar.push(v);
    }
    GramSchmidt { bstar, mu, norms_sq }
}

fn sub_scaled_i64(target: &mut [i64], source: &[i64], m: i64) -> Result<()> {
    for (t, s) in target.iter_mut().zip(source) {
        let prod = s.checked_mul(m).ok_or(Error::IntegerOverflow)?;
        *t = t.checked_sub(prod).ok_or(Error::IntegerOverflow)?;
    }
    Ok(())
}

/// LLL on the columns with delta = 0.99. Returns the reduced columns and the
/// integer transform U with B_red = B * U, det U = +-1.
fn lll_with_transform(basis: &Mat) -> Result<(Vec<Vec<f64>>, Vec<Vec<i64>>)> {
    let k = basis.rows();
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| basis.col(j)).collect();
    let mut u: Vec<Vec<i64>> = (0..k)
        .map(|j| (0..k).map(|i| if i == j { 1 } else { 0 }).collect())
        .collect();

    let mut gs = gram_schmidt(&cols);
    if gs.norms_sq.iter().any(|&n| !n.is_finite()) {
        return Err(Error::SingularBasis);
    }
    let mut idx = 1usize;
    let mut steps = 0u64;
    while idx < k {
        steps += 1;
        if steps > 200_000 {
            return Err(validation("basis reduction failed to converge"));
        }
        // size reduction
        let mut changed = false;
        for j in (0..idx).rev() {
            let m = gs.mu[idx][j].round();
            if m != 0.0 {
                if m.abs() > 9.0e15 {
                    return Err(Error::IntegerOverflow);
                }
                let mi = m as i64;
                let src = cols[j].clone();
                for (t, s) in cols[idx].iter_mut().zip(&src) {
                    *t -= m * s;
                }
                let usrc = u[j].clone();
                sub_scaled_i64(&mut u[idx], &usrc, mi)?;
                changed = true;
            }
        }
        if changed {
            gs = gram_schmidt(&cols);
        }
        // Lovász condition
        let lhs = gs.norms_sq[idx];
        let rhs = (LOVASZ_DELTA - gs.mu[idx][idx - 1].powi(2)) * gs.norms_sq[idx - 1];
        if lhs >= rhs || gs.norms_sq[idx - 1] == 0.0 {
            idx += 1;
        } else {
            cols.swap(idx, idx - 1);
            u.swap(idx, idx - 1);
            gs = gram_schmidt(&cols);
            idx = idx.max(2) - 1;
        }
    }
    drop(gs.bstar);

    // keep determinant +1: column ops preserve |det|; fix the sign on the last column
    let red = Mat::from_rows(
        &(0..k).map(|i| (0..k).map(|j| cols[j][i]).collect::<Vec<_>>()).collect::<Vec<_>>(),
    )?;
    if red.det() < 0.0 {
        for x in cols[k - 1].iter_mut() {
            *x = -*x;
        }
        for x in u[k - 1].iter_mut() {
            *x = -*x;
        }
    }
    Ok((cols, u))
}

/// Lovász-reduced basis of the same lattice (B' = B * U, U integer unimodular).
pub fn reduce_basis(basis: &LatticeBasis) -> Result<LatticeBasis> {
    let (cols, _) = lll_with_transform(basis.matrix())?;
    LatticeBasis::from_cols(&cols)
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Cholesky factor R (upper triangular) with G = R^T R for the Gram matrix of
/// the given columns.
fn cholesky_of_gram(cols: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = cols.len();
    let mut g = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            g[i][j] = dot;
            g[j][i] = dot;
        }
    }
    let mut r = vec![vec![0.0; k]; k];
    for i in 0..k {
        let mut d = g[i][i];
        for l in 0..i {
            d -= r[l][i] * r[l][i];
        }
        if !(d > 1e-280) || !d.is_finite() {
            return Err(Error::SingularBasis);
        }
        r[i][i] = d.sqrt();
        for j in i + 1..k {
            let mut v = g[i][j];
            for l in 0..i {
                v -= r[l][i] * r[l][j];
            }
            r[i][j] = v / r[i][i];
        }
    }
    Ok(r)
}

/// Depth-first Fincke-Pohst enumeration of nonzero c with ||R c||^2 <= radius_sq.
/// Emits one representative of each +-pair (highest-index nonzero coordinate
/// positive). Node visits are capped.
struct BallEnum<'a> {
    r: &'a [Vec<f64>],
    radius_sq: f64,
    nodes: u64,
    cap: u64,
}

impl<'a> BallEnum<'a> {
    fn run(&mut self, visit: &mut impl FnMut(&[i64]) -> Result<()>) -> Result<()> {
        let k = self.r.len();
        let mut c = vec![0i64; k];
        self.descend(k - 1, 0.0, &mut c, true, visit)
    }

    fn descend(
        &mut self,
        level: usize,
        acc: f64,
        c: &mut Vec<i64>,
        all_above_zero: bool,
        visit: &mut impl FnMut(&[i64]) -> Result<()>,
    ) -> Result<()> {
        let rii = self.r[level][level];
        let mut center = 0.0;
        for j in level + 1..self.r.len() {
            center += self.r[level][j] * c[j] as f64;
        }
        let budget = self.radius_sq - acc;
        if budget < 0.0 {
            return Ok(());
        }
        let w = budget.sqrt() / rii;
        let u = center / rii;
        let lo_f = -u - w;
        let hi_f = -u + w;
        let lo = if all_above_zero { lo_f.ceil().max(0.0) } else { lo_f.ceil() } as i64;
        let hi = hi_f.floor() as i64;
        for ci in lo..=hi {
            self.nodes += 1;
            if self.nodes > self.cap {
                return Err(Error::EnumerationCap { cap: self.cap });
            }
            let y = rii * ci as f64 + center;
            let acc2 = acc + y * y;
            if acc2 > self.radius_sq {
                continue;
            }
            c[level] = ci;
            let zero_so_far = all_above_zero && ci == 0;
            if level == 0 {
                if !zero_so_far {
                    visit(c)?;
                }
            } else {
                self.descend(level - 1, acc2, c, zero_so_far, visit)?;
            }
        }
        c[level] = 0;
        Ok(())
    }
}

fn mul_u_c(u: &[Vec<i64>], c: &[i64]) -> Result<Vec<i64>> {
    let k = u.len();
    let mut out = vec![0i64; k];
    for (j, col) in u.iter().enumerate() {
        if c[j] == 0 {
            continue;
        }
        for i in 0..k {
            let prod = col[i].checked_mul(c[j]).ok_or(Error::IntegerOverflow)?;
            out[i] = out[i].checked_add(prod).ok_or(Error::IntegerOverflow)?;
        }
    }
    Ok(out)
}

/// Enumerate every nonzero lattice vector with exact norm <= radius in the
/// caller's basis coordinates; one representative of each +-pair is admitted.
fn enumerate_ball(
    basis: &LatticeBasis,
    radius: f64,
    norm: NormKind,
    mut admit: impl FnMut(Vec<i64>, Vec<f64>, f64) -> Result<()>,
) -> Result<()> {
    if radius <= 0.0 {
        return Err(domain("ball radius must be positive"));
    }
    let (cols, u) = lll_with_transform(basis.matrix())?;
    let r = cholesky_of_gram(&cols)?;
    let euclid = norm.euclidean_cover(radius, basis.dim());
    let radius_sq = euclid * euclid * (1.0 + 1e-9) + 1e-30;
    let mut en = BallEnum { r: &r, radius_sq, nodes: 0, cap: ENUMERATION_CAP };
    en.run(&mut |c_red| {
        let c = mul_u_c(&u, c_red)?;
        let embed = basis.embed(&c);
        let nv = norm.eval(&embed);
        if nv <= radius {
            admit(c, embed, nv)?;
        }
        Ok(())
    })
}

/// Streaming visit of every nonzero lattice vector of norm <= radius, both
/// signs, without materializing the list.
pub fn for_each_vector_in_ball(
    basis: &LatticeBasis,
    radius: f64,
    norm: NormKind,
    mut f: impl FnMut(&[i64], &[f64], f64) -> Result<()>,
) -> Result<()> {
    enumerate_ball(basis, radius, norm, |c, embed, nv| {
        f(&c, &embed, nv)?;
        let neg_c: Vec<i64> = c.iter().map(|&x| -x).collect();
        let neg_e: Vec<f64> = embed.iter().map(|&x| -x).collect();
        f(&neg_c, &neg_e, nv)
    })
}

/// Global minimizer of ||B c|| over nonzero integer c, exact via reduction plus
/// Fincke-Pohst enumeration. Ties break to the lexicographically smallest
/// coordinate vector with positive first nonzero entry.
pub fn shortest_vector(basis: &LatticeBasis, norm: NormKind) -> Result<ShortVec> {
    let (cols, u) = lll_with_transform(basis.matrix())?;
    let r = cholesky_of_gram(&cols)?;
    let k = basis.dim();

    // initial bound: best reduced-basis column, measured in the input basis
    let mut best: Option<(f64, Vec<i64>)> = None;
    let consider = |mut c: Vec<i64>, basis: &LatticeBasis, best: &mut Option<(f64, Vec<i64>)>| {
        canonicalize(&mut c);
        let nv = norm.eval(&basis.embed(&c));
        match best {
            Some((bn, bc)) => {
                if nv < *bn || (nv == *bn && lex_less(&c, bc)) {
                    *best = Some((nv, c));
                }
            }
            None => *best = Some((nv, c)),
        }
    };
    for j in 0..k {
        consider(u[j].clone(), basis, &mut best);
    }
    let bound = best.as_ref().map(|(n, _)| *n).unwrap();
    if !(bound.is_finite() && bound > 0.0) {
        return Err(Error::SingularBasis);
    }

    let euclid = norm.euclidean_cover(bound, k);
    let radius_sq = euclid * euclid * (1.0 + 1e-9) + 1e-30;
    let mut en = BallEnum { r: &r, radius_sq, nodes: 0, cap: ENUMERATION_CAP };
    en.run(&mut |c_red| {
        let c = mul_u_c(&u, c_red)?;
        consider(c, basis, &mut best);
        Ok(())
    })?;

    let (_, coords) = best.unwrap();
    Ok(ShortVec::build(basis, coords, norm))
}

/// The height Delta(Lambda) = -log ||shortest vector||.
pub fn delta(basis: &LatticeBasis, norm: NormKind) -> Result<f64> {
    Ok(-shortest_vector(basis, norm)?.norm_value.ln())
}

/// All primitive vectors (coordinate gcd 1) of norm <= radius, both signs,
/// sorted by (norm, coordinates).
pub fn primitive_vectors_in_ball(
    basis: &LatticeBasis,
    radius: f64,
    norm: NormKind,
) -> Result<Vec<ShortVec>> {
    let mut out = Vec::new();
    enumerate_ball(basis, radius, norm, |c, embed, nv| {
        if gcd_slice(&c) == 1 {
            let v = ShortVec { coords: c, embed, norm_value: nv };
            out.push(v.negated());
            out.push(v);
        }
        Ok(())
    })?;
    sort_vectors(&mut out);
    Ok(out)
}

/// All nonzero vectors of norm <= radius, both signs, sorted by (norm, coords).
pub fn vectors_in_ball(
    basis: &LatticeBasis,
    radius: f64,
    norm: NormKind,
) -> Result<Vec<ShortVec>> {
    let mut out = Vec::new();
    enumerate_ball(basis, radius, norm, |c, embed, nv| {
        let v = ShortVec { coords: c, embed, norm_value: nv };
        out.push(v.negated());
        out.push(v);
        Ok(())
    })?;
    sort_vectors(&mut out);
    Ok(out)
}

fn sort_vectors(vs: &mut [ShortVec]) {
    vs.sort_by(|a, b| {
        a.norm_value
            .partial_cmp(&b.norm_value)
            .unwrap()
            .then_with(|| a.coords.cmp(&b.coords))
    });
}

/// True iff the rows of `c` form a primitive d-tuple, i.e. extend to a basis of
/// Z^k; criterion: all Smith elementary divisors equal 1. Requires 1 <= d < k.
pub fn tuple_is_primitive(rows: &[Vec<i64>]) -> Result<bool> {
    let d = rows.len();
    if d == 0 {
        return Err(domain("empty tuple"));
    }
    let k = rows[0].len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(domain("ragged tuple"));
    }
    if d >= k {
        return Err(domain(format!("tuple length d = {d} must be < k = {k}")));
    }
    let divisors = smith_divisors(rows);
    Ok(divisors.len() == d && divisors.iter().all(|&x| x == 1))
}

/// Number of ordered primitive pairs (v1, v2) with both norms <= radius.
/// For k >= 3 primitivity is the Smith criterion; k = 2 is a diagnostic mode
/// using |det| = 1 (the pair then already spans the lattice).
pub fn primitive_pairs_in_ball(
    basis: &LatticeBasis,
    radius: f64,
    norm: NormKind,
) -> Result<u64> {
    let k = basis.dim();
    let vecs = primitive_vectors_in_ball(basis, radius, norm)?;
    let n = vecs.len() as u64;
    if n * n > ENUMERATION_CAP {
        return Err(Error::EnumerationCap { cap: ENUMERATION_CAP });
    }
    let mut count = 0u64;
    for a in &vecs {
        for b in &vecs {
            let ok = if k == 2 {
                let det = a.coords[0].checked_mul(b.coords[1]).ok_or(Error::IntegerOverflow)?
                    - a.coords[1].checked_mul(b.coords[0]).ok_or(Error::IntegerOverflow)?;
                det.abs() == 1
            } else {
                tuple_is_primitive(&[a.coords.clone(), b.coords.clone()])?
            };
            if ok {
                count += 1;
            }
        }
    }
    Ok(count)
}
