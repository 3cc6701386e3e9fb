//! Witness enumeration for psi-approximability (matrix, lattice and
//! multiplicative forms) and the two-way translation between witnesses and
//! flow excursions.

use serde::{Deserialize, Serialize};

use crate::dani::{PsiFunction, RateFunction};
use crate::error::{domain, validation, Error, Result};
use crate::flow::{apply_flow, ChamberPoint, DiagonalFlow};
use crate::lattice::{
    delta, for_each_vector_in_ball, reduce_basis, shortest_vector, vectors_in_ball, LatticeBasis,
    NormKind, ShortVec, ENUMERATION_CAP,
};
use crate::mat::Mat;
use crate::numeric::{bisect, grow_bracket};

const SUP: NormKind = NormKind::Sup;

/// A lattice vector split as v = (v^(m), v_(n)) witnessing
/// ||v^(m)||^m <= psi(||v_(n)||^n); slack is the non-negative margin.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxWitness {
    pub v: ShortVec,
    pub head: Vec<f64>,
    pub tail: Vec<f64>,
    pub head_norm: f64,
    pub tail_norm: f64,
    pub slack: f64,
    /// v^(m) = 0: such vectors witness every psi (case flagged separately).
    pub zero_head: bool,
}

/// A multiplicative witness: Pi(v) <= ||v|| psi(||v||).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaWitness {
    pub v: ShortVec,
    pub product: f64,
    pub slack: f64,
    /// some coordinate vanishes: the lattice is then a witness for every psi.
    pub zero_coord: bool,
}

/// Matrix-form witness: integer (p, q) with ||A q + p||^m <= psi(||q||^n).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixWitness {
    pub p: Vec<i64>,
    pub q: Vec<i64>,
    pub q_norm: f64,
    pub error_norm: f64,
    pub slack: f64,
}

fn split_embed(embed: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    (embed[..m].to_vec(), embed[m..].to_vec())
}

fn build_approx_witness(
    v: ShortVec,
    m: usize,
    psi_value: f64,
) -> Result<ApproxWitness> {
    let (head, tail) = split_embed(&v.embed, m);
    let head_norm = SUP.eval(&head);
    let tail_norm = SUP.eval(&tail);
    let lhs = head_norm.powi(head.len() as i32);
    let slack = psi_value - lhs;
    // boundary witnesses arrive with slack at solver precision; only a gross
    // violation indicates a wrong vector
    if slack < -1e-6 * psi_value.max(lhs) {
        return Err(validation(format!("witness slack went negative: {slack}")));
    }
    let zero_head = head.iter().all(|&x| x == 0.0);
    Ok(ApproxWitness {
        v,
        head,
        tail,
        head_norm,
        tail_norm,
        slack: slack.max(0.0),
        zero_head,
    })
}

/// All q in Z^n with 1 <= ||q|| <= q_max (sup norm) admitting an integer p that
/// satisfies the approximation inequality; p is the coordinatewise nearest
/// integer to -A q (half-integer ties to even). q below psi's domain are
/// outside the inequality's range and are skipped. Sorted by ||q||.
pub fn psi_approx_witnesses(
    a: &Mat,
    psi: &PsiFunction,
    q_max: f64,
) -> Result<Vec<MatrixWitness>> {
    let m = a.rows();
    let n = a.cols();
    if m < 1 || n < 1 {
        return Err(domain("need m, n >= 1"));
    }
    let qb = q_max.floor() as i64;
    if qb < 1 {
        return Err(domain("q_max must be >= 1"));
    }
    let box_size = (2 * qb + 1) as u64;
    match box_size.checked_pow(n as u32) {
        Some(total) if total <= ENUMERATION_CAP => {}
        _ => return Err(Error::EnumerationCap { cap: ENUMERATION_CAP }),
    }

    let mut out = Vec::new();
    let mut q = vec![-qb; n];
    'outer: loop {
        if q.iter().any(|&x| x != 0) {
            let qf: Vec<f64> = q.iter().map(|&x| x as f64).collect();
            let q_norm = SUP.eval(&qf);
            let x = q_norm.powi(n as i32);
            if x >= psi.x0() {
                let aq = a.mul_vec(&qf);
                let p: Vec<i64> =
                    aq.iter().map(|&v| (-v).round_ties_even() as i64).collect();
                let err: Vec<f64> =
                    aq.iter().zip(&p).map(|(&v, &pi)| v + pi as f64).collect();
                let error_norm = SUP.eval(&err);
                let lhs = error_norm.powi(m as i32);
                let rhs = psi.eval(x)?;
                if lhs <= rhs {
                    out.push(MatrixWitness {
                        p,
                        q: q.clone(),
                        q_norm,
                        error_norm,
                        slack: rhs - lhs,
                    });
                }
            }
        }
        // odometer over the box
        for i in 0..n {
            q[i] += 1;
            if q[i] <= qb {
                continue 'outer;
            }
            q[i] = -qb;
        }
        break;
    }
    out.sort_by(|a, b| {
        a.q_norm.partial_cmp(&b.q_norm).unwrap().then_with(|| a.q.cmp(&b.q))
    });
    Ok(out)
}

/// All lattice vectors with ||v_(n)|| <= r_max satisfying the approximation
/// inequality, via enumeration over reduced-basis coordinates. Both signs are
/// reported; vectors with ||v_(n)||^n below psi's domain are skipped.
pub fn lattice_psi_approx_witnesses(
    basis: &LatticeBasis,
    psi: &PsiFunction,
    m: usize,
    n: usize,
    r_max: f64,
) -> Result<Vec<ApproxWitness>> {
    if m + n != basis.dim() {
        return Err(domain("m + n must equal the lattice dimension"));
    }
    // the inequality caps the head: ||v^(m)|| <= psi(x0)^{1/m}
    let head_bound = psi.eval(psi.x0())?.powf(1.0 / m as f64);
    let radius = r_max.max(head_bound) * (1.0 + 1e-12);
    let mut out = Vec::new();
    for v in vectors_in_ball(basis, radius, SUP)? {
        let (head, tail) = split_embed(&v.embed, m);
        let tail_norm = SUP.eval(&tail);
        if tail_norm > r_max {
            continue;
        }
        let x = tail_norm.powi(n as i32);
        if x < psi.x0() {
            continue;
        }
        let head_norm = SUP.eval(&head);
        let rhs = psi.eval(x)?;
        if head_norm.powi(m as i32) <= rhs {
            out.push(build_approx_witness(v, m, rhs)?);
        }
    }
    out.sort_by(|a, b| {
        a.tail_norm
            .partial_cmp(&b.tail_norm)
            .unwrap()
            .then_with(|| a.v.coords.cmp(&b.v.coords))
    });
    Ok(out)
}

/// Solve t from lambda(t) = t - n r(t) = target; lambda is strictly increasing.
pub fn time_of_lambda(r: &RateFunction, n: usize, target: f64) -> Result<f64> {
    let t0 = r.t0();
    let lam = |t: f64| -> Result<f64> { Ok(t - n as f64 * r.eval(t)?) };
    let at0 = lam(t0)?;
    // boundary comparison must be looser than the rate solver's tolerance
    if target < at0 - 1e-9 {
        return Err(Error::NotYetInRange(format!(
            "lambda target {target:.6} below lambda(t0) = {at0:.6}"
        )));
    }
    let mut f = |t: f64| lam(t).expect("bracket stays in domain") - target;
    if f(t0) >= 0.0 {
        return Ok(t0);
    }
    let (lo, hi) = grow_bracket(&mut f, t0, 1.0)?;
    Ok(bisect(&mut f, lo, hi, 1e-11))
}

/// psi reconstructed from a rate function through the defining identity:
/// psi(x) = e^{-L(t)} at the unique t with e^{lambda(t)} = x.
pub fn psi_of_rate(r: &RateFunction, m: usize, n: usize, x: f64) -> Result<f64> {
    let t = time_of_lambda(r, n, x.ln())?;
    let rt = r.eval(t)?;
    Ok((-(t + m as f64 * rt)).exp())
}

/// Excursion time of a witness: the unique t with ||v_(n)||^n = e^{t - n r(t)}.
/// Verifies both scaled-coordinate inequalities, hence delta(f_t Lambda) >= r(t).
pub fn witness_to_time(
    w: &ApproxWitness,
    r: &RateFunction,
    m: usize,
    n: usize,
) -> Result<f64> {
    if w.tail_norm <= 0.0 {
        return Err(domain("witness has zero tail; no excursion time"));
    }
    let target = n as f64 * w.tail_norm.ln();
    let t = time_of_lambda(r, n, target)?;
    let rt = r.eval(t)?;
    let tol = 1e-9;
    // both flow-scaled halves must fit under e^{-r(t)}:
    // e^{t/m} ||v^(m)|| and e^{-t/n} ||v_(n)||
    if w.head_norm > 0.0 && t / m as f64 + w.head_norm.ln() > -rt + tol {
        return Err(validation("scaled head exceeds e^{-r(t)}"));
    }
    if -t / n as f64 + w.tail_norm.ln() > -rt + tol {
        return Err(validation("scaled tail exceeds e^{-r(t)}"));
    }
    Ok(t)
}

/// Outcome of extracting a witness from an excursion.
#[derive(Clone, Debug)]
pub enum TimeWitness {
    Witness(ApproxWitness),
    /// v^(m) = 0: integral multiples witness every psi.
    ZeroHead(ShortVec),
}

/// Converse direction: at a time t with delta(f_t Lambda) >= r(t), pull the
/// short vector of f_t Lambda back through the flow.
///
/// The embedding of the returned witness is the exact diagonal pullback
/// e^{-a_i t} w_i of the short vector w of the flowed lattice; recomputing it
/// as B * c instead would cancel catastrophically once e^t outgrows the f64
/// mantissa. Deep excursions (t beyond ~12) exhaust 64-bit conditioning
/// inside the flowed-basis reduction itself.
pub fn time_to_witness(
    basis: &LatticeBasis,
    r: &RateFunction,
    m: usize,
    n: usize,
    t: f64,
) -> Result<TimeWitness> {
    if m + n != basis.dim() {
        return Err(domain("m + n must equal the lattice dimension"));
    }
    let flow = DiagonalFlow::two_block(m, n);
    let moved = apply_flow(&flow, t, basis)?;
    let d = delta(&moved, SUP)?;
    let rt = r.eval(t)?;
    if d < rt - 1e-12 {
        return Err(Error::NoExcursion(t, d, rt));
    }
    let short = shortest_vector(&moved, SUP)?;
    let mut embed = short.embed.clone();
    for (i, x) in embed.iter_mut().enumerate() {
        *x *= (-flow.exponents()[i] * t).exp();
    }
    let v = ShortVec { norm_value: SUP.eval(&embed), embed, coords: short.coords };
    let (head, tail) = split_embed(&v.embed, m);
    if head.iter().all(|&x| x == 0.0) {
        return Ok(TimeWitness::ZeroHead(v));
    }
    let tail_norm = SUP.eval(&tail);
    let x = tail_norm.powi(n as i32);
    let psi_value = psi_of_rate(r, m, n, x).map_err(|e| match e {
        Error::NotYetInRange(_) => Error::NotYetInRange(format!(
            "excursion at t = {t} produced a tail of norm {tail_norm:.3e} below the domain of psi"
        )),
        other => other,
    })?;
    Ok(TimeWitness::Witness(build_approx_witness(v, m, psi_value)?))
}

fn coordinate_product(v: &[f64]) -> f64 {
    v.iter().fold(1.0, |acc, &x| acc * x.abs())
}

fn ma_condition(psi: &PsiFunction, v: &[f64]) -> Result<Option<(f64, f64)>> {
    let nv = SUP.eval(v);
    if nv < psi.x0() {
        return Ok(None);
    }
    let thr = nv * psi.eval(nv)?;
    let prod = coordinate_product(v);
    Ok(if prod <= thr { Some((prod, thr - prod)) } else { None })
}

/// All v with ||v|| <= r_max and Pi(v) <= ||v|| psi(||v||); vectors below
/// psi's domain are skipped.
pub fn ma_witnesses(
    basis: &LatticeBasis,
    psi: &PsiFunction,
    r_max: f64,
) -> Result<Vec<MaWitness>> {
    if basis.dim() < 2 {
        return Err(domain("multiplicative approximation needs dim >= 2"));
    }
    let mut out = Vec::new();
    for v in vectors_in_ball(basis, r_max, SUP)? {
        if let Some((product, slack)) = ma_condition(psi, &v.embed)? {
            let zero_coord = v.embed.contains(&0.0);
            out.push(MaWitness { v, product, slack, zero_coord });
        }
    }
    out.sort_by(|a, b| {
        a.v.norm_value
            .partial_cmp(&b.v.norm_value)
            .unwrap()
            .then_with(|| a.v.coords.cmp(&b.v.coords))
    });
    Ok(out)
}

/// Count of `ma_witnesses` without materializing the list.
pub fn count_ma_witnesses(basis: &LatticeBasis, psi: &PsiFunction, r_max: f64) -> Result<u64> {
    let mut count = 0u64;
    for_each_vector_in_ball(basis, r_max, SUP, |_, embed, _| {
        if ma_condition(psi, embed)?.is_some() {
            count += 1;
        }
        Ok(())
    })?;
    Ok(count)
}

/// Multiplicative-witness counts at each rung of a sorted radius ladder, from
/// a single enumeration at the largest rung.
pub fn ma_witness_counts_ladder(
    basis: &LatticeBasis,
    psi: &PsiFunction,
    ladder: &[f64],
) -> Result<Vec<u64>> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("ladder must be non-empty and strictly increasing"));
    }
    let r_max = *ladder.last().unwrap();
    let mut counts = vec![0u64; ladder.len()];
    for_each_vector_in_ball(basis, r_max, SUP, |_, embed, nv| {
        if ma_condition(psi, embed)?.is_some() {
            let idx = ladder.partition_point(|&r| r < nv);
            if idx < ladder.len() {
                counts[idx] += 1;
            }
        }
        Ok(())
    })?;
    for i in 1..counts.len() {
        counts[i] += counts[i - 1];
    }
    Ok(counts)
}

/// Fast multiplicative-witness count for dimension 2. The witness region is a
/// thin neighborhood of the coordinate hyperbolas, so for each first
/// coordinate of the (reduced) basis expansion the admissible second
/// coordinates solve |quadratic| <= threshold in closed form. Requires
/// s psi(s) non-increasing (true for the 1/(x log^q x) family).
///
/// Counts agree exactly with `ma_witnesses(basis, psi, r_max).len()` when
/// `basis` is already Lovász-reduced.
pub fn count_ma_witnesses_2d(
    basis: &LatticeBasis,
    psi: &PsiFunction,
    r_max: f64,
) -> Result<u64> {
    if basis.dim() != 2 {
        return Err(domain("count_ma_witnesses_2d needs dim = 2"));
    }
    let x0 = psi.x0();
    if r_max < x0 {
        return Ok(0);
    }
    // envelope must be non-increasing for the conservative band below
    let mut prev = f64::INFINITY;
    for i in 0..=32 {
        let s = x0 + (r_max - x0) * i as f64 / 32.0;
        let thr = s * psi.eval(s)?;
        if thr > prev + 1e-12 {
            return Err(domain(
                "count_ma_witnesses_2d needs s * psi(s) non-increasing; use ma_witnesses",
            ));
        }
        prev = thr;
    }
    let delta_max = x0 * psi.eval(x0)? + 1e-12;

    let red = reduce_basis(basis)?;
    let inv = red.matrix().inverse().ok_or(Error::SingularBasis)?;
    let c1_extent =
        ((inv.get(0, 0).abs() + inv.get(0, 1).abs()) * r_max).ceil() as i64 + 1;
    if c1_extent as u64 > 20_000_000 {
        return Err(Error::EnumerationCap { cap: ENUMERATION_CAP });
    }
    let b1 = red.column(0);
    let b2 = red.column(1);

    let mut count = 0u64;
    let mut check = |c1: i64, c2: i64| -> Result<()> {
        if c1 == 0 && c2 == 0 {
            return Ok(());
        }
        let v = red.embed(&[c1, c2]);
        if SUP.eval(&v) <= r_max && ma_condition(psi, &v)?.is_some() {
            count += 1;
        }
        Ok(())
    };

    for c1 in -c1_extent..=c1_extent {
        let a0 = c1 as f64 * b1[0];
        let a1 = c1 as f64 * b1[1];
        // window of c2 with both coordinates within [-r_max, r_max]
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut feasible = true;
        for (off, coef) in [(a0, b2[0]), (a1, b2[1])] {
            if coef == 0.0 {
                if off.abs() > r_max {
                    feasible = false;
                }
            } else {
                let (w0, w1) = ((-r_max - off) / coef, (r_max - off) / coef);
                lo = lo.max(w0.min(w1));
                hi = hi.min(w0.max(w1));
            }
        }
        if !feasible || lo > hi {
            continue;
        }
        // |P(c2)| <= delta_max for P = (a0 + c2 b2x)(a1 + c2 b2y)
        let alpha = b2[0] * b2[1];
        let beta = a0 * b2[1] + a1 * b2[0];
        let gamma = a0 * a1;
        let mut bounds: Vec<f64> = vec![lo, hi];
        for target in [delta_max, -delta_max] {
            // alpha c2^2 + beta c2 + (gamma - target) = 0
            if alpha.abs() > 1e-300 {
                let disc = beta * beta - 4.0 * alpha * (gamma - target);
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    bounds.push((-beta + sq) / (2.0 * alpha));
                    bounds.push((-beta - sq) / (2.0 * alpha));
                }
            } else if beta.abs() > 1e-300 {
                bounds.push((target - gamma) / beta);
            }
        }
        bounds.retain(|x| x.is_finite());
        bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let p_of = |c2: f64| (a0 + c2 * b2[0]) * (a1 + c2 * b2[1]);
        let mut candidates: Vec<i64> = Vec::new();
        for w in bounds.windows(2) {
            let (s0, s1) = (w[0].max(lo), w[1].min(hi));
            if s1 < s0 {
                continue;
            }
            if p_of(0.5 * (s0 + s1)).abs() > delta_max && s1 - s0 > 2.0 {
                continue;
            }
            // widen by one integer on each side; the exact predicate decides
            let from = (s0 - 1.0).ceil() as i64;
            let to = (s1 + 1.0).floor() as i64;
            for c2 in from..=to {
                let c2f = c2 as f64;
                if c2f < lo - 1.0 || c2f > hi + 1.0 {
                    continue;
                }
                candidates.push(c2);
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        for c2 in candidates {
            check(c1, c2)?;
        }
    }
    Ok(count)
}

fn coords_string(c: &[i64]) -> String {
    c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// CSV export of an approximation-witness list:
/// coordinates, head/tail norms, slack, and the zero-head flag.
pub fn approx_witnesses_csv(ws: &[ApproxWitness]) -> String {
    let mut s = String::from("coords,head_norm,tail_norm,slack,zero_head\n");
    for w in ws {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            coords_string(&w.v.coords),
            w.head_norm,
            w.tail_norm,
            w.slack,
            w.zero_head
        ));
    }
    s
}

/// CSV export of a multiplicative-witness list:
/// coordinates, norm, coordinate product, slack, and the zero-coordinate flag.
pub fn ma_witnesses_csv(ws: &[MaWitness]) -> String {
    let mut s = String::from("coords,norm,product,slack,zero_coord\n");
    for w in ws {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            coords_string(&w.v.coords),
            w.v.norm_value,
            w.product,
            w.slack,
            w.zero_coord
        ));
    }
    s
}

/// Outcome of mapping a multiplicative witness into the Weyl chamber.
#[derive(Clone, Debug)]
pub enum ChamberResult {
    Chamber(ChamberPoint),
    /// a coordinate vanishes; the chamber construction does not apply.
    ZeroCoordinate,
}

/// Build the chamber point t with e^{t_i} |v_i| <= e^{-r(||t||_-)} from a
/// multiplicative witness; r must be the transform of psi with (m, n) =
/// (k - 1, 1).
pub fn ma_witness_to_chamber(
    w: &MaWitness,
    r: &RateFunction,
    k: usize,
) -> Result<ChamberResult> {
    if w.v.embed.len() != k {
        return Err(domain("witness dimension mismatch"));
    }
    if w.zero_coord {
        return Ok(ChamberResult::ZeroCoordinate);
    }
    // sort |v_1| >= ... >= |v_k|, remembering positions
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        w.v.embed[j].abs().partial_cmp(&w.v.embed[i].abs()).unwrap().then(i.cmp(&j))
    });
    let sorted: Vec<f64> = order.iter().map(|&i| w.v.embed[i].abs()).collect();
    let norm = sorted[0];

    let t = time_of_lambda(r, 1, norm.ln())?;
    let rt = r.eval(t)?;

    let mut ts = vec![0.0; k];
    ts[0] = -t;
    let mut partial = ts[0];
    for i in 1..k {
        let unconstrained = -rt - sorted[i].ln();
        ts[i] = unconstrained.min(-partial);
        partial += ts[i];
    }
    if partial.abs() > 1e-9 {
        return Err(validation(format!(
            "chamber coordinates failed to balance: sum = {partial:e}"
        )));
    }
    ts[k - 1] -= partial;
    let drift: f64 = ts.iter().sum();
    ts[k - 1] -= drift;

    // ||t||_- must be realized by t_1; the stated fallback swaps otherwise
    let (min_idx, &min_val) = ts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    if min_val < ts[0] - 1e-9 {
        ts.swap(0, min_idx);
    }
    for i in 0..k {
        if ts[i] + sorted[i].ln() > -rt + 1e-9 {
            return Err(validation(format!(
                "scaled coordinate {i} exceeds e^{{-r}}: {}",
                ts[i] + sorted[i].ln() + rt
            )));
        }
    }
    let neg_norm = ts.iter().filter(|&&x| x <= 0.0).fold(0.0f64, |m, &x| m.max(x.abs()));
    if (neg_norm - t).abs() > 1e-9 {
        return Err(validation("||t||_- disagrees with the excursion time"));
    }

    // back to the original coordinate order
    let mut out = vec![0.0; k];
    for (pos, &orig) in order.iter().enumerate() {
        out[orig] = ts[pos];
    }
    Ok(ChamberResult::Chamber(ChamberPoint::new(out)?))
}
