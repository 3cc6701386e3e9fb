//! Shared oracles for the integration suites: random unimodular bases,
//! brute-force enumeration over coordinate boxes, and continued fractions.
//! Everything here is independent of the library's enumeration path.

#![allow(dead_code)]

use cusplab_core::lattice::{LatticeBasis, NormKind};
use cusplab_core::mat::Mat;
use cusplab_core::rng::Pcg64;
use rand::Rng;

/// Random basis with determinant exactly normalized to +1.
pub fn random_unimodular(rng: &mut Pcg64, k: usize) -> LatticeBasis {
    loop {
        let mut m = Mat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let det = m.det();
        if det.abs() < 0.05 {
            continue;
        }
        if det < 0.0 {
            for i in 0..k {
                let a = m.get(i, 0);
                m.set(i, 0, m.get(i, 1));
                m.set(i, 1, a);
            }
        }
        let scale = m.det().abs().powf(-1.0 / k as f64);
        for i in 0..k {
            m.scale_row(i, scale);
        }
        if let Ok(b) = LatticeBasis::from_matrix(m) {
            return b;
        }
    }
}

/// Random unimodular integer matrix with entries in [-3, 3], built from a few
/// elementary column operations.
pub fn random_unimodular_int(rng: &mut Pcg64, k: usize) -> Vec<Vec<i64>> {
    loop {
        let mut u: Vec<Vec<i64>> =
            (0..k).map(|i| (0..k).map(|j| i64::from(i == j)).collect()).collect();
        for _ in 0..6 {
            let a = rng.gen_range(0..k);
            let mut b = rng.gen_range(0..k);
            while b == a {
                b = rng.gen_range(0..k);
            }
            let lam: i64 = rng.gen_range(-2..=2);
            for i in 0..k {
                u[i][a] += lam * u[i][b];
            }
        }
        let max = u.iter().flatten().map(|x| x.abs()).max().unwrap();
        if max <= 3 {
            return u;
        }
    }
}

pub fn apply_int_transform(b: &LatticeBasis, u: &[Vec<i64>]) -> LatticeBasis {
    let k = b.dim();
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let cu: Vec<i64> = (0..k).map(|i| u[i][j]).collect();
            b.embed(&cu)
        })
        .collect();
    LatticeBasis::from_cols(&cols).expect("transformed basis stays unimodular")
}

/// Visit every nonzero integer vector in the box |c_i| <= r.
pub fn for_each_in_box(k: usize, r: i64, mut f: impl FnMut(&[i64])) {
    let mut c = vec![-r; k];
    'outer: loop {
        if c.iter().any(|&x| x != 0) {
            f(&c);
        }
        for i in 0..k {
            c[i] += 1;
            if c[i] <= r {
                continue 'outer;
            }
            c[i] = -r;
        }
        break;
    }
}

/// Brute-force shortest vector over the coordinate box, with the library's
/// tie-break order: smallest norm, then lexicographically smallest canonical
/// representative.
pub fn brute_shortest(b: &LatticeBasis, norm: NormKind, box_r: i64) -> (Vec<i64>, f64) {
    let mut best: Option<(f64, Vec<i64>)> = None;
    for_each_in_box(b.dim(), box_r, |c| {
        let mut c = c.to_vec();
        if let Some(&first) = c.iter().find(|&&x| x != 0) {
            if first < 0 {
                for x in c.iter_mut() {
                    *x = -*x;
                }
            }
        }
        let nv = norm.eval(&b.embed(&c));
        match &mut best {
            Some((bn, bc)) => {
                if nv < *bn || (nv == *bn && c < *bc) {
                    *bn = nv;
                    *bc = c;
                }
            }
            None => best = Some((nv, c)),
        }
    });
    let (n, c) = best.unwrap();
    (c, n)
}

/// Continued-fraction convergents (p_k, q_k) of alpha with q <= max_q.
pub fn convergents(alpha: f64, max_q: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0) = (1i64, 0i64);
    let (mut p1, mut q1) = (alpha.floor() as i64, 1i64);
    out.push((p1, q1));
    let mut x = alpha;
    for _ in 0..40 {
        let frac = x - x.floor();
        if frac < 1e-12 {
            break;
        }
        x = 1.0 / frac;
        let a = x.floor() as i64;
        let p2 = a * p1 + p0;
        let q2 = a * q1 + q0;
        if q2 > max_q || q2 <= 0 {
            break;
        }
        out.push((p2, q2));
        (p0, q0) = (p1, q1);
        (p1, q1) = (p2, q2);
    }
    out
}

/// Convergents of e - 2 = [0; 1, 2, 1, 1, 4, 1, 1, 6, ...] from the known
/// partial-quotient pattern (a_{3j-1} = 2j, all other a_i = 1).
pub fn convergents_of_e_minus_2(max_q: i64) -> Vec<(i64, i64)> {
    let mut quotients = vec![0i64];
    for i in 1..40 {
        quotients.push(if i % 3 == 2 { 2 * ((i / 3) as i64 + 1) } else { 1 });
    }
    let mut out = Vec::new();
    let (mut p0, mut q0) = (1i64, 0i64);
    let (mut p1, mut q1) = (quotients[0], 1i64);
    out.push((p1, q1));
    for &a in &quotients[1..] {
        let p2 = a * p1 + p0;
        let q2 = a * q1 + q0;
        if q2 > max_q {
            break;
        }
        out.push((p2, q2));
        (p0, q0) = (p1, q1);
        (p1, q1) = (p2, q2);
    }
    out
}
