//! Exactness of the enumeration kernels against brute-force oracles, and the
//! unimodular-invariance properties of basis reduction.

mod common;

use common::*;
use cusplab_core::dani::PsiFunction;
use rand::Rng;
use cusplab_core::dio::{lattice_psi_approx_witnesses, ma_witnesses, psi_approx_witnesses};
use cusplab_core::lattice::{
    delta, primitive_vectors_in_ball, reduce_basis, shortest_vector, vectors_in_ball, NormKind,
};
use cusplab_core::mat::Mat;
use cusplab_core::rng::stream;
use cusplab_core::snf::gcd_slice;

#[test]
fn shortest_vector_matches_brute_force_on_reduced_bases() {
    let mut rng = stream(101, 0);
    for trial in 0..150 {
        let k = 2 + trial % 3;
        let b = random_unimodular(&mut rng, k);
        let red = reduce_basis(&b).unwrap();
        for norm in [NormKind::Sup, NormKind::Euclidean] {
            let sv = shortest_vector(&red, norm).unwrap();
            let (bc, bn) = brute_shortest(&red, norm, 10);
            assert_eq!(sv.norm_value, bn, "trial {trial} k {k} {norm:?}");
            assert_eq!(sv.coords, bc, "trial {trial} k {k} {norm:?}");
        }
    }
}

#[test]
fn delta_invariant_under_unimodular_transform() {
    let mut rng = stream(202, 0);
    for trial in 0..100 {
        let k = 2 + trial % 3;
        let b = random_unimodular(&mut rng, k);
        let u = random_unimodular_int(&mut rng, k);
        let bu = apply_int_transform(&b, &u);
        let d1 = delta(&b, NormKind::Sup).unwrap();
        let d2 = delta(&bu, NormKind::Sup).unwrap();
        assert!((d1 - d2).abs() < 1e-9, "trial {trial}: {d1} vs {d2}");
    }
}

#[test]
fn shortest_vector_invariant_under_reduction() {
    let mut rng = stream(303, 0);
    for _ in 0..100 {
        let k = rng.gen_range(2..=4usize);
        let b = random_unimodular(&mut rng, k);
        let red = reduce_basis(&b).unwrap();
        let n1 = shortest_vector(&b, NormKind::Sup).unwrap().norm_value;
        let n2 = shortest_vector(&red, NormKind::Sup).unwrap().norm_value;
        assert!((n1 - n2).abs() <= 1e-12 * (1.0 + n1));
    }
}

#[test]
fn delta_nonnegative_for_sup_norm() {
    let mut rng = stream(404, 0);
    for _ in 0..200 {
        let b = random_unimodular(&mut rng, 2);
        assert!(delta(&b, NormKind::Sup).unwrap() >= -1e-12);
    }
    for _ in 0..50 {
        let b = random_unimodular(&mut rng, 4);
        assert!(delta(&b, NormKind::Sup).unwrap() >= -1e-12);
    }
}

#[test]
fn ball_enumeration_matches_brute_force() {
    let mut rng = stream(505, 0);
    for trial in 0..60 {
        let k = 2 + trial % 2;
        let b = reduce_basis(&random_unimodular(&mut rng, k)).unwrap();
        let radius = 2.5;
        let got = vectors_in_ball(&b, radius, NormKind::Sup).unwrap();
        let mut want: Vec<Vec<i64>> = Vec::new();
        for_each_in_box(k, 12, |c| {
            if NormKind::Sup.eval(&b.embed(c)) <= radius {
                want.push(c.to_vec());
            }
        });
        let mut got_coords: Vec<Vec<i64>> = got.iter().map(|v| v.coords.clone()).collect();
        got_coords.sort();
        want.sort();
        assert_eq!(got_coords, want, "trial {trial}");

        let prim = primitive_vectors_in_ball(&b, radius, NormKind::Sup).unwrap();
        let want_prim: Vec<&Vec<i64>> =
            want.iter().filter(|c| gcd_slice(c) == 1).collect();
        assert_eq!(prim.len(), want_prim.len());
        for v in &prim {
            assert_eq!(gcd_slice(&v.coords), 1);
            assert!(prim.iter().any(|w| {
                w.coords.iter().zip(&v.coords).all(|(a, b)| *a == -*b)
            }));
        }
    }
}

#[test]
fn lattice_witnesses_match_brute_force() {
    let mut rng = stream(606, 0);
    let psi = PsiFunction::eps_over_x(0.8).unwrap();
    for trial in 0..60 {
        let b = reduce_basis(&random_unimodular(&mut rng, 2)).unwrap();
        let r_max = 4.0;
        let got = lattice_psi_approx_witnesses(&b, &psi, 1, 1, r_max).unwrap();
        let mut want: Vec<Vec<i64>> = Vec::new();
        for_each_in_box(2, 20, |c| {
            let v = b.embed(c);
            let tail = v[1].abs();
            if tail <= r_max && tail >= psi.x0() {
                if v[0].abs() <= psi.eval(tail).unwrap() {
                    want.push(c.to_vec());
                }
            }
        });
        let mut got_coords: Vec<Vec<i64>> = got.iter().map(|w| w.v.coords.clone()).collect();
        got_coords.sort();
        want.sort();
        assert_eq!(got_coords, want, "trial {trial}");
    }
}

#[test]
fn ma_witnesses_match_brute_force() {
    let mut rng = stream(707, 0);
    let psi = PsiFunction::power_log(0.9, 1.0, 0.0, 1.0).unwrap();
    for trial in 0..60 {
        let k = 2 + trial % 2;
        let b = reduce_basis(&random_unimodular(&mut rng, k)).unwrap();
        let r_max = if k == 2 { 5.0 } else { 2.5 };
        let got = ma_witnesses(&b, &psi, r_max).unwrap();
        let mut want: Vec<Vec<i64>> = Vec::new();
        for_each_in_box(k, 20, |c| {
            let v = b.embed(c);
            let nv = NormKind::Sup.eval(&v);
            if nv <= r_max && nv >= psi.x0() {
                let prod = v.iter().fold(1.0, |acc, &x| acc * x.abs());
                if prod <= nv * psi.eval(nv).unwrap() {
                    want.push(c.to_vec());
                }
            }
        });
        let mut got_coords: Vec<Vec<i64>> = got.iter().map(|w| w.v.coords.clone()).collect();
        got_coords.sort();
        want.sort();
        assert_eq!(got_coords, want, "trial {trial} k {k}");
    }
}

#[test]
fn hyperbolic_band_counter_matches_enumeration_on_random_bases() {
    // the closed-form-band counter for dim 2 against the streaming enumerator,
    // on the log-power family the threshold experiment actually uses
    use cusplab_core::dio::{count_ma_witnesses, count_ma_witnesses_2d};
    let mut rng = stream(909, 0);
    for &q in &[0.5, 2.0] {
        let psi = PsiFunction::power_log(1.0, 1.0, q, 2.0).unwrap();
        for trial in 0..20 {
            let b = reduce_basis(&random_unimodular(&mut rng, 2)).unwrap();
            for &r_max in &[10.0, 30.0] {
                let slow = count_ma_witnesses(&b, &psi, r_max).unwrap();
                let fast = count_ma_witnesses_2d(&b, &psi, r_max).unwrap();
                assert_eq!(slow, fast, "q = {q}, trial {trial}, r = {r_max}");
            }
        }
    }
}

#[test]
fn golden_ratio_has_no_third_order_witnesses() {
    // |q(q alpha + p)| stays above 1/sqrt(5) - o(1) > 1/3 for the golden ratio
    let alpha = (5f64.sqrt() - 1.0) / 2.0;
    let q_max = 100_000.0;
    let psi = PsiFunction::power_log(1.0 / 3.0, 1.0, 0.0, 1.0).unwrap();
    let a = Mat::from_row_major(1, 1, vec![alpha]).unwrap();
    let ws = psi_approx_witnesses(&a, &psi, q_max).unwrap();
    assert!(ws.is_empty(), "golden ratio produced {} witnesses", ws.len());

    // oracle side: the best approximations are the convergents, and
    // q |q alpha - p| > 1/3 along all of them; small q checked directly
    for (p, q) in convergents(alpha, q_max as i64) {
        if q == 0 {
            continue;
        }
        let err = q as f64 * (q as f64 * alpha - p as f64).abs();
        assert!(err > 1.0 / 3.0, "convergent {p}/{q} has q||q alpha|| = {err}");
    }
    for q in 1..=2000i64 {
        let qa = q as f64 * alpha;
        let err = q as f64 * (qa - qa.round()).abs();
        assert!(err > 1.0 / 3.0, "q = {q}: {err}");
    }
}

#[test]
fn e_minus_two_has_fifth_order_witnesses() {
    // e's partial quotients are unbounded, so q ||q alpha|| dips below 1/5
    let alpha = std::f64::consts::E - 2.0;
    let q_max = 100_000.0;
    let psi = PsiFunction::power_log(0.2, 1.0, 0.0, 1.0).unwrap();
    let a = Mat::from_row_major(1, 1, vec![alpha]).unwrap();
    let ws = psi_approx_witnesses(&a, &psi, q_max).unwrap();
    assert!(!ws.is_empty(), "expected witnesses for e - 2");

    // oracle: some convergent (from the known quotient pattern) dips below 1/5
    let good = convergents_of_e_minus_2(q_max as i64).into_iter().any(|(p, q)| {
        q > 0 && (q as f64) * ((q as f64) * alpha - p as f64).abs() <= 0.2
    });
    assert!(good, "no convergent of e - 2 below 1/5 up to 1e5");
    // and every witness the enumeration returned is genuinely that good
    for w in &ws {
        let q = w.q[0].abs() as f64;
        assert!(q * w.error_norm <= 0.2 + 1e-12);
    }
}

#[test]
fn reduction_recovers_integer_transform() {
    let mut rng = stream(808, 0);
    for _ in 0..100 {
        let k = rng.gen_range(2..=4usize);
        let b = random_unimodular(&mut rng, k);
        let red = reduce_basis(&b).unwrap();
        let u = b.matrix().inverse().unwrap().matmul(red.matrix());
        let mut det_int = Mat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                let v = u.get(i, j);
                assert!(
                    (v - v.round()).abs() < 1e-6,
                    "transform entry {v} is not integral"
                );
                det_int.set(i, j, v.round());
            }
        }
        assert!((det_int.det().abs() - 1.0).abs() < 1e-6);
    }
}
