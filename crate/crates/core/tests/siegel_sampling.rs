//! Statistical checks of the Haar sampler and the summation-formula Monte
//! Carlo at moderate sample counts. The full-size runs live in the acceptance
//! suite.

use cusplab_core::lattice::NormKind;
use cusplab_core::numeric::adaptive_quadrature;
use cusplab_core::siegel::{
    dl_check, siegel_mc, siegel_pair_mc, tail_distribution, LatticeSampler, SamplerSpec,
};

/// mu(y > Y) on the fundamental domain by direct 2-D quadrature of
/// (3/pi) dx dy / y^2 over {|x| <= 1/2, x^2 + y^2 >= 1, y > Y}.
fn y_tail_by_quadrature(y_cut: f64) -> f64 {
    let three_over_pi = 3.0 / std::f64::consts::PI;
    let inner = |x: f64| {
        let y_min = y_cut.max((1.0 - x * x).max(0.0).sqrt());
        // int_{y_min}^{inf} dy / y^2 done by quadrature out to a far cutoff
        // plus the exact tail of the integrand
        let y_far = 1e4;
        let main = adaptive_quadrature(|y: f64| y.powi(-2), y_min, y_far, 1e-10).unwrap();
        main + 1.0 / y_far
    };
    three_over_pi * adaptive_quadrature(inner, -0.5, 0.5, 1e-9).unwrap()
}

#[test]
fn exact2_y_marginal_matches_quadrature() {
    let spec = SamplerSpec::auto(2, 2024).unwrap();
    let mut sampler = LatticeSampler::new(spec).unwrap();
    let n = 40_000u64;
    let cuts = [1.5, 2.0, 3.0];
    let mut hits = [0u64; 3];
    for _ in 0..n {
        let f = sampler.sample_frame().unwrap();
        for (i, &c) in cuts.iter().enumerate() {
            if f.y > c {
                hits[i] += 1;
            }
        }
    }
    for (i, &c) in cuts.iter().enumerate() {
        let want = y_tail_by_quadrature(c);
        // closed form for y >= 1: (3/pi) / Y; the quadrature oracle must agree
        assert!((want - 3.0 / (std::f64::consts::PI * c)).abs() < 1e-6);
        let got = hits[i] as f64 / n as f64;
        let sigma = (want * (1.0 - want) / n as f64).sqrt();
        assert!(
            (got - want).abs() <= 3.0 * sigma,
            "y > {c}: got {got}, want {want}, sigma {sigma}"
        );
    }
}

#[test]
fn siegel_mc_small_radius() {
    // R = 0.01: mean within 3 sigma of (2R)^2 / zeta(2)
    let spec = SamplerSpec::auto(2, 31).unwrap();
    let est = siegel_mc(spec, 0.01, 200_000, 2).unwrap();
    let want = (0.02f64).powi(2) * 6.0 / std::f64::consts::PI.powi(2);
    assert!(
        (est.mean - want).abs() <= 3.0 * est.std_err.max(1e-7),
        "mean {} vs {want} (3se = {})",
        est.mean,
        3.0 * est.std_err
    );
}

#[test]
fn siegel_mc_scales_with_ball_volume() {
    // doubling R multiplies the k = 2 mean by 4 within confidence bounds
    let spec = SamplerSpec::auto(2, 77).unwrap();
    let a = siegel_mc(spec, 0.25, 60_000, 2).unwrap();
    let b = siegel_mc(SamplerSpec { seed: 78, ..spec }, 0.5, 60_000, 2).unwrap();
    let ratio = b.mean / a.mean;
    let rel = 3.0 * ((a.std_err / a.mean).hypot(b.std_err / b.mean));
    assert!(
        (ratio - 4.0).abs() <= 4.0 * rel + 0.05,
        "volume scaling ratio {ratio} (tol {rel})"
    );
}

#[test]
fn pair_counts_vanish_below_shortest() {
    let spec = SamplerSpec::auto(3, 5).unwrap();
    let est = siegel_pair_mc(spec, 0.05, 300, 1).unwrap();
    assert_eq!(est.mean, 0.0);
    assert_eq!(est.sampler, "surrogate");
}

#[test]
fn pair_mc_matches_zeta_product_loosely() {
    // k = 3, R = 0.6: within 25% of (2R)^6 / (zeta(3) zeta(2)) on the
    // surrogate sampler
    let spec = SamplerSpec::auto(3, 9).unwrap();
    let est = siegel_pair_mc(spec, 0.6, 40_000, 2).unwrap();
    let c32 = cusplab_core::siegel::pair_constant(3).unwrap();
    let want = (1.2f64).powi(6) * c32;
    assert!(
        (est.mean - want).abs() <= 0.25 * want,
        "pair mean {} vs {want} +- 25%",
        est.mean
    );
}

#[test]
fn ordered_pairs_count_four_per_sign_class() {
    // on Z^3 at R = 1 every unordered +-class pair that is primitive
    // contributes 4 ordered sign combinations
    use cusplab_core::lattice::{primitive_pairs_in_ball, LatticeBasis};
    let b = LatticeBasis::identity(3);
    let total = primitive_pairs_in_ball(&b, 1.0, NormKind::Sup).unwrap();
    assert_eq!(total % 4, 0);
}

#[test]
fn tail_estimate_is_monotone_with_ci() {
    let spec = SamplerSpec::auto(2, 55).unwrap();
    let grid: Vec<f64> = (0..9).map(|i| 0.25 * i as f64).collect();
    let est = tail_distribution(spec, &grid, 20_000, 2).unwrap();
    assert_eq!(est.phi_hat[0], 1.0, "delta >= 0 by the convex-body bound");
    for w in est.phi_hat.windows(2) {
        assert!(w[1] <= w[0]);
    }
    for (i, &p) in est.phi_hat.iter().enumerate() {
        assert!((0.0..=1.0).contains(&p));
        if est.scored[i] {
            assert!(p <= est.upper[i] + 3.0 * est.ci[i], "upper envelope broken at {i}");
        }
    }
    // dl ratio at delta = 0.5 is near e^{-1} for the k = 2 tail
    let (c_hat, pass) = dl_check(&est, 0.5).unwrap();
    assert!(pass);
    assert!((c_hat - (-1.0f64).exp()).abs() < 0.12, "c_hat = {c_hat}");
}

#[test]
fn results_are_stable_across_worker_counts() {
    // aggregation is commutative count-merging over independent streams, so
    // the estimate is statistically invariant in the worker count
    let spec = SamplerSpec::auto(2, 808).unwrap();
    let a = siegel_mc(spec, 0.5, 40_000, 1).unwrap();
    let b = siegel_mc(spec, 0.5, 40_000, 3).unwrap();
    let gap = (a.mean - b.mean).abs();
    let tol = 3.0 * a.std_err.hypot(b.std_err);
    assert!(gap <= tol, "worker counts disagree: {} vs {} (tol {tol})", a.mean, b.mean);
}

#[test]
fn worker_streams_are_decorrelated() {
    use cusplab_core::lattice::delta;
    let spec = SamplerSpec::auto(2, 123).unwrap();
    let mut a = LatticeSampler::for_worker(spec, 0).unwrap();
    let mut b = LatticeSampler::for_worker(spec, 1).unwrap();
    let n = 10_000;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        xs.push(delta(&a.sample().unwrap(), NormKind::Sup).unwrap());
        ys.push(delta(&b.sample().unwrap(), NormKind::Sup).unwrap());
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    let corr = cov / (vx * vy).sqrt();
    assert!(corr.abs() < 0.02, "worker streams correlate: {corr}");
}
