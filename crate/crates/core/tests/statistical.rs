//! Monte Carlo checks of expectation bounds and closed-form diagnostics.

mod common;

use common::{mean_se, uniform_points};
use nystrom_quad::lowrank::LandmarkBasis;
use nystrom_quad::quadrature::{c_k_mu, kquad, mean_sqrt_residual, mmd_discrete, wce_exact, wce_sq_exact};
use nystrom_quad::{Kernel, LowRankKernel, PointSet, Quadrature, DEFAULT_RTOL};

/// Per-sample values of `k(x,x) - k_app(x,x)` (unclamped) on a fresh uniform sample.
fn residuals(lrk: &LowRankKernel, m: usize, seed: u64) -> Vec<f64> {
    lrk.residual_diag_raw_batch(&uniform_points(m, lrk.kernel().dim(), seed, 77)).unwrap()
}

#[test]
fn exact_mean_residual_agrees_with_monte_carlo() {
    let k = Kernel::korobov(1).unwrap();
    let z = uniform_points(8, 1, 1, 0);
    let basis = LandmarkBasis::new(&k, &z, DEFAULT_RTOL).unwrap();
    let exact = basis.mu_residual_exact().unwrap();
    let (mean, se) = mean_se(&residuals(&basis.nystrom(), 100_000, 2));
    assert!((exact - mean).abs() <= 3.0 * se, "exact {exact}, Monte Carlo {mean} ± {se}");
}

#[test]
fn single_landmark_residual_agrees_with_monte_carlo() {
    let k = Kernel::korobov(2).unwrap();
    let z = PointSet::from_scalars(&[0.37]);
    let basis = LandmarkBasis::new(&k, &z, DEFAULT_RTOL).unwrap();
    let exact = basis.mu_residual_exact().unwrap();
    let h = k.squared_kernel().unwrap();
    let closed = k.trace().unwrap() - h.eval(&[0.37], &[0.37]).unwrap() / k.eval(&[0.37], &[0.37]).unwrap();
    assert!((exact - closed).abs() < 1e-12);
    let (mean, se) = mean_se(&residuals(&basis.nystrom(), 1_000_000, 3));
    assert!((exact - mean).abs() <= 3.0 * se, "exact {exact}, Monte Carlo {mean} ± {se}");
}

#[test]
fn iid_landmark_bound_is_never_violated() {
    let k = Kernel::korobov(1).unwrap();
    let (l, s) = (100, 3);
    let bound = k.bound_wce_iid(l, s, s).unwrap();
    let estimates: Vec<f64> = (0..100)
        .map(|seed| {
            let z = uniform_points(l, 1, seed, 10);
            let lrk = LandmarkBasis::new(&k, &z, DEFAULT_RTOL).unwrap().nystrom_svd(s).unwrap();
            residuals(&lrk, 2_000, 1_000 + seed).iter().map(|v| v.max(0.0).sqrt()).sum::<f64>() / 2_000.0
        })
        .collect();
    let (mean, _) = mean_se(&estimates);
    assert!(mean <= bound, "{mean} > {bound}");
}

/// Expected worst-case error of KQuad with sample-dependent approximations,
/// against the sum of its three bounding terms, plus the per-run chain
/// `wce(Q) <= 2 mu_Y(sqrt(k - k_app)) + wce(mu_Y)`.
#[test]
fn kquad_expected_error_bound() {
    let k = Kernel::korobov(1).unwrap();
    let (l, s, big_n, draws) = (32, 7, 1024, 200);
    let z = uniform_points(l, 1, 5, 0);
    let basis = LandmarkBasis::new(&k, &z, DEFAULT_RTOL).unwrap();
    let sqrt_res: Vec<f64> = residuals(&basis.nystrom(), 100_000, 6).iter().map(|v| v.max(0.0).sqrt()).collect();
    let (proxy, proxy_se) = mean_se(&sqrt_res);
    let fixed = 2.0 * k.spectral_tail(s).unwrap().sqrt() + (c_k_mu(&k).unwrap() / big_n as f64).sqrt();

    let mut empirical = Vec::new();
    let mut mercer = Vec::new();
    let lrk_mu = basis.mercer_mu(s).unwrap();
    for draw in 0..draws {
        let y = uniform_points(big_n, 1, 7, draw);
        let target_error = wce_exact(&Quadrature::uniform(y.clone()), &k).unwrap();
        let lrk_y = basis.mercer_empirical(&y, s).unwrap();
        for (lrk, sink) in [(&lrk_y, &mut empirical), (&lrk_mu, &mut mercer)] {
            let q = kquad(lrk, &y, true).unwrap();
            let wce = wce_exact(&q, &k).unwrap();
            let chain = 2.0 * mean_sqrt_residual(lrk, &y).unwrap() + target_error;
            assert!(wce <= chain + 1e-6, "draw {draw}: {wce} > {chain}");
            sink.push(wce);
        }
    }
    for (name, values) in [("empirical", &empirical), ("mercer", &mercer)] {
        let (mean, se) = mean_se(values);
        let combined = (se * se + 4.0 * proxy_se * proxy_se).sqrt();
        let bound = 2.0 * proxy + fixed + 3.0 * combined;
        assert!(mean <= bound, "{name}: mean wce {mean} > {bound}");
    }
}

/// `wce(Q)² = MMD(Q, ν)² + wce(ν)² + 2⟨Q - ν, ν - μ⟩`, and the cross term is
/// bounded by Cauchy–Schwarz, for a large i.i.d. reference measure ν.
#[test]
fn exact_and_empirical_error_paths_agree() {
    let k = Kernel::korobov(1).unwrap();
    let y = uniform_points(256, 1, 8, 0);
    let z = uniform_points(40, 1, 8, 1);
    let lrk = LandmarkBasis::new(&k, &z, DEFAULT_RTOL).unwrap().nystrom_svd(9).unwrap();
    let q = kquad(&lrk, &y, true).unwrap();
    let reference = Quadrature::uniform(uniform_points(100_000, 1, 8, 2));
    let wce_sq = wce_sq_exact(&q, &k).unwrap();
    let mmd = mmd_discrete(&q, &reference, &k).unwrap();
    let ref_sq = wce_sq_exact(&reference, &k).unwrap();
    let gap = (wce_sq - mmd * mmd - ref_sq).abs();
    assert!(gap <= 2.0 * mmd * ref_sq.sqrt() + 1e-9, "gap {gap}, mmd {mmd}, reference wce² {ref_sq}");
    // the reference error itself is of Monte Carlo size c_k_mu / M
    assert!(ref_sq < 10.0 * c_k_mu(&k).unwrap() / 100_000.0);
}
