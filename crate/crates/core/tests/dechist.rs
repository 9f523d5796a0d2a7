use proptest::prelude::*;
use qbm_core::bath::FrequencyGrid;
use qbm_core::dechist::{
    decoherence_exponent, gaussian_window_exponents, noise_matrix, noise_strength, partition_sum, report_from_strength,
    resolvability_report, scalar_offdiag_exponent, ResolvabilityFlag,
};
use qbm_core::{HistoryPair, KernelTable, SpectralDensity, TimeGrid};

/// `c ρ^{|j−k|}`: a sampled exponential kernel, whose inverse is tridiagonal
/// with non-positive off-diagonals.
fn exponential_matrix(n: usize, c: f64, rho: f64) -> Vec<f64> {
    (0..n * n).map(|i| c * rho.powi((i / n).abs_diff(i % n) as i32)).collect()
}

fn offdiag(nu: &[f64], u: &[f64], sigma: &[f64]) -> f64 {
    gaussian_window_exponents(nu, &vec![0.0; u.len()], u, sigma).unwrap().offdiag_exponent
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn suppression_grows_with_separation(
        n in 1usize..10,
        c in 0.01f64..50.0,
        rho in 0.0f64..0.95,
        sigma in 0.05f64..3.0,
        seed in proptest::collection::vec(0.0f64..2.0, 10),
        bump in 0.0f64..1.5,
        at in 0usize..10,
    ) {
        let nu = exponential_matrix(n, c, rho);
        let s = vec![sigma; n];
        let u: Vec<f64> = seed[..n].to_vec();
        let mut wider = u.clone();
        wider[at % n] += bump;
        let (a, b) = (offdiag(&nu, &u, &s), offdiag(&nu, &wider, &s));
        prop_assert!(a <= 0.0);
        prop_assert!(b <= a + 1e-12 * a.abs().max(1.0), "{} then {}", a, b);
    }

    #[test]
    fn finer_resolution_weakens_suppression(
        c in 0.01f64..50.0,
        sigma in 0.05f64..3.0,
        factor in 1.0f64..10.0,
        u in 0.01f64..5.0,
    ) {
        let coarse = scalar_offdiag_exponent(c, sigma, u);
        let fine = scalar_offdiag_exponent(c, sigma * factor, u);
        prop_assert!(fine >= coarse);
        prop_assert!(coarse >= -0.5 * c * u * u - 1e-12);
    }

    #[test]
    fn noise_strength_rises_with_temperature(t1 in 0.05f64..5.0, ratio in 1.05f64..4.0) {
        let sd = SpectralDensity::<f64>::drude(0.5, 5.0, 1.0).unwrap();
        let cold = noise_strength(&sd, 1.0, 1.0 / t1, 1.0).unwrap();
        let hot = noise_strength(&sd, 1.0, 1.0 / (t1 * ratio), 1.0).unwrap();
        prop_assert!(hot > cold);
    }
}

#[test]
fn threshold_separation_falls_with_temperature() {
    let sd = SpectralDensity::<f64>::drude(0.5, 5.0, 1.0).unwrap();
    let temps: Vec<f64> = (0..12).map(|k| 0.05 * 1.8f64.powi(k)).collect();
    let us: Vec<f64> = temps
        .iter()
        .map(|&t| report_from_strength(noise_strength(&sd, 1.0, 1.0 / t, 1.0).unwrap(), 0.2).min_separation)
        .collect();
    assert!(us.windows(2).all(|w| w[1] < w[0]), "{us:?}");
    // u* → √2σ once the bath resolves the histories completely
    assert!(us.last().unwrap() - 2f64.sqrt() * 0.2 < 0.05);
}

#[test]
fn separation_of_five_thresholds_is_suppressed() {
    for (nu0, sigma) in [(0.01f64, 0.1), (1.0, 1.0), (300.0, 0.02)] {
        let u = report_from_strength(nu0, sigma).min_separation;
        assert!(scalar_offdiag_exponent(nu0, sigma, 5.0 * u) <= -10.0);
        assert!((scalar_offdiag_exponent(nu0, sigma, u) + 0.5).abs() < 1e-12);
    }
}

#[test]
fn flags_follow_resolution() {
    let sd = SpectralDensity::<f64>::drude(0.5, 5.0, 1.0).unwrap();
    let grid = TimeGrid::new(0.005, 64).unwrap();
    let k = KernelTable::build(&sd, 1.0, 1.0, grid, FrequencyGrid::for_bath(&sd, 1.0, 1.0, 1.0, 64)).unwrap();
    let r = resolvability_report(&k, 1.0, 1.0).unwrap();
    let coarse = resolvability_report(&k, 1.0, 2.0 * r.recommended_sigma).unwrap();
    let fine = resolvability_report(&k, 1.0, 0.05 * r.recommended_sigma).unwrap();
    assert_eq!(coarse.flag, ResolvabilityFlag::TrajectoriesValid);
    assert_eq!(fine.flag, ResolvabilityFlag::QuantumDominated);
}

#[test]
fn history_exponent_uses_binned_noise() {
    let sd = SpectralDensity::<f64>::drude(0.5, 5.0, 1.0).unwrap();
    let (beta, hbar, dt) = (1.0, 1.0, 0.005);
    let k = KernelTable::build(&sd, beta, hbar, TimeGrid::new(dt, 8).unwrap(), FrequencyGrid::for_bath(&sd, 1.0, beta, hbar, 64)).unwrap();
    let nu = noise_matrix(&k, 8);
    for (i, v) in nu.iter().enumerate() {
        let expect = dt * dt * k.hbar_nu[(i / 8).abs_diff(i % 8)] / (hbar * hbar);
        assert!((v - expect).abs() < 1e-15 * expect);
    }
    let u: Vec<f64> = (0..8).map(|j| 0.1 * j as f64).collect();
    let hp = HistoryPair::new(vec![0.0; 8], u.clone(), vec![0.3; 8]).unwrap();
    let e = decoherence_exponent(&hp, &k, 1.0, None).unwrap();
    let direct = gaussian_window_exponents(&nu, &[0.0; 8], &u, &[0.3; 8]).unwrap();
    assert_eq!(e.diag_exponent, 0.0);
    assert!((e.offdiag_exponent - direct.offdiag_exponent).abs() < 1e-15);
    assert!(decoherence_exponent(&hp, &KernelTable { hbar: 0.0, ..k }, 1.0, None).is_err());
}

#[test]
fn window_overlap_matches_poisson_summation() {
    // Σ_k windows = 1 + 2Σ_m exp(−2π²m² s²/σ²), s² = var + σ²
    for (var, sigma) in [(0.0f64, 1.0), (0.1, 1.0), (0.02, 0.5)] {
        let s2: f64 = var + sigma * sigma;
        let pi2 = std::f64::consts::PI.powi(2);
        let expect = 1.0 + 2.0 * (1..4).map(|m| (-2.0 * pi2 * (m * m) as f64 * s2 / (sigma * sigma)).exp()).sum::<f64>();
        assert!((partition_sum(var, sigma) - expect).abs() < 1e-14, "{var} {sigma}");
    }
}
