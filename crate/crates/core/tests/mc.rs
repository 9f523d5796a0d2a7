use qbm_core::bath::FrequencyGrid;
use qbm_core::greens::max_step;
use qbm_core::mc::{
    discrete_bath_oracle, moments, noise_offset, sample_trajectories, synthesize_noise, ContinuumSampler, Discretization,
    Propagation,
};
use qbm_core::thermal::sigma_xx_matsubara;
use qbm_core::work::mean_work;
use qbm_core::{DiscreteBath, GreensSolutions, KernelTable, Protocol, Shape, SpectralDensity, TimeGrid};

fn drude_setup(horizon: f64) -> (SpectralDensity<f64>, GreensSolutions<f64>) {
    let sd = SpectralDensity::drude(0.5, 5.0, 1.0).unwrap();
    let gs = GreensSolutions::solve(&sd, 1.0, TimeGrid::with_horizon(max_step(&sd, 1.0), horizon).unwrap()).unwrap();
    (sd, gs)
}

#[test]
fn quantum_noise_covariance_matches_target() {
    let sd = SpectralDensity::<f64>::drude(0.5, 5.0, 1.0).unwrap();
    let (beta, hbar) = (2.0, 1.0);
    let grid = TimeGrid::new(0.005, 400).unwrap();
    let k = KernelTable::build(&sd, beta, hbar, grid, FrequencyGrid::for_bath(&sd, 1.0, beta, hbar, 64)).unwrap();
    let n = 10_000;
    let ens = synthesize_noise(&k, 400, n, 11).unwrap();
    let c = &ens.covariance;
    // away from zero lag the cell-averaged kernel is the point kernel to O(dt²)
    for lag in [40usize, 100, 200] {
        assert!((c[lag] - k.hbar_nu[lag]).abs() < 1e-3 * c[0], "lag {lag}: {} vs {}", c[lag], k.hbar_nu[lag]);
    }
    let i = 150;
    for lag in [0usize, 1, 5, 40, 200] {
        let est = ens.realizations.iter().map(|x| x[i] * x[i + lag]).sum::<f64>() / n as f64;
        let se = ((c[0] * c[0] + c[lag] * c[lag]) / n as f64).sqrt();
        assert!((est - c[lag]).abs() < 5.0 * se, "lag {lag}: {est} vs {} ± {se}", c[lag]);
    }
}

#[test]
fn undriven_paths_reach_equilibrium_variance() {
    // g has decayed to e^{−γ₀t} ≈ 2e-3 by the horizon
    let (sd, gs) = drude_setup(12.0);
    let (beta, hbar) = (2.0, 1.0);
    // the synthesizer reads only the bath, temperature and step from the table
    let short = TimeGrid::new(gs.grid.dt, 8).unwrap();
    let k = KernelTable::build(&sd, beta, hbar, short, FrequencyGrid::for_bath(&sd, 1.0, beta, hbar, 64)).unwrap();
    let len = noise_offset(&gs) + 201;
    let n = 2000;
    let ens = synthesize_noise(&k, len, n, 5).unwrap();
    let held = Protocol::new(Shape::Ramp, 0.0, 0.0, 1.0).unwrap();
    let paths = sample_trajectories(&ens, &held, &gs).unwrap();
    let (target, _) = sigma_xx_matsubara(&sd, beta, hbar, 1.0, 1e-12).unwrap();
    for t in [0, 100, 200] {
        let xs: Vec<f64> = paths.paths.iter().map(|p| p[t]).collect();
        let m = moments(&xs).unwrap();
        assert!(m.mean.abs() < 5.0 * m.stderr_mean);
        assert!((m.variance - target).abs() < 5.0 * m.stderr_variance, "t={t}: {} vs {target}", m.variance);
    }
}

#[test]
fn samples_do_not_depend_on_thread_count() {
    let (sd, gs) = drude_setup(20.0);
    let p = Protocol::new(Shape::Smoothstep, 0.0, 1.0, 2.0).unwrap();
    let sampler = ContinuumSampler::new(&sd, 1.0, 1.0, &p, &gs, 99).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| sampler.sample(257).samples)
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn work_samples_are_gaussian_about_the_mean() {
    let (sd, gs) = drude_setup(20.0);
    let p = Protocol::new(Shape::Smoothstep, 0.0, 1.0, 3.0).unwrap();
    let ws = ContinuumSampler::new(&sd, 1.0, 0.0, &p, &gs, 17).unwrap().sample(20_000);
    let m = moments(&ws.samples).unwrap();
    let exact = mean_work(&p, &gs).unwrap().value();
    assert!((m.mean - exact).abs() < 4.0 * ws.variance.sqrt() / (ws.samples.len() as f64).sqrt());
    assert!((m.variance - ws.variance).abs() < 4.0 * m.stderr_variance);
    assert!(m.skewness.abs() < 4.0 * m.stderr_skewness, "skewness {} ± {}", m.skewness, m.stderr_skewness);
}

#[test]
fn small_bath_recurs_and_large_bath_does_not() {
    let sd = SpectralDensity::<f64>::drude(0.5, 5.0, 1.0).unwrap();
    let disc = Discretization::Uniform { omega_max: 100.0 };
    let small = DiscreteBath::new(&sd, 1.0, 1.0, 20, disc).unwrap();
    let large = DiscreteBath::new(&sd, 1.0, 1.0, 200, disc).unwrap();
    assert!(small.recurrence_time < large.recurrence_time);
    // memory revives at the recurrence time of the small bath only (with the
    // sign flipped: midpoint modes are all in antiphase there)
    let t = small.recurrence_time;
    let g0 = sd.damping_kernel(0.0).unwrap();
    assert!(small.damping_kernel(t) < -0.5 * g0);
    assert!(large.damping_kernel(t).abs() < 0.05 * g0);
    assert!(sd.damping_kernel(t).unwrap() < 5e-3 * g0);
    let p = Protocol::new(Shape::Smoothstep, 0.0, 1.0, 5.0).unwrap();
    let horizon = 0.5 * large.recurrence_time;
    assert!(discrete_bath_oracle(&small, &p, 4, 0, horizon, Propagation::Exact).unwrap().recurrence_warning);
    assert!(!discrete_bath_oracle(&large, &p, 4, 0, horizon, Propagation::Exact).unwrap().recurrence_warning);
}

#[test]
fn large_bath_matches_continuum_mean() {
    let (sd, gs) = drude_setup(30.0);
    let p = Protocol::new(Shape::Smoothstep, 0.0, 1.0, 5.0).unwrap();
    let db = DiscreteBath::new(&sd, 1.0, 2.0, 200, Discretization::Tangent).unwrap();
    let run = discrete_bath_oracle(&db, &p, 10_000, 3, 5.0, Propagation::Exact).unwrap();
    let cont = mean_work(&p, &gs).unwrap().value();
    assert!((run.mean - cont).abs() < 1e-6 * cont.abs(), "{} vs {cont}", run.mean);
    let m = moments(&run.samples).unwrap();
    assert!((m.mean - run.mean).abs() < 4.0 * m.stderr_mean);
    assert!((m.variance - run.variance).abs() < 4.0 * m.stderr_variance);
}
