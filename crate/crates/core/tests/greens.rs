use qbm_core::greens::{bromwich_g, markovian_closed_form, max_step};
use qbm_core::{GreensSolutions, SpectralDensity, TimeGrid};

fn solve(g0: f64, lambda: f64, horizon: f64) -> (SpectralDensity<f64>, GreensSolutions<f64>) {
    let sd = SpectralDensity::drude(g0, lambda, 1.0).unwrap();
    let dt = max_step(&sd, 1.0);
    let grid = TimeGrid::with_horizon(dt, horizon).unwrap();
    let gs = GreensSolutions::solve(&sd, 1.0, grid).unwrap();
    (sd, gs)
}

#[test]
fn initial_conditions() {
    let (_, gs) = solve(0.5, 5.0, 2.0);
    assert_eq!(gs.h[0], 1.0);
    assert_eq!(gs.hdot[0], 0.0);
    assert_eq!(gs.g[0], 0.0);
    assert!((gs.gdot[0] - 1.0 / gs.mass).abs() < 1e-15);
}

#[test]
fn identities_and_equation_residual() {
    for &g0 in &[0.1, 1.0, 5.0] {
        let (sd, gs) = solve(g0, 4.0, 10.0);
        let (r1, r2) = gs.identity_residuals(&sd).unwrap();
        let r3 = gs.equation_residual(&sd).unwrap();
        println!("γ₀={g0}: {r1:e} {r2:e} {r3:e}");
        assert!(r1 < 1e-6 && r2 < 1e-6 && r3 < 1e-6, "γ₀={g0}: {r1:e} {r2:e} {r3:e}");
    }
}

#[test]
fn bromwich_agrees_with_volterra() {
    for &g0 in &[0.1, 1.0, 5.0] {
        let (sd, gs) = solve(g0, 5.0, 50.0);
        let b = bromwich_g(&sd, 1.0, gs.grid.dt, gs.grid.len).unwrap();
        let err = gs.g.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("γ₀={g0}: sup |Δg| = {err:e}");
        assert!(err < 1e-5, "γ₀={g0}: {err:e}");
    }
}

#[test]
fn ohmic_routes_to_closed_form() {
    let sd = SpectralDensity::ohmic(0.4, 2.0).unwrap();
    let grid = TimeGrid::new(0.1, 50).unwrap();
    let gs = GreensSolutions::solve(&sd, 1.5, grid).unwrap();
    for k in 0..50 {
        let p = markovian_closed_form(0.4, 2.0, 1.5, grid.t(k));
        assert_eq!(gs.g[k], p.g);
    }
    let (r1, r2) = gs.identity_residuals(&sd).unwrap();
    assert!(r1 < 1e-14 && r2 < 1e-14);
}

#[test]
fn dissipative_decay() {
    let (_, gs) = solve(0.5, 5.0, 60.0);
    let gmax = gs.g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(gs.g.last().unwrap().abs() < 1e-3 * gmax);
}

#[test]
fn rejects_coarse_grid() {
    let sd = SpectralDensity::drude(0.5, 5.0, 1.0).unwrap();
    assert!(GreensSolutions::solve(&sd, 1.0, TimeGrid::new(0.1, 100).unwrap()).is_err());
}
