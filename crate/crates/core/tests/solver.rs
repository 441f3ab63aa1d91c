mod common;

use muskat::brkernels::{spectral_radius_probe, GeometryOperators};
use muskat::vorticity::{self, forcing, solve_dense, solve_vorticity, solve_with_operators};
use muskat::{MuskatError, PeriodicCurve, SpectralScalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

#[test]
fn iterate_matches_dense_lu() {
    let n = 64;
    let z = PeriodicCurve::from_fn(n, |_| 0.0, |x| 0.05 * x.sin()).unwrap();
    let h = PeriodicCurve::flat(n, -1.0).unwrap();
    let params = params_from_gammas(0.5, 0.3, 1.0);
    let ops = GeometryOperators::new(&z, &h).unwrap();
    let (f1, f2) = forcing(&z, &params).unwrap();
    let rep = solve_with_operators(&ops, &params, (&f1, &f2), 1e-12, 500, None).unwrap();
    let dense = solve_dense(&ops, &params, (&f1, &f2)).unwrap();
    let d1 = rep.solution.omega1.values().sub(dense.omega1.values()).unwrap().l2_norm();
    let d2 = rep.solution.omega2.values().sub(dense.omega2.values()).unwrap().l2_norm();
    assert!(d1.hypot(d2) < 1e-10);
    assert!(rep.residual <= 10.0 * 1e-12 * rep.forcing_norm);
}

#[test]
fn decoupled_system_returns_forcing() {
    let n = 32;
    let z = PeriodicCurve::from_fn(n, |_| 0.0, |x| 0.1 * x.sin()).unwrap();
    let h = PeriodicCurve::from_fn(n, |_| 0.0, |x| -1.0 + 0.2 * x.cos()).unwrap();
    let params = params_from_gammas(0.0, 0.0, 3.0);
    assert_eq!(params.big_n(), 3.0);
    let sol = solve_vorticity(&z, &h, &params, 1e-12, 500).unwrap();
    let expect = SpectralScalar::trig(n, &[(1, -0.3, 0.0)]).unwrap();
    assert!(max_abs_diff(sol.omega1.samples(), expect.samples()) < 1e-13);
    assert!(sol.omega2.values().max_abs() == 0.0);
}

#[test]
fn update_ratios_follow_the_spectral_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 48;
    for _ in 0..5 {
        let (zc, hc) = random_pair(&mut rng, n, 6);
        let (z, h) = (zc.build(n), hc.build(n));
        let params = random_gammas(&mut rng, 0.95);
        let ops = GeometryOperators::new(&z, &h).unwrap();
        let rho = spectral_radius_probe(&ops, &params, 100).radius;
        let (f1, f2) = forcing(&z, &params).unwrap();
        let rep = solve_with_operators(&ops, &params, (&f1, &f2), 1e-12, 500, None).unwrap();
        // averaged contraction after the transient sweeps
        let tail: Vec<f64> = rep.updates.iter().copied().skip(3).take_while(|u| *u > 1e-13).collect();
        if tail.len() > 4 {
            let rate = (tail[tail.len() - 1] / tail[0]).powf(1.0 / (tail.len() - 1) as f64);
            assert!(rate <= rho + 0.05, "rate {rate} vs rho {rho}");
        }
        assert!(rep.solution.omega1.values().mean().abs() < 1e-15);
        assert!(rep.solution.omega2.values().mean().abs() < 1e-15);
    }
}

#[test]
fn solution_is_linear_in_forcing() {
    let n = 32;
    let (zc, hc) = random_pair(&mut ChaCha8Rng::seed_from_u64(13), n, 5);
    let (z, h) = (zc.build(n), hc.build(n));
    let one = solve_vorticity(&z, &h, &params_from_gammas(0.4, -0.3, 1.0), 1e-13, 500).unwrap();
    let two = solve_vorticity(&z, &h, &params_from_gammas(0.4, -0.3, 2.0), 1e-13, 500).unwrap();
    let scale = one.omega1.values().max_abs();
    let d: Vec<f64> = one.omega1.samples().iter().map(|x| 2.0 * x).collect();
    assert!(max_abs_diff(&d, two.omega1.samples()) < 1e-11 * scale);
    let d: Vec<f64> = one.omega2.samples().iter().map(|x| 2.0 * x).collect();
    assert!(max_abs_diff(&d, two.omega2.samples()) < 1e-11 * scale);
}

#[test]
fn flat_geometry_gives_zero() {
    let n = 16;
    let sol = solve_vorticity(
        &PeriodicCurve::flat(n, 0.0).unwrap(),
        &PeriodicCurve::flat(n, -1.0).unwrap(),
        &params_from_gammas(0.6, 0.6, 1.0),
        1e-12,
        500,
    )
    .unwrap();
    assert_eq!(sol.omega1.values().max_abs(), 0.0);
    assert_eq!(sol.omega2.values().max_abs(), 0.0);
}

#[test]
fn too_few_iterations_is_no_convergence() {
    let n = 32;
    let z = PeriodicCurve::from_fn(n, |_| 0.0, |x| 0.2 * x.sin()).unwrap();
    let h = PeriodicCurve::flat(n, -0.8).unwrap();
    let res = solve_vorticity(&z, &h, &params_from_gammas(0.9, 0.9, 1.0), 1e-12, 3);
    assert!(matches!(res, Err(MuskatError::NoConvergence { iterations: 3, .. })));
}

#[test]
fn dense_mode_is_limited_in_size() {
    let n = 2 * vorticity::DENSE_MAX_N;
    let z = PeriodicCurve::from_fn(n, |_| 0.0, |x| 0.05 * x.sin()).unwrap();
    let h = PeriodicCurve::flat(n, -1.0).unwrap();
    let params = params_from_gammas(0.2, 0.2, 1.0);
    let ops = GeometryOperators::new(&z, &h).unwrap();
    let (f1, f2) = forcing(&z, &params).unwrap();
    assert!(matches!(solve_dense(&ops, &params, (&f1, &f2)), Err(MuskatError::InvalidParams(_))));
}
