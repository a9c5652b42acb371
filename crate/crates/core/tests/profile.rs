use std::f64::consts::PI;

use kslab_core::constants::stationary_second_moment;
use kslab_core::field::Field2D;
use kslab_core::functionals::{rescaled_dissipation, rescaled_energy};
use kslab_core::grid::make_grid;
use kslab_core::potential::log_kernel_convolve;
use kslab_core::profile::{d_profile_dm, envelope_check, solve_profile, ProfileOptions};
use kslab_core::radial::{radial_to_2d, RadialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const M: f64 = 4.0 * PI;

fn tight() -> ProfileOptions {
    ProfileOptions {
        tol: 1e-12,
        ..ProfileOptions::default()
    }
}

#[test]
fn second_moment_balances_the_moment_equation() {
    let p = solve_profile(M, &RadialGrid::for_mass(M), ProfileOptions::default()).unwrap();
    let want = stationary_second_moment(M);
    assert!((want - 4.0 * PI).abs() < 1e-12);
    assert!((p.m2 - want).abs() < 1e-3 * want, "{} vs {want}", p.m2);
    assert!((p.g.integrate() - M).abs() < 1e-10 * M);
    assert!(p.g.values().iter().all(|v| *v > 0.0));
    assert!(p.residual_l1 < 1e-10);
}

#[test]
fn profile_has_no_rescaled_dissipation() {
    let p = solve_profile(M, &RadialGrid::for_mass(M), tight()).unwrap();
    let d = p.rescaled_dissipation();
    assert!((0.0..=1e-8 * M).contains(&d), "D_E = {d:e}");
}

#[test]
fn profile_minimizes_the_rescaled_energy() {
    let p = solve_profile(M, &RadialGrid::for_mass(M), tight()).unwrap();
    let grid = make_grid(128, 8.0).unwrap();
    let g = radial_to_2d(&p.g, grid).unwrap();
    let pot = log_kernel_convolve(&g).unwrap();
    let e0 = rescaled_energy(&g, &pot).unwrap();
    assert!(rescaled_dissipation(&g, &pot).unwrap() <= 1e-6 * M);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        // g = G (1 + ε φ), renormalized to mass M
        let eps = rng.gen_range(0.02..0.2);
        let modes: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.2..1.5)))
            .collect();
        let phi = |x: f64, y: f64| -> f64 {
            modes
                .iter()
                .map(|(a, b, k)| a * (k * x).cos() * (k * y + b).sin())
                .sum::<f64>()
                / modes.len() as f64
        };
        let pts: Vec<(f64, f64)> = grid.points().collect();
        let vals: Vec<f64> = g
            .values()
            .iter()
            .zip(&pts)
            .map(|(v, (x, y))| v * (1.0 + eps * phi(*x, *y)))
            .collect();
        let mut h = Field2D::from_values(grid, vals).unwrap();
        let mass = h.integrate();
        h.scale(M / mass);
        let e = rescaled_energy(&h, &log_kernel_convolve(&h).unwrap()).unwrap();
        assert!(e > e0, "E(perturbed) = {e} <= E(G) = {e0}");
    }
}

#[test]
fn envelope_holds() {
    let p = solve_profile(M, &RadialGrid::for_mass(M), ProfileOptions::default()).unwrap();
    let env = envelope_check(&p, 0.2).unwrap();
    assert!(env.pass && env.c1.is_finite() && env.c2.is_finite());
    let small = solve_profile(1e-3, &RadialGrid::for_mass(1e-3), ProfileOptions::default()).unwrap();
    let env = envelope_check(&small, 0.1).unwrap();
    assert!(env.pass);
    assert!((env.c2 - (1e-3 / (2.0 * PI)).ln()).abs() < 1e-2);
}

#[test]
fn mass_derivative() {
    let rg = RadialGrid::vertex(1024, RadialGrid::default_r_max(M)).unwrap();
    let h = d_profile_dm(M, 1e-2, &rg, 1e-13).unwrap();
    assert!((h.integrate() - 1.0).abs() < 1e-6);
    // second-order differences: halving dM shrinks the change about 4×
    let h2 = d_profile_dm(M, 5e-3, &rg, 1e-13).unwrap();
    let h4 = d_profile_dm(M, 2.5e-3, &rg, 1e-13).unwrap();
    let change = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    let c1 = change(h.values(), h2.values());
    let c2 = change(h2.values(), h4.values());
    assert!(c1 / c2 > 3.5 && c1 / c2 < 4.5, "{c1:e} / {c2:e}");

    let m = 1e-3;
    let rg = RadialGrid::vertex(1024, 10.0).unwrap();
    let h = d_profile_dm(m, 1e-4, &rg, 1e-15).unwrap();
    let err = rg
        .nodes()
        .iter()
        .zip(h.values())
        .map(|(r, v)| (v - (-0.5 * r * r).exp() / (2.0 * PI)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-3 / (2.0 * PI), "{err:e}");
}

#[test]
fn stationary_residual_converges() {
    let mut prev = f64::NAN;
    for n in [256, 512, 1024] {
        let rg = RadialGrid::vertex(n, RadialGrid::default_r_max(M)).unwrap();
        let p = solve_profile(M, &rg, ProfileOptions::default()).unwrap();
        if prev.is_finite() {
            assert!(prev / p.stationary_residual >= 4.0, "{prev:e} -> {:e}", p.stationary_residual);
        }
        prev = p.stationary_residual;
    }
}

#[test]
fn centre_value_grows_with_mass() {
    let mut last = 0.0;
    for m in [0.5, 1.0, 2.0 * PI, M, 6.0 * PI, 7.0 * PI] {
        let p = solve_profile(m, &RadialGrid::for_mass(m), ProfileOptions::default()).unwrap();
        assert!(p.center_value() > last, "G(0) not increasing at M = {m}");
        last = p.center_value();
    }
}

#[test]
fn damping_does_not_change_the_fixed_point() {
    let rg = RadialGrid::vertex(512, 14.0).unwrap();
    let a = solve_profile(M, &rg, tight()).unwrap();
    let b = solve_profile(M, &rg, ProfileOptions { omega: 0.8, ..tight() }).unwrap();
    let diff: f64 = rg
        .weights()
        .iter()
        .zip(a.g.values().iter().zip(b.g.values()))
        .map(|(w, (x, y))| w * (x - y).abs())
        .sum();
    assert!(diff < 1e-10 * M, "{diff:e}");
}

#[test]
fn near_critical_masses_converge_slowly() {
    let fast = solve_profile(4.0 * PI, &RadialGrid::for_mass(4.0 * PI), ProfileOptions::default()).unwrap();
    let slow = solve_profile(7.5 * PI, &RadialGrid::for_mass(7.5 * PI), ProfileOptions::default()).unwrap();
    assert!(slow.residual_l1 < 1e-10);
    assert!(slow.picard_iters > 3 * fast.picard_iters);
}

#[test]
fn gridding_extends_past_the_radial_grid() {
    let m = 2.0 * PI;
    let short = solve_profile(m, &RadialGrid::vertex(1024, 9.0).unwrap(), tight()).unwrap();
    let long = solve_profile(m, &RadialGrid::vertex(2048, 18.0).unwrap(), tight()).unwrap();
    let grid = make_grid(128, 12.0).unwrap();
    let a = short.to_grid(grid).unwrap();
    let b = long.to_grid(grid).unwrap();
    let diff = a.axpy(-1.0, &b).unwrap();
    assert!(diff.linf_norm() <= 1e-10 * b.linf_norm(), "{:e}", diff.linf_norm());
    assert!((a.integrate() - m).abs() <= 1e-8 * m);
}
