use std::f64::consts::PI;

use kslab_core::constants::{c2, c3, CRITICAL_MASS};
use kslab_core::dynamics::{run, SimConfig};
use kslab_core::field::{gaussian_datum, Field2D};
use kslab_core::functionals::{
    check_inequalities_with, entropy, fisher_information, free_energy_dissipation, rescaled_dissipation,
    FunctionalContext, Verdict, INEQUALITY_NAMES,
};
use kslab_core::grid::{make_grid, Grid2D};
use kslab_core::potential::log_kernel_convolve;
use kslab_core::profile::{solve_profile, ProfileOptions};
use kslab_core::radial::RadialGrid;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A sum of 1–4 Gaussians with total mass in (0.5, 8π·0.95), all inside the
/// grid with a 6σ margin.
fn mixture(rng: &mut ChaCha8Rng, grid: Grid2D) -> Field2D {
    let parts = rng.gen_range(1..=4);
    let total = rng.gen_range(0.5..0.95 * CRITICAL_MASS);
    let shares: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.2..1.0)).collect();
    let sum: f64 = shares.iter().sum();
    let mut f = Field2D::zeros(grid);
    for s in shares {
        let sigma = rng.gen_range(0.5..1.2);
        let reach = grid.half_width() - 6.0 * sigma - 0.1;
        let c = [rng.gen_range(-reach..reach), rng.gen_range(-reach..reach)];
        let g = gaussian_datum(grid, total * s / sum, sigma, c).unwrap();
        f = f.axpy(1.0, &g).unwrap();
    }
    f
}

#[test]
fn random_mixtures_satisfy_every_bound() {
    let grid = make_grid(128, 10.0).unwrap();
    let ctx = FunctionalContext::new(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut hls = Vec::new();
    let mut nash = Vec::new();
    for _ in 0..100 {
        let f = mixture(&mut rng, grid);
        let pot = log_kernel_convolve(&f).unwrap();
        let reports = check_inequalities_with(&ctx, &f, &pot).unwrap();
        assert_eq!(reports.iter().map(|r| r.name).collect::<Vec<_>>(), INEQUALITY_NAMES);
        for r in &reports {
            assert!(r.ok(), "{} failed: {r:?}", r.name);
            if matches!(r.verdict, Verdict::Pass) {
                assert!(r.slack >= -r.abs_tol);
            }
        }
        hls.push(reports[4].slack);
        nash.push(reports[9].slack);
        assert!(ctx.fisher_information(&f).unwrap() >= 0.0);
        assert!(ctx.free_energy_dissipation(&f, &pot).unwrap() >= 0.0);
    }
    for ratios in [hls, nash] {
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.0 && hi / lo < 10.0, "{lo} {hi}");
    }
}

#[test]
fn unit_mass_log_hls_constant() {
    assert!((c2(1.0) - 2.14473).abs() < 1e-5);
    assert_eq!(c3(4.0 * PI), 2.0);
    let f = gaussian_datum(make_grid(256, 12.0).unwrap(), 1.0, 1.0, [0.0, 0.0]).unwrap();
    let pot = log_kernel_convolve(&f).unwrap();
    let r = &check_inequalities_with(&FunctionalContext::new(f.grid()), &f, &pot).unwrap()[0];
    assert_eq!(r.name, "log_hls");
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.slack > 0.0);
}

#[test]
fn supercritical_mass_skips_the_entropy_chain() {
    let f = gaussian_datum(make_grid(128, 10.0).unwrap(), 9.0 * PI, 1.0, [0.0, 0.0]).unwrap();
    let pot = log_kernel_convolve(&f).unwrap();
    let reports = check_inequalities_with(&FunctionalContext::new(f.grid()), &f, &pot).unwrap();
    assert!(matches!(reports[0].verdict, Verdict::Skipped(_)));
    assert!(matches!(reports[1].verdict, Verdict::Skipped(_)));
    assert!(reports[2..].iter().all(|r| r.ok()));
}

#[test]
fn gridded_profile_is_a_rescaled_equilibrium() {
    let m = 4.0 * PI;
    let rg = RadialGrid::for_mass(m);
    let p = solve_profile(m, &rg, ProfileOptions { tol: 1e-12, ..ProfileOptions::default() }).unwrap();
    let g = p.to_grid(make_grid(256, 10.0).unwrap()).unwrap();
    let pot = log_kernel_convolve(&g).unwrap();
    let de = rescaled_dissipation(&g, &pot).unwrap();
    assert!(de <= 1e-8 * m, "D_E = {de:e}");
    // ∇log G + ∇(κ∗G) = −x, hence D_F(G) = ∫ G |x|²
    let df = free_energy_dissipation(&g, &pot).unwrap();
    let m2 = g.moment(2.0);
    assert!((df - m2).abs() <= 1e-6 * m2, "{df} vs {m2}");
}

#[test]
fn heat_flow_entropy_decays_at_the_fisher_rate() {
    let cfg = SimConfig {
        n: 128,
        half_width: 10.0,
        mass: 1.0,
        sigma: 0.8,
        dt: 1e-3,
        t_end: 0.5,
        record_every: 10,
        attraction: false,
        ..SimConfig::default()
    };
    let rec = run(&cfg).unwrap();
    let s = &rec.samples;
    let mut worst: f64 = 0.0;
    for w in s.windows(3) {
        let dh = (w[2].entropy - w[0].entropy) / (w[2].t - w[0].t);
        worst = worst.max((dh + w[1].fisher).abs() / w[1].fisher);
    }
    assert!(worst < 0.02, "{worst}");
}

#[test]
fn plain_fisher_information_of_scaled_gaussians() {
    let grid = make_grid(256, 12.0).unwrap();
    for (m, sigma) in [(1.0, 1.0), (3.0, 0.7), (0.5, 1.4)] {
        let f = gaussian_datum(grid, m, sigma, [0.5, -0.5]).unwrap();
        let i = fisher_information(&f).unwrap();
        assert!((i - 2.0 * m / (sigma * sigma)).abs() < 1e-4 * m / (sigma * sigma), "{i}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dilation_shifts_entropy_by_mass_log(lambda in 0.7f64..1.6, m in 0.2f64..10.0) {
        // f_λ(x) = λ² f(λx) is the Gaussian with σ/λ
        let grid = make_grid(256, 12.0).unwrap();
        let f = gaussian_datum(grid, m, 1.0, [0.0, 0.0]).unwrap();
        let fl = gaussian_datum(grid, m, 1.0 / lambda, [0.0, 0.0]).unwrap();
        let want = entropy(&f) + 2.0 * m * lambda.ln();
        prop_assert!((entropy(&fl) - want).abs() <= 1e-8 * want.abs().max(m));
        prop_assert!((fl.integrate() - m).abs() < 1e-9 * m);
    }
}
