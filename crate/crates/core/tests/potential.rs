use std::f64::consts::PI;

use kslab_core::field::{gaussian_datum, Field2D};
use kslab_core::grid::{make_grid, Grid2D};
use kslab_core::potential::{log_kernel_convolve, ConvolutionEngine, KernelRule};
use proptest::prelude::*;

/// Uniform disk of mass `2π` and radius 1, cell-averaged by supersampling
/// and renormalized to the exact mass.
fn disk(grid: Grid2D) -> Field2D {
    let h = grid.spacing();
    let s = 8;
    let mut f = Field2D::from_fn(grid, |x, y| {
        let mut inside = 0;
        for a in 0..s {
            for b in 0..s {
                let px = x + h * ((a as f64 + 0.5) / s as f64 - 0.5);
                let py = y + h * ((b as f64 + 0.5) / s as f64 - 0.5);
                if px * px + py * py < 1.0 {
                    inside += 1;
                }
            }
        }
        inside as f64 / (s * s) as f64
    });
    let m = f.integrate();
    f.scale(2.0 * PI / m);
    f
}

#[test]
fn disk_attraction_follows_shell_theorem() {
    let grid = make_grid(256, 4.0).unwrap();
    let f = disk(grid);
    for rule in [KernelRule::Spectral, KernelRule::CellAverage] {
        let p = ConvolutionEngine::new(grid, rule).convolve(&f).unwrap();
        let mut checked = 0;
        for (k, (x, y)) in grid.points().enumerate() {
            let r = (x * x + y * y).sqrt();
            if (r - 2.0).abs() < grid.spacing() {
                let v = p.velocity_x.values()[k].hypot(p.velocity_y.values()[k]);
                // inward-pointing: V = ∇(κ∗f) points away from the mass
                let radial = (p.velocity_x.values()[k] * x + p.velocity_y.values()[k] * y) / r;
                assert!(radial > 0.0);
                assert!((v * r / 2.0 - 0.5).abs() < 1e-3, "{rule:?}: |V|={v} at r={r}");
                checked += 1;
            }
        }
        assert!(checked > 100);
    }
}

#[test]
fn gaussian_attraction_matches_enclosed_mass() {
    // unit Gaussian: |K∗f|(r) = (1 − e^{−r²/2}) / (2πr)
    let grid = make_grid(128, 8.0).unwrap();
    let f = gaussian_datum(grid, 1.0, 1.0, [0.0, 0.0]).unwrap();
    for (rule, tol) in [(KernelRule::Spectral, 1e-9), (KernelRule::CellAverage, 2e-3)] {
        let p = ConvolutionEngine::new(grid, rule).convolve(&f).unwrap();
        let mut err: f64 = 0.0;
        for (k, (x, y)) in grid.points().enumerate() {
            let r = (x * x + y * y).sqrt();
            let want = (1.0 - (-0.5 * r * r).exp()) / (2.0 * PI * r);
            err = err.max((p.velocity_x.values()[k] - want * x / r).abs());
            err = err.max((p.velocity_y.values()[k] - want * y / r).abs());
        }
        assert!(err < tol, "{rule:?}: {err:e}");
    }
}

#[test]
fn velocity_is_gradient_of_potential() {
    let grid = make_grid(128, 8.0).unwrap();
    let f = gaussian_datum(grid, 2.0, 0.8, [0.5, -0.3]).unwrap()
        .axpy(1.0, &gaussian_datum(grid, 1.0, 0.6, [-1.0, 1.0]).unwrap())
        .unwrap();
    let p = log_kernel_convolve(&f).unwrap();
    let n = grid.n();
    let h = grid.spacing();
    let u = |i: usize, j: usize| p.potential.at(i, j);
    let mut err: f64 = 0.0;
    for j in 8..n - 8 {
        for i in 8..n - 8 {
            let dx = (8.0 * (u(i + 1, j) - u(i - 1, j)) - (u(i + 2, j) - u(i - 2, j))) / (12.0 * h);
            let dy = (8.0 * (u(i, j + 1) - u(i, j - 1)) - (u(i, j + 2) - u(i, j - 2))) / (12.0 * h);
            err = err.max((dx - p.velocity_x.at(i, j)).abs());
            err = err.max((dy - p.velocity_y.at(i, j)).abs());
        }
    }
    assert!(err < 1e-4 * p.max_speed(), "{err:e}");
}

#[test]
fn zero_density_gives_zero_fields() {
    let grid = make_grid(64, 4.0).unwrap();
    let p = log_kernel_convolve(&Field2D::zeros(grid)).unwrap();
    assert_eq!(p.potential.linf_norm(), 0.0);
    assert_eq!(p.velocity_x.linf_norm(), 0.0);
    assert_eq!(p.velocity_y.linf_norm(), 0.0);
}

/// A centred Gaussian or a pair of bumps placed symmetrically about a
/// point near the origin.
fn concentrated(grid: Grid2D, mass: f64, sigma: f64, a: [f64; 2], c: [f64; 2]) -> Field2D {
    let p = [c[0] + a[0], c[1] + a[1]];
    let q = [c[0] - a[0], c[1] - a[1]];
    gaussian_datum(grid, 0.5 * mass, sigma, p)
        .unwrap()
        .axpy(1.0, &gaussian_datum(grid, 0.5 * mass, sigma, q).unwrap())
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn monopole_far_field(
        mass in 0.1f64..30.0,
        sigma in 0.25f64..0.5,
        a in prop::array::uniform2(-0.5f64..0.5),
        c in prop::array::uniform2(-0.1f64..0.1),
    ) {
        let grid = make_grid(128, 12.0).unwrap();
        let f = concentrated(grid, mass, sigma, a, c);
        let p = log_kernel_convolve(&f).unwrap();
        let target = 0.9 * grid.half_width();
        for (k, (x, y)) in grid.points().enumerate() {
            let r = (x * x + y * y).sqrt();
            if (r - target).abs() < 0.5 * grid.spacing() {
                let v = p.velocity_x.values()[k].hypot(p.velocity_y.values()[k]);
                let ratio = v * 2.0 * PI * r / mass;
                prop_assert!((ratio - 1.0).abs() < 0.02, "ratio {} at r={}", ratio, r);
            }
        }
    }

    #[test]
    fn no_self_force_on_even_data(
        mass in 0.1f64..30.0,
        sigma in 0.3f64..1.0,
        a in prop::array::uniform2(-1.5f64..1.5),
        extra in 0.0f64..1.0,
    ) {
        let grid = make_grid(64, 8.0).unwrap();
        let f = concentrated(grid, mass, sigma, a, [0.0, 0.0])
            .axpy(extra, &gaussian_datum(grid, mass, 1.2 * sigma, [0.0, 0.0]).unwrap())
            .unwrap();
        let m = f.integrate();
        for rule in [KernelRule::Spectral, KernelRule::CellAverage] {
            let p = ConvolutionEngine::new(grid, rule).convolve(&f).unwrap();
            let h2 = grid.cell_area();
            let fx: f64 = h2 * f.values().iter().zip(p.velocity_x.values()).map(|(a, b)| a * b).sum::<f64>();
            let fy: f64 = h2 * f.values().iter().zip(p.velocity_y.values()).map(|(a, b)| a * b).sum::<f64>();
            let bound = 1e-10 * m * m / grid.half_width();
            prop_assert!(fx.abs() <= bound && fy.abs() <= bound, "{:e} {:e} > {:e}", fx, fy, bound);
        }
    }

    #[test]
    fn convolution_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        c1 in prop::array::uniform2(-1.0f64..1.0),
        c2 in prop::array::uniform2(-1.0f64..1.0),
    ) {
        let grid = make_grid(64, 8.0).unwrap();
        let f = gaussian_datum(grid, 1.0, 0.7, c1).unwrap();
        let g = gaussian_datum(grid, 2.0, 1.1, c2).unwrap();
        let sum = f.scaled(a).axpy(b, &g).unwrap();
        let engine = ConvolutionEngine::new(grid, KernelRule::Spectral);
        let (pf, pg, ps) = (
            engine.convolve(&f).unwrap(),
            engine.convolve(&g).unwrap(),
            engine.convolve(&sum).unwrap(),
        );
        let scale = ps.potential.linf_norm() + ps.max_speed() + 1.0;
        for (s, (x, y)) in [
            (&ps.potential, (&pf.potential, &pg.potential)),
            (&ps.velocity_x, (&pf.velocity_x, &pg.velocity_x)),
            (&ps.velocity_y, (&pf.velocity_y, &pg.velocity_y)),
        ] {
            let comb = x.scaled(a).axpy(b, y).unwrap();
            prop_assert!(s.axpy(-1.0, &comb).unwrap().linf_norm() <= 1e-12 * scale);
        }
    }
}
