use std::f64::consts::PI;

use kslab_core::{gaussian_datum, make_grid, Field2D, RadialField, RadialGrid};
use kslab_core::radial::{radial_project, radial_to_2d};
use proptest::prelude::*;

#[test]
fn grid_examples() {
    assert_eq!(make_grid(256, 12.0).unwrap().spacing(), 0.09375);
    assert_eq!(make_grid(16, 8.0).unwrap().spacing(), 1.0);
    assert!(make_grid(100, 8.0).is_err());
    assert!(make_grid(8, 8.0).is_err());
    assert!(make_grid(64, 0.0).is_err());
    let g = make_grid(16, 8.0).unwrap();
    assert_eq!(g.coord(0), -7.5);
    assert_eq!(g.coord(15), 7.5);
}

#[test]
fn unit_gaussian_quadrature() {
    let f = gaussian_datum(make_grid(256, 12.0).unwrap(), 1.0, 1.0, [0.0, 0.0]).unwrap();
    assert!((f.integrate() - 1.0).abs() < 1e-10);
    assert!((f.moment(2.0) - 2.0).abs() < 1e-8);
    assert!((f.moment(4.0) - 8.0).abs() < 1e-6);
    assert!((f.lp_norm(1.0, 0.0) - 1.0).abs() < 1e-10);
    assert!((f.lp_norm(2.0, 0.0) - (4.0 * PI).powf(-0.5)).abs() < 1e-6);
    let h2 = f.grid().cell_area();
    assert!((f.linf_norm() - 1.0 / (2.0 * PI)).abs() < h2);
    assert!((f.scaled(3.0).linf_norm() - 3.0 * f.linf_norm()).abs() < 1e-15);
}

#[test]
fn shifted_mixture_mass_and_centre() {
    let grid = make_grid(256, 12.0).unwrap();
    let a = gaussian_datum(grid, 2.0 * PI, 1.0, [1.5, -1.0]).unwrap();
    let b = gaussian_datum(grid, PI, 0.7, [-2.0, 0.5]).unwrap();
    let f = a.axpy(1.0, &b).unwrap();
    assert!((f.integrate() - 3.0 * PI).abs() < 1e-8);
    let [mx, my] = f.first_moments();
    let want = [2.0 * PI * 1.5 - PI * 2.0, -2.0 * PI + PI * 0.5];
    assert!((mx - want[0]).abs() < 1e-8 && (my - want[1]).abs() < 1e-8);
}

#[test]
fn margin_is_enforced() {
    let grid = make_grid(256, 12.0).unwrap();
    assert!(gaussian_datum(grid, 1.0, 1.0, [11.9, 0.0]).is_err());
    assert!(gaussian_datum(grid, 1.0, 1.0, [5.0, 0.0]).is_ok());
    assert!(gaussian_datum(grid, -1.0, 1.0, [0.0, 0.0]).is_err());
}

#[test]
fn midpoint_error_drops_fast_under_refinement() {
    // σ = 0.6 with h = 1 keeps the coarse error well above roundoff
    let err = |n| {
        let f = gaussian_datum(make_grid(n, 8.0).unwrap(), 1.0, 0.6, [0.0, 0.0]).unwrap();
        (f.integrate() - 1.0).abs()
    };
    let (e16, e32) = (err(16), err(32));
    assert!(e16 > 1e-6, "{e16}");
    assert!(e16 / e32.max(1e-300) >= 4.0, "{e16} {e32}");
}

#[test]
fn radial_profile_carries_mass_to_grid() {
    let rg = RadialGrid::for_mass(1.0);
    let g = RadialField::from_fn(&rg, |r| (-r * r / 2.0).exp() / (2.0 * PI));
    assert!((g.integrate() - 1.0).abs() < 1e-10);
    // the grid corner (7√2) stays inside r_max = 10
    let f = radial_to_2d(&g, make_grid(256, 7.0).unwrap()).unwrap();
    assert!((f.integrate() - 1.0).abs() < 1e-8);
    let back = radial_project(&f, &RadialGrid::vertex(400, 6.5).unwrap()).unwrap();
    let worst = back
        .rgrid()
        .nodes()
        .iter()
        .zip(back.values())
        .map(|(&r, &v)| (v - (-r * r / 2.0).exp() / (2.0 * PI)).abs())
        .fold(0.0, f64::max);
    assert!(worst * 2.0 * PI < 1e-6, "{worst}");
}

#[test]
fn radial_to_2d_rejects_short_profiles() {
    let rg = RadialGrid::vertex(64, 4.0).unwrap();
    let g = RadialField::from_fn(&rg, |r| (-r * r).exp());
    assert!(radial_to_2d(&g, make_grid(64, 8.0).unwrap()).is_err());
}

#[test]
fn zero_field_is_zero_everywhere() {
    let f = Field2D::zeros(make_grid(32, 4.0).unwrap());
    assert_eq!(f.integrate(), 0.0);
    assert_eq!(f.linf_norm(), 0.0);
    assert_eq!(f.moment(2.0), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gaussian_moments_scale_with_sigma(sigma in 0.4f64..1.5, mass in 0.1f64..20.0) {
        let f = gaussian_datum(make_grid(256, 12.0).unwrap(), mass, sigma, [0.0, 0.0]).unwrap();
        prop_assert!((f.integrate() / mass - 1.0).abs() < 1e-9);
        prop_assert!((f.moment(2.0) / (2.0 * mass * sigma * sigma) - 1.0).abs() < 1e-8);
        prop_assert!((f.moment(4.0) / (8.0 * mass * sigma.powi(4)) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn distance_is_a_metric(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, p in 1.0f64..3.0) {
        let grid = make_grid(64, 8.0).unwrap();
        let a = gaussian_datum(grid, 1.0, 1.0, [c1, 0.0]).unwrap();
        let b = gaussian_datum(grid, 1.0, 1.0, [0.0, c2]).unwrap();
        let z = Field2D::zeros(grid);
        let dab = a.distance(&b, p, 0.0).unwrap();
        prop_assert!((dab - b.distance(&a, p, 0.0).unwrap()).abs() < 1e-14);
        prop_assert!(dab <= a.distance(&z, p, 0.0).unwrap() + z.distance(&b, p, 0.0).unwrap() + 1e-14);
        prop_assert_eq!(a.distance(&a, p, 0.0).unwrap(), 0.0);
    }
}
