//! Free-space convolution with the logarithmic kernel `κ(z) = log|z| / 2π`.
//!
//! Both kernels are applied by Hockney's method: the density is zero-padded
//! to `(2n)²` and multiplied against a precomputed kernel spectrum, so no
//! periodic images leak in.

use std::f64::consts::PI;

use crate::constants::CELL_LOG_AVERAGE;
use crate::error::{Error, Result};
use crate::fft::{signed_index, Fft2d, PaddedFft, C64};
use crate::field::Field2D;
use crate::grid::Grid2D;
use crate::interp::lagrange_2d;
use crate::radial::RadialField;

/// How the singular kernel is turned into grid weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelRule {
    /// Band-limited samples of the kernel truncated beyond the box diameter,
    /// built from its closed-form Fourier transform. Spectrally accurate for
    /// resolved densities.
    #[default]
    Spectral,
    /// Point samples of `κ` and `∇κ`, with the origin cell replaced by the
    /// cell average of `κ` (and 0 for `∇κ`). Second order.
    CellAverage,
}

/// `κ∗f` and `K∗f = ∇(κ∗f)` on the grid of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPair {
    pub potential: Field2D,
    pub velocity_x: Field2D,
    pub velocity_y: Field2D,
}

impl PotentialPair {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            potential: Field2D::zeros(grid),
            velocity_x: Field2D::zeros(grid),
            velocity_y: Field2D::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        self.potential.grid()
    }

    /// Potential at an arbitrary point by eighth-order interpolation.
    pub fn potential_at(&self, x: f64, y: f64) -> f64 {
        lagrange_2d(&self.potential, x, y, 8)
    }

    pub fn max_speed(&self) -> f64 {
        self.velocity_x
            .values()
            .iter()
            .zip(self.velocity_y.values())
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }
}

/// Precomputed kernel spectra for one grid.
#[derive(Debug)]
pub struct ConvolutionEngine {
    grid: Grid2D,
    rule: KernelRule,
    fft: PaddedFft,
    potential_hat: Vec<C64>,
    /// spectrum of `Kx + iKy`
    velocity_hat: Vec<C64>,
}

impl ConvolutionEngine {
    pub fn new(grid: Grid2D, rule: KernelRule) -> Self {
        let (mut pot, mut vel) = match rule {
            KernelRule::Spectral => spectral_kernels(&grid),
            KernelRule::CellAverage => cell_average_kernels(&grid),
        };
        let full = Fft2d::new(2 * grid.n());
        full.forward(&mut pot);
        full.forward(&mut vel);
        Self {
            grid,
            rule,
            fft: PaddedFft::new(grid.n()),
            potential_hat: pot,
            velocity_hat: vel,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn rule(&self) -> KernelRule {
        self.rule
    }

    fn padded_spectrum(&self, f: &[f64]) -> Vec<C64> {
        self.fft.forward_half(f)
    }

    fn apply(&self, spec: &[C64], kernel: &[C64]) -> Vec<C64> {
        self.fft.convolve_half(spec, kernel)
    }

    fn check(&self, f: &Field2D) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if !f.is_finite() {
            return Err(Error::NonFinite("density passed to the log-kernel convolution"));
        }
        Ok(())
    }

    /// `κ∗f`.
    pub fn potential(&self, f: &Field2D) -> Result<Field2D> {
        self.check(f)?;
        let spec = self.padded_spectrum(f.values());
        let v = self.apply(&spec, &self.potential_hat).into_iter().map(|c| c.re).collect();
        Field2D::from_values(self.grid, v)
    }

    /// Components of `K∗f` written into `vx`, `vy` (one forward and one
    /// inverse padded FFT).
    pub fn velocity_into(&self, f: &[f64], vx: &mut [f64], vy: &mut [f64]) {
        let spec = self.padded_spectrum(f);
        let v = self.apply(&spec, &self.velocity_hat);
        for ((c, x), y) in v.into_iter().zip(vx.iter_mut()).zip(vy.iter_mut()) {
            *x = c.re;
            *y = c.im;
        }
    }

    pub fn convolve(&self, f: &Field2D) -> Result<PotentialPair> {
        self.check(f)?;
        let spec = self.padded_spectrum(f.values());
        let pot: Vec<f64> = self.apply(&spec, &self.potential_hat).into_iter().map(|c| c.re).collect();
        let (vx, vy): (Vec<f64>, Vec<f64>) = self
            .apply(&spec, &self.velocity_hat)
            .into_iter()
            .map(|c| (c.re, c.im))
            .unzip();
        Ok(PotentialPair {
            potential: Field2D::from_values(self.grid, pot)?.with_label("potential"),
            velocity_x: Field2D::from_values(self.grid, vx)?.with_label("velocity_x"),
            velocity_y: Field2D::from_values(self.grid, vy)?.with_label("velocity_y"),
        })
    }
}

/// One-off convolution with the default kernel rule.
pub fn log_kernel_convolve(f: &Field2D) -> Result<PotentialPair> {
    ConvolutionEngine::new(*f.grid(), KernelRule::default()).convolve(f)
}

/// Scatters kernel samples at offsets `|d| < n` into the `2n` Hockney
/// layout, including the `h²` quadrature factor.
fn hockney_layout(n: usize, h2: f64, sample: impl Fn(isize, isize) -> C64) -> Vec<C64> {
    let n2 = 2 * n;
    let mut out = vec![C64::new(0.0, 0.0); n2 * n2];
    for j in 0..n2 {
        let dy = signed_index(j, n2);
        if dy.unsigned_abs() >= n {
            continue;
        }
        for i in 0..n2 {
            let dx = signed_index(i, n2);
            if dx.unsigned_abs() >= n {
                continue;
            }
            out[j * n2 + i] = sample(dx, dy) * h2;
        }
    }
    out
}

fn cell_average_kernels(grid: &Grid2D) -> (Vec<C64>, Vec<C64>) {
    let n = grid.n();
    let h = grid.spacing();
    let origin = (h.ln() + CELL_LOG_AVERAGE) / (2.0 * PI);
    let pot = hockney_layout(n, h * h, |dx, dy| {
        if dx == 0 && dy == 0 {
            return C64::new(origin, 0.0);
        }
        let (x, y) = (dx as f64 * h, dy as f64 * h);
        C64::new((x * x + y * y).ln() / (4.0 * PI), 0.0)
    });
    let vel = hockney_layout(n, h * h, |dx, dy| {
        if dx == 0 && dy == 0 {
            return C64::new(0.0, 0.0);
        }
        let (x, y) = (dx as f64 * h, dy as f64 * h);
        let r2 = x * x + y * y;
        C64::new(x, y) / (2.0 * PI * r2)
    });
    (pot, vel)
}

/// Fourier transform of `κ·𝟙_{|z|<R}` at `|ξ| = k`.
fn truncated_log_hat(k: f64, r: f64) -> f64 {
    if k == 0.0 {
        return r * r * (0.5 * r.ln() - 0.25);
    }
    let kr = k * r;
    r * r.ln() * libm::j1(kr) / k - (1.0 - libm::j0(kr)) / (k * k)
}

/// Band-limited kernels: the truncated kernel's transform sampled on a
/// `(4n)²` torus of period `8L`, brought back to real space, and cut to the
/// offsets a Hockney product actually reads. The truncation radius sits
/// outside the box diameter so every pair of cells sees the true kernel.
fn spectral_kernels(grid: &Grid2D) -> (Vec<C64>, Vec<C64>) {
    let n = grid.n();
    let h = grid.spacing();
    let big = 4 * n;
    let period = big as f64 * h;
    let radius = 2.0 * std::f64::consts::SQRT_2 * grid.half_width() * 1.05;
    let dk = 2.0 * PI / period;
    let k: Vec<f64> = (0..big).map(|a| dk * signed_index(a, big) as f64).collect();
    let mut k1 = k.clone();
    k1[big / 2] = 0.0;

    // isotropic: tabulate by |ξ|² would not save much, evaluate directly
    let mut pot = vec![C64::new(0.0, 0.0); big * big];
    let mut vel = vec![C64::new(0.0, 0.0); big * big];
    for a in 0..big {
        for b in 0..big {
            let kk = k[a].hypot(k[b]);
            let kh = truncated_log_hat(kk, radius);
            pot[a * big + b] = C64::new(kh, 0.0);
            // (i kx + i·i ky) κ̂
            vel[a * big + b] = C64::new(-k1[b], k1[a]) * kh;
        }
    }
    let fft = Fft2d::new(big);
    fft.inverse(&mut pot);
    fft.inverse(&mut vel);
    let inv_h2 = 1.0 / (h * h);
    let pick = |buf: &[C64], dx: isize, dy: isize| -> C64 {
        let i = dx.rem_euclid(big as isize) as usize;
        let j = dy.rem_euclid(big as isize) as usize;
        buf[j * big + i] * inv_h2
    };
    let pot2 = hockney_layout(n, h * h, |dx, dy| C64::new(pick(&pot, dx, dy).re, 0.0));
    let vel2 = hockney_layout(n, h * h, |dx, dy| pick(&vel, dx, dy));
    (pot2, vel2)
}

/// Radial potential `(κ∗g)(r)` of a radial density.
///
/// Integrates `ψ' = m(r)/(2πr)` inward from `ψ(r_max) = m(r_max) log(r_max)/2π`
/// with the fourth-order cumulative rule.
pub fn radial_log_potential(g: &RadialField) -> RadialField {
    let (psi, _) = radial_potential_with_origin(g);
    psi
}

/// As [`radial_log_potential`], also returning the value at `r = 0`.
pub fn radial_potential_with_origin(g: &RadialField) -> (RadialField, f64) {
    let rg = g.rgrid();
    let m = g.cumulative_mass();
    let p: Vec<f64> = rg
        .nodes()
        .iter()
        .zip(&m)
        .map(|(r, mi)| mi / (2.0 * PI * r))
        .collect();
    let cum = rg.cumulative_odd(&p);
    let last = rg.len() - 1;
    let r_last = rg.nodes()[last];
    let top = m[last] * r_last.ln() / (2.0 * PI);
    let psi: Vec<f64> = cum.iter().map(|c| top - (cum[last] - c)).collect();
    let origin = psi[0] - cum[0];
    (
        RadialField::new(rg.clone(), psi).expect("finite potential"),
        origin,
    )
}

/// Radial component `m(r)/(2πr)` of `K∗g`.
pub fn radial_attraction(g: &RadialField) -> RadialField {
    let rg = g.rgrid();
    let v = g
        .cumulative_mass()
        .iter()
        .zip(rg.nodes())
        .map(|(m, r)| m / (2.0 * PI * r))
        .collect();
    RadialField::new(rg.clone(), v).expect("finite attraction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::EULER_GAMMA;
    use crate::field::gaussian_datum;
    use crate::grid::make_grid;
    use crate::radial::{radial_to_2d, RadialGrid};

    const GAUSS_CENTRE: f64 = 0.009_225_536_888_585_9;

    #[test]
    fn gaussian_centre_oracle_constant() {
        let v = (2f64.ln() - EULER_GAMMA) / (4.0 * PI);
        assert!((v - GAUSS_CENTRE).abs() < 1e-10);
    }

    #[test]
    fn gaussian_centre_value_both_rules() {
        let grid = make_grid(128, 8.0).unwrap();
        let f = gaussian_datum(grid, 1.0, 1.0, [0.0, 0.0]).unwrap();
        for (rule, tol) in [(KernelRule::Spectral, 1e-8), (KernelRule::CellAverage, 1e-3)] {
            let p = ConvolutionEngine::new(grid, rule).convolve(&f).unwrap();
            let c = p.potential_at(0.0, 0.0);
            assert!((c - GAUSS_CENTRE).abs() < tol, "{rule:?}: {c}");
        }
    }

    #[test]
    fn zero_density() {
        let grid = make_grid(32, 4.0).unwrap();
        let p = log_kernel_convolve(&Field2D::zeros(grid)).unwrap();
        assert_eq!(p.potential.linf_norm(), 0.0);
        assert_eq!(p.max_speed(), 0.0);
    }

    #[test]
    fn non_finite_rejected() {
        let grid = make_grid(16, 4.0).unwrap();
        let mut f = Field2D::zeros(grid);
        f.values_mut()[3] = f64::NAN;
        assert!(matches!(log_kernel_convolve(&f), Err(Error::NonFinite(_))));
    }

    #[test]
    fn radial_disk() {
        // uniform disk of mass 2π and radius 1 with a node exactly on the edge
        let rg = RadialGrid::vertex(4000, 4.0).unwrap();
        let g = RadialField::from_fn(&rg, |r| {
            if (r - 1.0).abs() < 1e-12 {
                1.0
            } else if r < 1.0 {
                2.0
            } else {
                0.0
            }
        });
        let psi = radial_log_potential(&g);
        let at_e = psi.interpolate(std::f64::consts::E, 1.0).unwrap();
        assert!((at_e - 1.0).abs() < 1e-6, "{at_e}");
        let a = radial_attraction(&g);
        assert!((a.interpolate(2.0, 1.0).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn radial_gaussian_centre() {
        let rg = RadialGrid::vertex(2048, 12.0).unwrap();
        let g = RadialField::from_fn(&rg, |r| (-0.5 * r * r).exp() / (2.0 * PI));
        let (_, origin) = radial_potential_with_origin(&g);
        assert!((origin - GAUSS_CENTRE).abs() < 1e-9, "{origin}");
        let a = radial_attraction(&g);
        let last = rg.len() - 1;
        assert!((a.values()[last] - 1.0 / (2.0 * PI * rg.nodes()[last])).abs() < 1e-8);
        // vanishes linearly: m(r)/(2πr) ≈ g(0) r / 2
        assert!((a.values()[0] / rg.nodes()[0] - 1.0 / (4.0 * PI)).abs() < 1e-4);
    }

    #[test]
    fn radial_matches_grid() {
        let grid = make_grid(128, 8.0).unwrap();
        let rg = RadialGrid::vertex(2048, 12.0).unwrap();
        let g = RadialField::from_fn(&rg, |r| (1.0 + r * r) * (-0.5 * r * r).exp());
        let f = radial_to_2d(&g, grid).unwrap();
        let p = log_kernel_convolve(&f).unwrap();
        let psi = radial_log_potential(&g);
        let mut diff: f64 = 0.0;
        for (k, (x, y)) in grid.points().enumerate() {
            let r = (x * x + y * y).sqrt();
            diff = diff.max((p.potential.values()[k] - psi.interpolate(r, 1.0).unwrap()).abs());
        }
        assert!(diff / p.potential.linf_norm() < 1e-8, "{diff}");
    }
}
