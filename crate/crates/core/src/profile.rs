//! The self-similar profile `G_M = M e^{−κ∗G − |x|²/2} / Z`.

use std::f64::consts::PI;

use crate::constants::CRITICAL_MASS;
use crate::error::{Error, Result};
use crate::potential::radial_potential_with_origin;
use crate::field::Field2D;
use crate::grid::Grid2D;
use crate::radial::{RadialField, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Damping `ω ∈ (0, 1]`.
    pub omega: f64,
    /// Stop once `‖T(G) − G‖_{L¹} < tol`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            omega: 0.5,
            tol: 1e-10,
            max_iters: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileResult {
    pub mass: f64,
    pub g: RadialField,
    /// `U = −κ∗G`.
    pub u: RadialField,
    /// `U(0)`.
    pub u_origin: f64,
    /// `Z = ∫ e^{U − r²/2}`.
    pub z: f64,
    pub picard_iters: usize,
    /// Fixed-point residual `‖T(G) − G‖_{L¹}` of the returned profile.
    pub residual_l1: f64,
    /// Weighted `L¹` norm of `∇·(∇G + xG − G∇U)`.
    pub stationary_residual: f64,
    pub m2: f64,
    pub history: Vec<f64>,
}

impl ProfileResult {
    /// `G(0) = M e^{U(0)} / Z`.
    pub fn center_value(&self) -> f64 {
        self.mass * self.u_origin.exp() / self.z
    }

    pub fn rgrid(&self) -> &RadialGrid {
        self.g.rgrid()
    }

    /// `G` on a 2D grid as `M e^{U − r²/2} / Z` with `U` interpolated, which
    /// keeps the relative accuracy uniform far into the Gaussian tail. Beyond
    /// the radial grid `U` continues as the exterior potential
    /// `U(r_max) − (M/2π) log(r/r_max)`.
    pub fn to_grid(&self, grid: Grid2D) -> Result<Field2D> {
        let rg = self.rgrid();
        let r_last = rg.nodes()[rg.len() - 1];
        let u_last = self.u.values()[rg.len() - 1];
        let c = self.mass / self.z;
        let values = grid
            .points()
            .map(|(x, y)| {
                let r2 = x * x + y * y;
                let r = r2.sqrt();
                let u = if r <= r_last {
                    self.u.interpolate(r, 1.0)?
                } else {
                    u_last - self.mass / (2.0 * PI) * (r / r_last).ln()
                };
                Ok(c * (u - 0.5 * r2).exp())
            })
            .collect::<Result<Vec<f64>>>()?;
        Field2D::from_values(grid, values).map(|f| f.with_label(format!("profile M={}", self.mass)))
    }

    /// `E(G) = ∫ G(1 + log G) + ½M₂(G) − ½∫ G U`.
    pub fn rescaled_energy(&self) -> f64 {
        let rg = self.rgrid();
        let density: Vec<f64> = self
            .g
            .values()
            .iter()
            .zip(self.u.values())
            .zip(rg.nodes())
            .map(|((g, u), r)| g * (1.0 + g.ln()) + 0.5 * g * r * r - 0.5 * g * u)
            .collect();
        rg.integrate(&density)
    }

    /// `D_E(G) = ∫ |J|²/G` with the stationary flux `J`.
    pub fn rescaled_dissipation(&self) -> f64 {
        let rg = self.rgrid();
        let j = stationary_flux(&self.g, self.center_value());
        let density: Vec<f64> = j.iter().zip(self.g.values()).map(|(j, g)| j * j / g).collect();
        rg.integrate(&density)
    }
}

/// One Picard map evaluation: returns `(T(G), ψ, ψ(0), Z)` with `ψ = κ∗G`.
fn picard_map(mass: f64, g: &RadialField) -> (Vec<f64>, RadialField, f64, f64) {
    let rg = g.rgrid();
    let (psi, psi0) = radial_potential_with_origin(g);
    let w: Vec<f64> = rg
        .nodes()
        .iter()
        .zip(psi.values())
        .map(|(r, p)| (-p - 0.5 * r * r).exp())
        .collect();
    let z = rg.integrate(&w);
    let t = w.into_iter().map(|v| mass * v / z).collect();
    (t, psi, psi0, z)
}

fn l1_distance(rg: &RadialGrid, a: &[f64], b: &[f64]) -> f64 {
    rg.weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * (x - y).abs())
        .sum()
}

fn check_mass(mass: f64) -> Result<()> {
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
    }
    if mass >= CRITICAL_MASS {
        return Err(Error::Supercritical { mass });
    }
    Ok(())
}

/// Damped Picard iteration from the mass-`M` Gaussian.
pub fn solve_profile(mass: f64, rgrid: &RadialGrid, opts: ProfileOptions) -> Result<ProfileResult> {
    check_mass(mass)?;
    if !(opts.omega > 0.0 && opts.omega <= 1.0) {
        return Err(Error::InvalidArgument(format!("omega must be in (0, 1], got {}", opts.omega)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let mut g = RadialField::from_fn(rgrid, |r| mass * (-0.5 * r * r).exp() / (2.0 * PI));
    let mut history = Vec::new();
    let w = opts.omega;
    for it in 1..=opts.max_iters {
        let (t, _, _, _) = picard_map(mass, &g);
        let res = l1_distance(rgrid, &t, g.values());
        if !res.is_finite() {
            return Err(Error::NonFinite("profile iterate"));
        }
        history.push(res);
        let converged = res < opts.tol;
        let next: Vec<f64> = if converged {
            t
        } else {
            g.values().iter().zip(&t).map(|(a, b)| (1.0 - w) * a + w * b).collect()
        };
        g = RadialField::new(rgrid.clone(), next)?;
        if converged {
            return Ok(finish(mass, g, it, history));
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iters,
        last: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

fn finish(mass: f64, g: RadialField, iters: usize, history: Vec<f64>) -> ProfileResult {
    let rg = g.rgrid().clone();
    let (t, psi, psi0, z) = picard_map(mass, &g);
    let residual_l1 = l1_distance(&rg, &t, g.values());
    let u = RadialField::new(rg.clone(), psi.values().iter().map(|p| -p).collect())
        .expect("finite potential");
    let stationary = stationary_residual_field(&g, mass * (-psi0).exp() / z);
    let stationary_residual = rg.integrate(&stationary.iter().map(|v| v.abs()).collect::<Vec<_>>());
    ProfileResult {
        mass,
        m2: g.moment(2.0),
        u,
        u_origin: -psi0,
        z,
        picard_iters: iters,
        residual_l1,
        stationary_residual,
        g,
        history,
    }
}

/// Radial flux `J = G' + rG + G m/(2πr)` of the stationary rescaled equation.
pub fn stationary_flux(g: &RadialField, origin: f64) -> Vec<f64> {
    let rg = g.rgrid();
    let dg = g.derivative_with_origin(1.0, origin);
    let m = g.cumulative_mass();
    rg.nodes()
        .iter()
        .zip(g.values())
        .zip(dg.iter().zip(&m))
        .map(|((r, gi), (d, mi))| d + r * gi + gi * mi / (2.0 * PI * r))
        .collect()
}

/// `J' + J/r` at the nodes; `origin` is `G(0)`.
pub fn stationary_residual_field(g: &RadialField, origin: f64) -> Vec<f64> {
    let rg = g.rgrid();
    let j = RadialField::new(rg.clone(), stationary_flux(g, origin)).expect("finite flux");
    let dj = j.derivative(-1.0);
    dj.iter()
        .zip(j.values())
        .zip(rg.nodes())
        .map(|((d, ji), r)| d + ji / r)
        .collect()
}

/// Gaussian envelope `e^{−(1+ε)r²/2 + C₁} ≤ G ≤ e^{−(1−ε)r²/2 + C₂}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
    pub pass: bool,
}

pub fn envelope_check(result: &ProfileResult, eps: f64) -> Result<EnvelopeReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be in (0, 1), got {eps}")));
    }
    let g = &result.g;
    let nodes = g.rgrid().nodes();
    let mut c1 = f64::INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    for (r, v) in nodes.iter().zip(g.values()) {
        let l = v.ln();
        c1 = c1.min(l + (1.0 + eps) * r * r / 2.0);
        c2 = c2.max(l + (1.0 - eps) * r * r / 2.0);
    }
    let slack = 1e-12;
    let holds = nodes.iter().zip(g.values()).all(|(r, v)| {
        let lo = (-(1.0 + eps) * r * r / 2.0 + c1).exp();
        let hi = (-(1.0 - eps) * r * r / 2.0 + c2).exp();
        *v >= lo * (1.0 - slack) && *v <= hi * (1.0 + slack)
    });
    Ok(EnvelopeReport {
        eps,
        c1,
        c2,
        pass: c1.is_finite() && c2.is_finite() && holds,
    })
}

/// Central difference `(G_{M+dM} − G_{M−dM}) / 2dM` on a common grid.
pub fn d_profile_dm(mass: f64, dm: f64, rgrid: &RadialGrid, tol: f64) -> Result<RadialField> {
    if !(dm > 0.0) || mass - dm <= 0.0 {
        return Err(Error::InvalidArgument(format!("need 0 < M − dM, got M={mass}, dM={dm}")));
    }
    check_mass(mass + dm)?;
    let opts = ProfileOptions {
        tol,
        ..ProfileOptions::default()
    };
    let hi = solve_profile(mass + dm, rgrid, opts)?;
    let lo = solve_profile(mass - dm, rgrid, opts)?;
    let v = hi
        .g
        .values()
        .iter()
        .zip(lo.g.values())
        .map(|(a, b)| (a - b) / (2.0 * dm))
        .collect();
    RadialField::new(rgrid.clone(), v)
}
