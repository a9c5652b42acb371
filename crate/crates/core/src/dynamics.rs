//! IMEX time stepping for the physical and rescaled systems.
//!
//! `∂t f = Δf + ∇·(f V)` with `V = K∗f` (physical), or
//! `∂t g = Δg + ∇·(g x + g V)` (rescaled). Diffusion is integrated exactly
//! in Fourier space; the divergence-form transport `N` is advanced by the
//! second-order exponential Runge-Kutta scheme of Cox and Matthews:
//!
//! ```text
//!   â  = E f̂ + dt φ₁ N̂(f)
//!   f̂' = â + dt φ₂ (N̂(a) − N̂(f))
//! ```
//!
//! with `z = −|ξ|²dt`, `E = e^z`, `φ₁ = (e^z − 1)/z`, `φ₂ = (e^z − 1 − z)/z²`.
//! Unlike an integrating factor, this keeps steady states of the
//! semi-discrete equation fixed exactly. `N̂` is a spectral divergence, so
//! the zero mode (the mass) is never touched.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::fft::C64;
use crate::field::{gaussian_datum, Field2D};
use crate::functionals::{entropy, h2_functional, positive_entropy, VACUUM_MASK};
use crate::grid::Grid2D;
use crate::potential::{ConvolutionEngine, KernelRule, PotentialPair};
use crate::spectral::Spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regime {
    #[default]
    Physical,
    Rescaled,
}

/// Everything needed to start and drive one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub half_width: f64,
    pub mass: f64,
    pub sigma: f64,
    pub center: [f64; 2],
    pub dt: f64,
    pub t_end: f64,
    pub regime: Regime,
    pub record_every: usize,
    /// Undershoots down to `−neg_tol·‖f‖∞` are clipped; deeper ones abort.
    pub neg_tol: f64,
    pub blowup_linf_factor: f64,
    /// Shrink the step to the advective bound instead of failing.
    pub adaptive_dt: bool,
    pub kernel: KernelRule,
    /// Test hook: with `false` the equation is the heat (or Fokker-Planck)
    /// equation.
    pub attraction: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 256,
            half_width: 12.0,
            mass: 4.0 * std::f64::consts::PI,
            sigma: 1.0,
            center: [0.0, 0.0],
            dt: 1e-3,
            t_end: 1.0,
            regime: Regime::Physical,
            record_every: 10,
            neg_tol: 1e-8,
            blowup_linf_factor: 1e3,
            adaptive_dt: false,
            kernel: KernelRule::default(),
            attraction: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if !(self.neg_tol >= 0.0) {
            return bad(format!("neg_tol must be nonnegative, got {}", self.neg_tol));
        }
        if !(self.blowup_linf_factor > 1.0) {
            return bad("blowup_linf_factor must exceed 1".into());
        }
        Grid2D::new(self.n, self.half_width)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.n, self.half_width)
    }

    /// The configured Gaussian initial datum.
    pub fn initial_datum(&self) -> Result<Field2D> {
        gaussian_datum(self.grid()?, self.mass, self.sigma, self.center)
    }
}

/// A density with its time, step count, and the attraction field at that
/// density.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub f: Field2D,
    pub time: f64,
    pub steps: usize,
    pub regime: Regime,
    pub velocity_x: Field2D,
    pub velocity_y: Field2D,
}

impl SimState {
    pub fn mass(&self) -> f64 {
        self.f.integrate()
    }
}

/// One row of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticSample {
    pub t: f64,
    pub mass: f64,
    pub m2: f64,
    pub m4: f64,
    pub entropy: f64,
    pub positive_entropy: f64,
    pub h2: f64,
    pub free_energy: f64,
    pub free_energy_dissipation: f64,
    pub fisher: f64,
    pub rescaled_energy: f64,
    pub rescaled_dissipation: f64,
    pub l43: f64,
    pub l2: f64,
    pub l3: f64,
    pub linf: f64,
    pub t14_l43: f64,
}

impl DiagnosticSample {
    pub const CSV_HEADER: [&'static str; 17] = [
        "t", "mass", "m2", "m4", "H", "Hplus", "H2", "F", "DF", "I", "E", "DE", "l43", "l2", "l3",
        "linf", "t14l43",
    ];

    pub fn as_row(&self) -> [f64; 17] {
        [
            self.t,
            self.mass,
            self.m2,
            self.m4,
            self.entropy,
            self.positive_entropy,
            self.h2,
            self.free_energy,
            self.free_energy_dissipation,
            self.fisher,
            self.rescaled_energy,
            self.rescaled_dissipation,
            self.l43,
            self.l2,
            self.l3,
            self.linf,
            self.t14_l43,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupInfo {
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub regime: Regime,
    pub samples: Vec<DiagnosticSample>,
    pub blowup: Option<BlowupInfo>,
    pub final_state: SimState,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn column(&self, pick: impl Fn(&DiagnosticSample) -> f64) -> Vec<f64> {
        self.samples.iter().map(pick).collect()
    }
}

/// `E = e^z`, `dt φ₁(z)`, `dt φ₂(z)` per Fourier mode, `z = −|ξ|²dt`.
#[derive(Debug, Default)]
struct Weights {
    dt: f64,
    e: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

impl Weights {
    fn new(k2: &[f64], dt: f64) -> Self {
        let n = k2.len();
        let (mut e, mut p1, mut p2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &k in k2 {
            let z = -k * dt;
            let em1 = z.exp_m1();
            // series below |z| = 1e-3 avoid cancellation in φ₂
            let (f1, f2) = if z.abs() < 1e-3 {
                (
                    1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0,
                    0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0,
                )
            } else {
                (em1 / z, (em1 - z) / (z * z))
            };
            e.push(em1 + 1.0);
            p1.push(dt * f1);
            p2.push(dt * f2);
        }
        Self { dt, e, p1, p2 }
    }
}

/// Owns the FFT plans and kernels for one grid and configuration.
#[derive(Debug)]
pub struct Stepper {
    config: SimConfig,
    grid: Grid2D,
    engine: ConvolutionEngine,
    spectral: Spectral,
    /// Exponential weights for the last step length used.
    weights: RefCell<Weights>,
}

/// Below this the advective bound is treated as collapse.
pub const MIN_DT: f64 = 1e-12;

impl Stepper {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        Ok(Self {
            engine: ConvolutionEngine::new(grid, config.kernel),
            spectral: Spectral::new(&grid),
            weights: RefCell::new(Weights::default()),
            grid,
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn engine(&self) -> &ConvolutionEngine {
        &self.engine
    }

    fn velocity(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n2 = self.grid.len();
        let mut vx = vec![0.0; n2];
        let mut vy = vec![0.0; n2];
        if self.config.attraction {
            self.engine.velocity_into(f, &mut vx, &mut vy);
        }
        (vx, vy)
    }

    pub fn initial_state(&self, f0: Field2D) -> Result<SimState> {
        if *f0.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if !f0.is_finite() {
            return Err(Error::NonFinite("initial datum"));
        }
        let (vx, vy) = self.velocity(f0.values());
        Ok(SimState {
            velocity_x: Field2D::from_values(self.grid, vx)?,
            velocity_y: Field2D::from_values(self.grid, vy)?,
            f: f0,
            time: 0.0,
            steps: 0,
            regime: self.config.regime,
        })
    }

    /// Advective bound `0.5·h / max|V (+ x)|`.
    pub fn stable_dt(&self, s: &SimState) -> f64 {
        let resc = self.config.regime == Regime::Rescaled;
        let mut vmax: f64 = 0.0;
        for ((x, y), (vx, vy)) in self
            .grid
            .points()
            .zip(s.velocity_x.values().iter().zip(s.velocity_y.values()))
        {
            let (mut a, mut b) = (*vx, *vy);
            if resc {
                a += x;
                b += y;
            }
            vmax = vmax.max(a * a + b * b);
        }
        if vmax == 0.0 {
            f64::INFINITY
        } else {
            0.5 * self.grid.spacing() / vmax.sqrt()
        }
    }

    /// Spectrum of the transport term at `f` with attraction `(vx, vy)`.
    fn transport_hat(&self, f: &[f64], vx: &[f64], vy: &[f64]) -> Vec<C64> {
        let resc = self.config.regime == Regime::Rescaled;
        let mut fx = Vec::with_capacity(f.len());
        let mut fy = Vec::with_capacity(f.len());
        for (k, (x, y)) in self.grid.points().enumerate() {
            let (mut a, mut b) = (vx[k], vy[k]);
            if resc {
                a += x;
                b += y;
            }
            fx.push(f[k] * a);
            fy.push(f[k] * b);
        }
        self.spectral.divergence_hat(&fx, &fy)
    }

    fn with_weights<T>(&self, dt: f64, body: impl FnOnce(&Weights) -> T) -> T {
        let mut w = self.weights.borrow_mut();
        if w.dt != dt {
            *w = Weights::new(self.spectral.k2(), dt);
        }
        body(&w)
    }

    pub fn step_physical(&self, s: &SimState, dt: f64) -> Result<SimState> {
        if s.regime != Regime::Physical || self.config.regime != Regime::Physical {
            return Err(Error::InvalidArgument("step_physical on a rescaled state".into()));
        }
        self.step(s, dt)
    }

    pub fn step_rescaled(&self, s: &SimState, dt: f64) -> Result<SimState> {
        if s.regime != Regime::Rescaled || self.config.regime != Regime::Rescaled {
            return Err(Error::InvalidArgument("step_rescaled on a physical state".into()));
        }
        self.step(s, dt)
    }

    /// One IMEX step of length `dt`, which must respect the advective bound.
    pub fn step(&self, s: &SimState, dt: f64) -> Result<SimState> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let bound = self.stable_dt(s);
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, bound });
        }
        let instability = |reason: String| Error::BlowupOrInstability {
            reason,
            last_valid: Box::new(s.clone()),
        };

        let f = s.f.values();
        let f_hat = self.spectral.forward_real(f);
        let n0 = self.transport_hat(f, s.velocity_x.values(), s.velocity_y.values());

        let stage_hat: Vec<C64> = self.with_weights(dt, |w| {
            f_hat
                .iter()
                .zip(&n0)
                .enumerate()
                .map(|(k, (fh, nh))| fh * w.e[k] + nh * w.p1[k])
                .collect()
        });
        let a = self.spectral.inverse_real(&stage_hat);
        if a.iter().any(|v| !v.is_finite()) {
            return Err(instability("non-finite intermediate stage".into()));
        }
        let (ax, ay) = self.velocity(&a);
        let n1 = self.transport_hat(&a, &ax, &ay);
        let next_hat: Vec<C64> = self.with_weights(dt, |w| {
            stage_hat
                .iter()
                .zip(n1.iter().zip(&n0))
                .enumerate()
                .map(|(k, (sh, (b, c)))| sh + (b - c) * w.p2[k])
                .collect()
        });
        let mut next = self.spectral.inverse_real(&next_hat);

        if next.iter().any(|v| !v.is_finite()) {
            return Err(instability("non-finite density".into()));
        }
        let linf = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = next.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -self.config.neg_tol * linf {
            return Err(instability(format!(
                "undershoot {min:e} below -{:e}·linf",
                self.config.neg_tol
            )));
        }
        if min < 0.0 {
            let before: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v = v.max(0.0));
            let after: f64 = next.iter().sum();
            if after > 0.0 {
                let c = before / after;
                next.iter_mut().for_each(|v| *v *= c);
            }
        }
        let (vx, vy) = self.velocity(&next);
        let mut f_new = Field2D::from_values(self.grid, next)?;
        f_new.label = s.f.label.clone();
        Ok(SimState {
            f: f_new,
            time: s.time + dt,
            steps: s.steps + 1,
            regime: s.regime,
            velocity_x: Field2D::from_values(self.grid, vx)?,
            velocity_y: Field2D::from_values(self.grid, vy)?,
        })
    }

    /// Full potential pair at the state's density.
    pub fn potential_pair(&self, s: &SimState) -> Result<PotentialPair> {
        if self.config.attraction {
            self.engine.convolve(&s.f)
        } else {
            Ok(PotentialPair::zeros(self.grid))
        }
    }

    /// Every recorded diagnostic at one state.
    pub fn diagnostics(&self, s: &SimState) -> Result<DiagnosticSample> {
        let f = &s.f;
        let pot = self.potential_pair(s)?;
        let a = self.grid.cell_area();
        let (gx, gy) = self.spectral.gradient(f.values());
        let cut = VACUUM_MASK * f.linf_norm();
        let (mut fisher, mut df, mut de) = (0.0, 0.0, 0.0);
        let vx = s.velocity_x.values();
        let vy = s.velocity_y.values();
        for (k, (x, y)) in self.grid.points().enumerate() {
            let v = f.values()[k];
            if v < cut || v <= 0.0 {
                continue;
            }
            let (ax, ay) = (gx[k] + v * vx[k], gy[k] + v * vy[k]);
            let (bx, by) = (ax + v * x, ay + v * y);
            fisher += (gx[k] * gx[k] + gy[k] * gy[k]) / v;
            df += (ax * ax + ay * ay) / v;
            de += (bx * bx + by * by) / v;
        }
        let h = entropy(f);
        let m2 = f.moment(2.0);
        let inter: f64 = a * f
            .values()
            .iter()
            .zip(pot.potential.values())
            .map(|(p, q)| p * q)
            .sum::<f64>();
        let mass = f.integrate();
        let l43 = f.lp_norm(4.0 / 3.0, 0.0);
        Ok(DiagnosticSample {
            t: s.time,
            mass,
            m2,
            m4: f.moment(4.0),
            entropy: h,
            positive_entropy: positive_entropy(f),
            h2: h2_functional(f),
            free_energy: h + 0.5 * inter,
            free_energy_dissipation: a * df,
            fisher: a * fisher,
            rescaled_energy: h + mass + 0.5 * m2 + 0.5 * inter,
            rescaled_dissipation: a * de,
            l43,
            l2: f.lp_norm(2.0, 0.0),
            l3: f.lp_norm(3.0, 0.0),
            linf: f.linf_norm(),
            t14_l43: s.time.powf(0.25) * l43,
        })
    }

    /// Runs from `s0` to `t_end`, calling `observer` after every accepted step
    /// (and once at the start). Blow-up ends the run and is reported in the
    /// record when the mass is supercritical, or when it is detected by the
    /// `L∞` / step-collapse criteria; other failures are errors.
    pub fn run(
        &self,
        s0: SimState,
        mut observer: impl FnMut(&SimState),
    ) -> Result<TrajectoryRecord> {
        let cfg = &self.config;
        let linf0 = s0.f.linf_norm();
        let supercritical = s0.mass() > crate::constants::CRITICAL_MASS;
        let mut samples = vec![self.diagnostics(&s0)?];
        observer(&s0);
        let mut state = s0;
        let mut blowup = None;
        // exact end time without drifting through repeated addition
        let tol = 1e-12 * cfg.t_end.max(1.0);
        while state.time < cfg.t_end - tol {
            let mut dt = cfg.dt.min(cfg.t_end - state.time);
            if cfg.adaptive_dt {
                let bound = self.stable_dt(&state);
                if bound < MIN_DT {
                    blowup = Some(BlowupInfo {
                        time: state.time,
                        reason: format!("advective step bound {bound:e} below {MIN_DT:e}"),
                    });
                    break;
                }
                dt = dt.min(bound);
            }
            let next = match self.step(&state, dt) {
                Ok(s) => s,
                Err(Error::BlowupOrInstability { reason, last_valid }) if supercritical => {
                    blowup = Some(BlowupInfo {
                        time: last_valid.time,
                        reason,
                    });
                    break;
                }
                Err(Error::Cfl { dt, bound }) if supercritical => {
                    blowup = Some(BlowupInfo {
                        time: state.time,
                        reason: format!("step {dt:e} above advective bound {bound:e}"),
                    });
                    break;
                }
                Err(e) => return Err(e),
            };
            state = next;
            observer(&state);
            let linf = state.f.linf_norm();
            let done = state.time >= cfg.t_end - tol;
            let exploded = linf > cfg.blowup_linf_factor * linf0;
            if state.steps % cfg.record_every == 0 || done || exploded {
                samples.push(self.diagnostics(&state)?);
            }
            if exploded {
                blowup = Some(BlowupInfo {
                    time: state.time,
                    reason: format!(
                        "linf {linf:e} exceeds {}x the initial {linf0:e}",
                        cfg.blowup_linf_factor
                    ),
                });
                break;
            }
        }
        Ok(TrajectoryRecord {
            regime: cfg.regime,
            samples,
            blowup,
            final_state: state,
        })
    }
}

/// Runs the configured Gaussian datum.
pub fn run(config: &SimConfig) -> Result<TrajectoryRecord> {
    let stepper = Stepper::new(config.clone())?;
    let s0 = stepper.initial_state(config.initial_datum()?)?;
    stepper.run(s0, |_| {})
}

/// `(t, t^{1/4}‖f(t)‖_{4/3})` after every step of a physical run.
pub fn short_time_l43(config: &SimConfig) -> Result<Vec<(f64, f64)>> {
    if config.regime != Regime::Physical {
        return Err(Error::InvalidArgument("short-time monitor needs the physical regime".into()));
    }
    let stepper = Stepper::new(config.clone())?;
    let s0 = stepper.initial_state(config.initial_datum()?)?;
    let mut series = Vec::new();
    stepper.run(s0, |s| {
        series.push((s.time, s.time.powf(0.25) * s.f.lp_norm(4.0 / 3.0, 0.0)));
    })?;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::c1;
    use std::f64::consts::PI;

    fn small(regime: Regime) -> SimConfig {
        SimConfig {
            n: 64,
            half_width: 8.0,
            mass: 1.0,
            dt: 1e-3,
            t_end: 0.05,
            regime,
            ..SimConfig::default()
        }
    }

    #[test]
    fn zero_is_fixed_point() {
        for regime in [Regime::Physical, Regime::Rescaled] {
            let st = Stepper::new(small(regime)).unwrap();
            let s0 = st.initial_state(Field2D::zeros(*st.grid())).unwrap();
            let s1 = st.step(&s0, 1e-3).unwrap();
            assert_eq!(s1.f.linf_norm(), 0.0);
        }
    }

    #[test]
    fn second_moment_slope_at_start() {
        let cfg = SimConfig {
            n: 128,
            half_width: 10.0,
            dt: 1e-4,
            t_end: 1e-3,
            ..small(Regime::Physical)
        };
        let rec = run(&cfg).unwrap();
        let s = &rec.samples;
        let slope = (s.last().unwrap().m2 - s[0].m2) / (s.last().unwrap().t - s[0].t);
        assert!((slope / c1(1.0) - 1.0).abs() < 0.01, "{slope}");
    }

    #[test]
    fn heat_variance_growth() {
        let cfg = SimConfig {
            n: 128,
            half_width: 10.0,
            dt: 1e-2,
            t_end: 0.5,
            attraction: false,
            ..small(Regime::Physical)
        };
        let rec = run(&cfg).unwrap();
        let first = rec.samples[0];
        let last = rec.samples.last().unwrap();
        let want = first.m2 + 4.0 * first.mass * last.t;
        assert!((last.m2 / want - 1.0).abs() < 1e-3);
    }

    #[test]
    fn cfl_violation_is_reported() {
        let cfg = SimConfig {
            n: 64,
            half_width: 8.0,
            mass: 4.0 * PI,
            sigma: 0.3,
            dt: 10.0,
            t_end: 20.0,
            ..SimConfig::default()
        };
        let st = Stepper::new(cfg.clone()).unwrap();
        let s0 = st.initial_state(cfg.initial_datum().unwrap()).unwrap();
        assert!(matches!(st.step(&s0, 10.0), Err(Error::Cfl { .. })));
    }

    #[test]
    fn regime_is_checked() {
        let st = Stepper::new(small(Regime::Physical)).unwrap();
        let s0 = st.initial_state(small(Regime::Physical).initial_datum().unwrap()).unwrap();
        assert!(st.step_rescaled(&s0, 1e-3).is_err());
        assert!(st.step_physical(&s0, 1e-3).is_ok());
    }

    #[test]
    fn record_times_increase() {
        let rec = run(&SimConfig { record_every: 3, ..small(Regime::Rescaled) }).unwrap();
        assert!(rec.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert!((rec.samples.last().unwrap().t - 0.05).abs() < 1e-12);
    }

    #[test]
    fn zero_field_short_time_series() {
        let cfg = small(Regime::Physical);
        let st = Stepper::new(cfg.clone()).unwrap();
        let s0 = st.initial_state(Field2D::zeros(*st.grid())).unwrap();
        let mut vals = Vec::new();
        st.run(s0, |s| vals.push(s.f.lp_norm(4.0 / 3.0, 0.0))).unwrap();
        assert!(vals.iter().all(|v| *v == 0.0));
    }
}
