//! Numerical core for the two-dimensional parabolic-elliptic Keller-Segel
//! system
//!
//! ```text
//!   ∂t f = Δf − ∇·(f ∇c),    c = −κ ∗ f,    κ(z) = log|z| / 2π
//! ```
//!
//! and its self-similar rescaling `∂t g = Δg + ∇·(g x − g ∇u)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`field`], [`radial`], [`interp`]: grids, densities, quadrature and norms.
//! * [`fft`], [`spectral`]: FFT plumbing and pseudo-spectral derivatives.
//! * [`potential`]: free-space convolution with the log kernel and its gradient.
//! * [`functionals`]: entropies, free energies, dissipations and inequality checks.
//! * [`dynamics`]: IMEX time stepping, blow-up detection and trajectory recording.
//! * [`profile`]: the self-similar profile `G_M` by damped Picard iteration.
//! * [`linearization`]: per-mode discretization of the linearized operator and its spectrum.
//!
//! Everything here is pure computation; file formats and the command line
//! live in the `kslab` crate.

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod interp;
pub mod linearization;
pub mod potential;
pub mod profile;
pub mod radial;
pub mod spectral;
pub mod stats;

pub use dynamics::{Regime, SimConfig, SimState, Stepper, TrajectoryRecord};
pub use error::{Error, Result};
pub use field::{gaussian_datum, Field2D};
pub use grid::{make_grid, Grid2D};
pub use potential::{ConvolutionEngine, KernelRule, PotentialPair};
pub use profile::{solve_profile, ProfileOptions, ProfileResult};
pub use radial::{RadialField, RadialGrid};
