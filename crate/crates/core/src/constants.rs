//! Closed-form constants of the mass-dependent a priori estimates.

use std::f64::consts::{E, PI};

/// Critical mass `8π`.
pub const CRITICAL_MASS: f64 = 8.0 * PI;

/// Euler-Mascheroni constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `∫_{[-1/2,1/2]²} log|z| dz = -3/2 + π/4 - (log 2)/2`.
///
/// The cell average of `log|z|/2π` over an `h×h` cell centred at the origin
/// is `(log h + CELL_LOG_AVERAGE)/2π`.
pub const CELL_LOG_AVERAGE: f64 = -1.061_175_426_882_524_3;

/// Second-moment slope `C₁(M) = 4M(1 − M/8π)`.
pub fn c1(mass: f64) -> f64 {
    4.0 * mass * (1.0 - mass / CRITICAL_MASS)
}

/// Log-HLS constant `C₂(M) = M(1 + log π − log M)`.
pub fn c2(mass: f64) -> f64 {
    mass * (1.0 + PI.ln() - mass.ln())
}

/// `C₃(M) = 1/(1 − M/8π)`.
pub fn c3(mass: f64) -> f64 {
    1.0 / (1.0 - mass / CRITICAL_MASS)
}

/// `C₄(M) = C₃ C₂ M/8π`.
pub fn c4(mass: f64) -> f64 {
    c3(mass) * c2(mass) * mass / CRITICAL_MASS
}

/// `C₅(M) = 2M log(2π) + 2/e`.
pub fn c5(mass: f64) -> f64 {
    2.0 * mass * (2.0 * PI).ln() + 2.0 / E
}

/// Time at which the linear second-moment law `M₂(t) = C₁ t + M₂,₀` reaches
/// zero, `M₂,₀/|C₁| = 2π M₂,₀ / [M (M − 8π)]`. Only meaningful for `M > 8π`.
pub fn second_moment_vanish_time(mass: f64, m2_initial: f64) -> f64 {
    2.0 * PI * m2_initial / (mass * (mass - CRITICAL_MASS))
}

/// The stationary rescaled second moment `2M(1 − M/8π)`, root of
/// `4M − M²/2π − 2M₂ = 0`.
pub fn stationary_second_moment(mass: f64) -> f64 {
    2.0 * mass * (1.0 - mass / CRITICAL_MASS)
}

/// Uniform rescaled moment bound `max((k−1)^{k/2} M, M_k(g₀))`.
pub fn moment_bound(k: f64, mass: f64, initial_moment: f64) -> f64 {
    ((k - 1.0).powf(k / 2.0) * mass).max(initial_moment)
}
