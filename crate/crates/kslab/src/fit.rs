//! Exponential decay-rate fits.

use anyhow::{bail, Result};
use kslab_core::stats::fit_line;
use serde::Serialize;

pub const MIN_FIT_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Slope of `log d` against `t`.
    pub rate: f64,
    /// `log d` at `t = 0`.
    pub intercept: f64,
    /// RMS residual of the line in `log d`.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least-squares fit of `log d(t) = rate·t + intercept` over the samples with
/// `t` in `window` (inclusive).
pub fn fit_decay_rate(times: &[f64], distances: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != distances.len() {
        bail!("{} times but {} distances", times.len(), distances.len());
    }
    let (lo, hi) = window;
    if !(lo < hi) {
        bail!("empty fit window [{lo}, {hi}]");
    }
    let mut t = Vec::new();
    let mut y = Vec::new();
    for (&ti, &di) in times.iter().zip(distances) {
        if ti < lo || ti > hi {
            continue;
        }
        if !(di > 0.0 && di.is_finite()) {
            bail!("distance {di} at t = {ti} is not positive");
        }
        t.push(ti);
        y.push(di.ln());
    }
    if t.len() < MIN_FIT_SAMPLES {
        bail!("only {} samples in [{lo}, {hi}], need {MIN_FIT_SAMPLES}", t.len());
    }
    let Some(line) = fit_line(&t, &y) else {
        bail!("degenerate fit window: all samples at one time");
    };
    Ok(DecayFit {
        rate: line.slope,
        intercept: line.intercept,
        residual: line.residual,
        window,
        samples: t.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..=40).map(|k| k as f64 * 0.2).collect()
    }

    #[test]
    fn pure_exponential() {
        let t = grid();
        let d: Vec<f64> = t.iter().map(|t| 3.0 * (-t).exp()).collect();
        let f = fit_decay_rate(&t, &d, (0.0, 8.0)).unwrap();
        assert!((f.rate + 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert_eq!(f.samples, 41);
    }

    #[test]
    fn tiny_noise_on_fast_decay() {
        let t = grid();
        let d: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(k, t)| (-2.0 * t).exp() + if k % 2 == 0 { 1e-12 } else { -1e-12 })
            .collect();
        let f = fit_decay_rate(&t, &d, (2.0, 6.0)).unwrap();
        assert!((f.rate + 2.0).abs() < 1e-6, "{}", f.rate);
    }

    #[test]
    fn constant_and_invalid_series() {
        let t = grid();
        let f = fit_decay_rate(&t, &vec![0.5; t.len()], (1.0, 5.0)).unwrap();
        assert!(f.rate.abs() < 1e-12);
        let mut d = vec![1.0; t.len()];
        d[15] = 0.0;
        assert!(fit_decay_rate(&t, &d, (2.0, 4.0)).is_err());
        assert!(fit_decay_rate(&t, &d, (0.0, 0.5)).is_err());
        assert!(fit_decay_rate(&t, &d[..3], (0.0, 8.0)).is_err());
    }
}
