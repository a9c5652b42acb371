//! JSON run configuration.
//!
//! Every [`SimConfig`] field in snake_case, plus the initial-datum dump path,
//! the random seed and the profile-solver options. All keys are optional;
//! a file is applied over a base configuration, and unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kslab_core::{KernelRule, ProfileOptions, Regime, SimConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeName {
    Physical,
    Rescaled,
}

impl From<RegimeName> for Regime {
    fn from(r: RegimeName) -> Self {
        match r {
            RegimeName::Physical => Regime::Physical,
            RegimeName::Rescaled => Regime::Rescaled,
        }
    }
}

impl From<Regime> for RegimeName {
    fn from(r: Regime) -> Self {
        match r {
            Regime::Physical => RegimeName::Physical,
            Regime::Rescaled => RegimeName::Rescaled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    Spectral,
    CellAverage,
}

impl From<KernelName> for KernelRule {
    fn from(k: KernelName) -> Self {
        match k {
            KernelName::Spectral => KernelRule::Spectral,
            KernelName::CellAverage => KernelRule::CellAverage,
        }
    }
}

impl From<KernelRule> for KernelName {
    fn from(k: KernelRule) -> Self {
        match k {
            KernelRule::Spectral => KernelName::Spectral,
            KernelRule::CellAverage => KernelName::CellAverage,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub half_width: Option<f64>,
    pub mass: Option<f64>,
    pub sigma: Option<f64>,
    pub center: Option<[f64; 2]>,
    /// Field dump (`.bin` with its `.json` sidecar) used instead of the
    /// Gaussian datum.
    pub init_path: Option<PathBuf>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub regime: Option<RegimeName>,
    pub record_every: Option<usize>,
    pub neg_tol: Option<f64>,
    pub blowup_linf_factor: Option<f64>,
    pub adaptive_dt: Option<bool>,
    pub kernel: Option<KernelName>,
    pub attraction: Option<bool>,
    pub seed: Option<u64>,
    pub omega: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
}

/// A validated configuration with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub init_path: Option<PathBuf>,
    pub seed: u64,
    pub profile: ProfileOptions,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            init_path: None,
            seed: DEFAULT_SEED,
            profile: ProfileOptions::default(),
        }
    }
}

impl RunConfig {
    /// The configuration as a full JSON document (every key present).
    pub fn to_file(&self) -> ConfigFile {
        let s = &self.sim;
        ConfigFile {
            n: Some(s.n),
            half_width: Some(s.half_width),
            mass: Some(s.mass),
            sigma: Some(s.sigma),
            center: Some(s.center),
            init_path: self.init_path.clone(),
            dt: Some(s.dt),
            t_end: Some(s.t_end),
            regime: Some(s.regime.into()),
            record_every: Some(s.record_every),
            neg_tol: Some(s.neg_tol),
            blowup_linf_factor: Some(s.blowup_linf_factor),
            adaptive_dt: Some(s.adaptive_dt),
            kernel: Some(s.kernel.into()),
            attraction: Some(s.attraction),
            seed: Some(self.seed),
            omega: Some(self.profile.omega),
            tol: Some(self.profile.tol),
            max_iters: Some(self.profile.max_iters),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive, got {v}");
    }
    Ok(v)
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("malformed configuration")
    }

    /// Overrides `base` with every key present, then validates the result.
    pub fn apply(&self, base: &RunConfig) -> Result<RunConfig> {
        let mut out = base.clone();
        let s = &mut out.sim;
        if let Some(n) = self.n {
            if n < 16 || !n.is_power_of_two() {
                bail!("n must be a power of two of at least 16, got {n}");
            }
            s.n = n;
        }
        if let Some(v) = self.half_width {
            s.half_width = positive("half_width", v)?;
        }
        if let Some(v) = self.mass {
            s.mass = positive("mass", v)?;
        }
        if let Some(v) = self.sigma {
            s.sigma = positive("sigma", v)?;
        }
        if let Some(c) = self.center {
            if !c.iter().all(|x| x.is_finite()) {
                bail!("center must be finite, got {c:?}");
            }
            s.center = c;
        }
        if let Some(v) = self.dt {
            s.dt = positive("dt", v)?;
        }
        if let Some(v) = self.t_end {
            s.t_end = positive("t_end", v)?;
        }
        if let Some(r) = self.regime {
            s.regime = r.into();
        }
        if let Some(k) = self.record_every {
            if k == 0 {
                bail!("record_every must be at least 1");
            }
            s.record_every = k;
        }
        if let Some(v) = self.neg_tol {
            if !(v >= 0.0 && v.is_finite()) {
                bail!("neg_tol must be nonnegative, got {v}");
            }
            s.neg_tol = v;
        }
        if let Some(v) = self.blowup_linf_factor {
            if !(v > 1.0 && v.is_finite()) {
                bail!("blowup_linf_factor must exceed 1, got {v}");
            }
            s.blowup_linf_factor = v;
        }
        if let Some(b) = self.adaptive_dt {
            s.adaptive_dt = b;
        }
        if let Some(k) = self.kernel {
            s.kernel = k.into();
        }
        if let Some(b) = self.attraction {
            s.attraction = b;
        }
        if let Some(p) = &self.init_path {
            out.init_path = Some(p.clone());
        }
        if let Some(seed) = self.seed {
            out.seed = seed;
        }
        if let Some(w) = self.omega {
            if !(w > 0.0 && w <= 1.0) {
                bail!("omega must be in (0, 1], got {w}");
            }
            out.profile.omega = w;
        }
        if let Some(v) = self.tol {
            out.profile.tol = positive("tol", v)?;
        }
        if let Some(k) = self.max_iters {
            if k == 0 {
                bail!("max_iters must be at least 1");
            }
            out.profile.max_iters = k;
        }
        out.sim.validate()?;
        Ok(out)
    }
}

/// Reads, validates and fills defaults.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    load_over(path, &RunConfig::default())
}

/// Like [`parse_config`] but over a caller-supplied base.
pub fn load_over(path: &Path, base: &RunConfig) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ConfigFile::from_json(&text)?
        .apply(base)
        .with_context(|| format!("invalid configuration {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        ConfigFile::from_json(text)?.apply(&RunConfig::default())
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse(r#"{"mass": 12.566, "regime": "rescaled"}"#).unwrap();
        assert_eq!(c.sim.mass, 12.566);
        assert_eq!(c.sim.regime, Regime::Rescaled);
        assert_eq!(c.sim.n, SimConfig::default().n);
        assert_eq!(c.seed, DEFAULT_SEED);
    }

    #[test]
    fn field_level_errors() {
        let e = parse(r#"{"mass": -1}"#).unwrap_err().to_string();
        assert!(e.contains("mass must be positive"), "{e}");
        let e = parse(r#"{"n": 100}"#).unwrap_err().to_string();
        assert!(e.contains("power of two"), "{e}");
        let e = parse(r#"{"mas": 1}"#).unwrap_err();
        assert!(format!("{e:#}").contains("unknown field"), "{e:#}");
        assert!(parse(r#"{"regime": "sideways"}"#).is_err());
        assert!(parse(r#"{"omega": 0}"#).is_err());
    }

    #[test]
    fn full_document_round_trips() {
        let c = parse(r#"{"kernel": "cell_average", "center": [1.0, -2.0], "seed": 3}"#).unwrap();
        let text = serde_json::to_string(&c.to_file()).unwrap();
        assert_eq!(parse(&text).unwrap(), c);
    }
}
