//! Configuration, file formats, rate fitting and scenarios for the
//! Keller-Segel toolkit; the `kslab` binary is a thin layer over this crate.

pub mod commands;
pub mod config;
pub mod fit;
pub mod io;
pub mod scenario;

pub use config::{parse_config, ConfigFile, RunConfig};
pub use fit::{fit_decay_rate, DecayFit};
pub use scenario::{run_scenario, Check, Scenario, ScenarioReport, Source};
