use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use kslab::commands;
use kslab::config::{load_over, RunConfig};
use kslab::io::write_json;
use kslab::scenario::{run_scenario, Scenario, ScenarioReport};
use kslab_core::{ProfileOptions, Regime};
use serde_json::json;

/// Simulation and verification toolkit for the 2D Keller-Segel equation.
#[derive(Debug, Parser)]
#[command(name = "kslab", version)]
struct Cli {
    /// JSON configuration applied over the command's defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root; every command writes into its own subdirectory.
    #[arg(long, global = true, env = "KSLAB_OUT", default_value = "kslab-out")]
    out: PathBuf,
    /// Worker threads for independent scenarios, masses or modes.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Seed for every random draw (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured simulation (physical regime unless configured).
    Simulate,
    /// Run the configured simulation in the rescaled regime.
    Rescaled,
    /// Compute self-similar profiles.
    Profile {
        /// One or more masses, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "12.566370614359172")]
        mass: Vec<f64>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Leading eigenvalues of the linearized operator per angular mode.
    Spectrum {
        #[arg(long, default_value_t = 4.0 * std::f64::consts::PI)]
        mass: f64,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        modes: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
    /// Evaluate every functional inequality on the configured datum.
    VerifyInequalities,
    /// Run a named scenario, or `all`.
    Scenario { name: String },
}

fn config_over(cli: &Cli, base: RunConfig) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => load_over(p, &base)?,
        None => base,
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn print(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Simulate | Command::Rescaled => {
            let cfg = config_over(cli, RunConfig::default())?;
            let (dir, regime) = match cli.command {
                Command::Rescaled => ("rescaled", Some(Regime::Rescaled)),
                _ => ("simulate", None),
            };
            print(&commands::simulate(&cfg, regime, &cli.out.join(dir))?);
            Ok(true)
        }
        Command::Profile {
            mass,
            omega,
            tol,
            max_iters,
        } => {
            let cfg = config_over(cli, RunConfig::default())?;
            let opts = ProfileOptions {
                omega: omega.unwrap_or(cfg.profile.omega),
                tol: tol.unwrap_or(cfg.profile.tol),
                max_iters: max_iters.unwrap_or(cfg.profile.max_iters),
            };
            print(&commands::profiles(&cfg, mass, opts, cli.jobs, &cli.out.join("profile"))?);
            Ok(true)
        }
        Command::Spectrum { mass, modes, count } => {
            let mut base = RunConfig::default();
            base.profile.tol = 1e-12;
            let cfg = config_over(cli, base)?;
            print(&commands::spectrum(&cfg, *mass, modes, *count, cli.jobs, &cli.out.join("spectrum"))?);
            Ok(true)
        }
        Command::VerifyInequalities => {
            let cfg = config_over(cli, RunConfig::default())?;
            let (ok, v) = commands::verify_inequalities(&cfg, &cli.out.join("verify-inequalities"))?;
            print(&v);
            Ok(ok)
        }
        Command::Scenario { name } => {
            let list: Vec<Scenario> = if name == "all" {
                Scenario::ALL.to_vec()
            } else {
                vec![name.parse()?]
            };
            let configs = list
                .iter()
                .map(|s| config_over(cli, s.defaults()).with_context(|| format!("configuring {s}")))
                .collect::<Result<Vec<_>>>()?;
            let jobs: Vec<(Scenario, RunConfig)> = list.into_iter().zip(configs).collect();
            let reports = commands::parallel_map(&jobs, cli.jobs, |(s, cfg)| {
                run_scenario(*s, cfg, Some(&cli.out.join(s.name()))).with_context(|| format!("scenario {s}"))
            });
            let reports = reports.into_iter().collect::<Result<Vec<ScenarioReport>>>()?;
            let failures: Vec<_> = reports
                .iter()
                .flat_map(|r| {
                    r.failures()
                        .into_iter()
                        .map(|c| json!({"scenario": r.scenario, "check": c.name, "value": c.value, "condition": c.condition}))
                })
                .collect();
            for r in &reports {
                eprintln!("{:<24} {}", r.scenario, if r.passed { "PASS" } else { "FAIL" });
            }
            if reports.len() > 1 {
                write_json(&cli.out.join("scenarios.json"), &reports)?;
            }
            print(&json!({ "passed": failures.is_empty(), "failures": failures, "reports": reports }));
            Ok(failures.is_empty())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
