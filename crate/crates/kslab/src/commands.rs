//! The non-scenario subcommands: plain runs, profiles, spectra and
//! inequality checks. Each returns a JSON summary and writes its files under
//! the given directory.

use std::path::Path;

use anyhow::{bail, Result};
use kslab_core::functionals::{check_inequalities, InequalityReport, Verdict};
use kslab_core::linearization::{assemble_linearized, default_linearization_grid, eigen_spectrum};
use kslab_core::potential::log_kernel_convolve;
use kslab_core::profile::envelope_check;
use kslab_core::{solve_profile, ProfileOptions, RadialField, RadialGrid, Regime, Stepper};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::io;
use crate::scenario::initial_datum;

/// Applies `f` to every item on up to `jobs` threads; results keep input
/// order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let r = f(&items[k]);
                slots.lock().expect("no panics while holding the lock")[k] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("threads joined")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

/// Runs the configured simulation; `regime` overrides the configured one.
pub fn simulate(cfg: &RunConfig, regime: Option<Regime>, out: &Path) -> Result<Value> {
    let mut sim = cfg.sim.clone();
    if let Some(r) = regime {
        sim.regime = r;
    }
    let stepper = Stepper::new(sim.clone())?;
    let f0 = initial_datum(cfg)?;
    io::write_field(&out.join("initial"), &f0, 0.0)?;
    let rec = stepper.run(stepper.initial_state(f0)?, |_| {})?;
    io::write_record(&out.join("trajectory.csv"), &rec)?;
    io::write_field(&out.join("final"), &rec.final_state.f, rec.final_state.time)?;
    let first = rec.samples[0];
    let last = *rec.samples.last().expect("initial sample");
    let mut file = cfg.to_file();
    file.regime = Some(sim.regime.into());
    let summary = json!({
        "config": file,
        "steps": rec.final_state.steps,
        "final_time": rec.final_state.time,
        "mass_drift": (last.mass - first.mass).abs() / first.mass,
        "blowup": rec.blowup.as_ref().map(|b| json!({"time": b.time, "reason": b.reason})),
        "initial": sample_json(&first),
        "final": sample_json(&last),
        "files": ["initial.bin", "initial.json", "trajectory.csv", "final.bin", "final.json"],
    });
    io::write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn sample_json(s: &kslab_core::dynamics::DiagnosticSample) -> Value {
    let names = kslab_core::dynamics::DiagnosticSample::CSV_HEADER;
    Value::Object(names.iter().zip(s.as_row()).map(|(k, v)| (k.to_string(), json!(v))).collect())
}

fn radial_rows(g: &RadialField, u: &RadialField) -> Vec<Vec<f64>> {
    g.rgrid()
        .nodes()
        .iter()
        .zip(g.values().iter().zip(u.values()))
        .map(|(&r, (&g, &u))| vec![r, g, u])
        .collect()
}

/// Profiles for every mass (parallel over `jobs`), each with its envelope
/// check, a radial CSV and a 2D dump on the configured grid.
pub fn profiles(cfg: &RunConfig, masses: &[f64], opts: ProfileOptions, jobs: usize, out: &Path) -> Result<Value> {
    let grid = cfg.sim.grid()?;
    let results = parallel_map(masses, jobs, |&m| -> Result<Value> {
        let p = solve_profile(m, &RadialGrid::for_mass(m), opts)?;
        let env = envelope_check(&p, 0.2)?;
        let stem = format!("profile_M{m:.6}");
        io::write_table(&out.join(format!("{stem}.csv")), &["r", "G", "U"], &radial_rows(&p.g, &p.u))?;
        io::write_field(&out.join(&stem), &p.to_grid(grid)?.with_label(format!("profile M={m}")), 0.0)?;
        Ok(json!({
            "mass": p.mass,
            "z": p.z,
            "u_origin": p.u_origin,
            "center_value": p.center_value(),
            "picard_iters": p.picard_iters,
            "residual_l1": p.residual_l1,
            "stationary_residual": p.stationary_residual,
            "m2": p.m2,
            "rescaled_energy": p.rescaled_energy(),
            "rescaled_dissipation": p.rescaled_dissipation(),
            "envelope": {"eps": env.eps, "c1": env.c1, "c2": env.c2, "pass": env.pass},
            "nodes": p.rgrid().len(),
            "r_max": p.rgrid().r_max(),
            "files": [format!("{stem}.csv"), format!("{stem}.bin"), format!("{stem}.json")],
        }))
    });
    let list = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = json!({ "omega": opts.omega, "tol": opts.tol, "profiles": list });
    io::write_json(&out.join("profiles.json"), &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct VectorHeader<'a> {
    nodes: usize,
    r_max: f64,
    layout: &'a str,
    label: String,
}

/// Rightmost `count` eigenpairs of every requested mode (parallel over
/// `jobs`). Eigenvectors are written as little-endian radial samples.
pub fn spectrum(cfg: &RunConfig, mass: f64, modes: &[usize], count: usize, jobs: usize, out: &Path) -> Result<Value> {
    if count == 0 {
        bail!("count must be at least 1");
    }
    let rg = default_linearization_grid();
    let profile = solve_profile(mass, &rg, cfg.profile)?;
    let results = parallel_map(modes, jobs, |&m| -> Result<Value> {
        let op = assemble_linearized(&profile, m)?;
        let s = eigen_spectrum(&op, count)?;
        let mut pairs = Vec::new();
        for (k, p) in s.pairs.iter().enumerate() {
            let file = match &p.vector {
                Some(v) => {
                    let stem = out.join(format!("eigvec_m{m}_{k}"));
                    let bytes: Vec<u8> = v.values().iter().flat_map(|x| x.to_le_bytes()).collect();
                    std::fs::create_dir_all(out)?;
                    std::fs::write(stem.with_extension("bin"), bytes)?;
                    io::write_json(
                        &stem.with_extension("json"),
                        &VectorHeader {
                            nodes: rg.len(),
                            r_max: rg.r_max(),
                            layout: "cell",
                            label: format!("mode {m} eigenvector {k}, lambda = {}", p.value),
                        },
                    )?;
                    Some(format!("eigvec_m{m}_{k}.bin"))
                }
                None => None,
            };
            pairs.push(json!({
                "value": p.value,
                "imag": p.imag,
                "real": p.is_real(),
                "residual": p.residual,
                "vector": file,
            }));
        }
        Ok(json!({ "mode": m, "pairs": pairs, "all_real": s.all_real(), "max_residual": s.max_residual() }))
    });
    let list = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut all: Vec<f64> = list
        .iter()
        .flat_map(|m| m["pairs"].as_array().into_iter().flatten().filter_map(|p| p["value"].as_f64()))
        .collect();
    all.sort_by(|a, b| b.total_cmp(a));
    let summary = json!({
        "mass": mass,
        "nodes": rg.len(),
        "r_max": rg.r_max(),
        "modes": list,
        "ranked": all,
        "third_ranked": all.get(2),
    });
    io::write_json(&out.join("spectrum.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct ReportJson {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub abs_tol: f64,
    pub pass: bool,
    pub verdict: String,
    pub witness: Vec<(String, String)>,
}

impl From<&InequalityReport> for ReportJson {
    fn from(r: &InequalityReport) -> Self {
        let verdict = match &r.verdict {
            Verdict::Pass => "pass".to_string(),
            Verdict::Fail => "fail".to_string(),
            Verdict::Recorded => "recorded".to_string(),
            Verdict::Skipped(why) => format!("skipped: {why}"),
        };
        Self {
            name: r.name,
            lhs: r.lhs,
            rhs: r.rhs,
            slack: r.slack,
            abs_tol: r.abs_tol,
            pass: r.ok(),
            verdict,
            witness: r.witness.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }
}

/// Every inequality on the configured initial datum.
pub fn verify_inequalities(cfg: &RunConfig, out: &Path) -> Result<(bool, Value)> {
    let f = initial_datum(cfg)?;
    let pot = log_kernel_convolve(&f)?;
    let reports = check_inequalities(&f, &pot)?;
    let list: Vec<ReportJson> = reports.iter().map(ReportJson::from).collect();
    let ok = list.iter().all(|r| r.pass);
    let value = serde_json::to_value(&list)?;
    io::write_json(&out.join("inequalities.json"), &value)?;
    Ok((ok, value))
}
