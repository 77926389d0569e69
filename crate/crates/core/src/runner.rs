//! Executes a validated configuration and writes its run directory.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::besov::{friedrichs_iterate, pair_distance, FriedrichsResult};
use crate::config::{Mode, RunConfig};
use crate::diagnostics::{evolve_flowmap, verify_alongflow_ode};
use crate::error::{Error, Result};
use crate::initial::{generate_initial_data, InitialData};
use crate::model::audit_coefficient_identities;
use crate::output::{
    write_audit, write_empty_timeseries, write_friedrichs, write_manifest, write_snapshot,
    write_sweep_index, write_timeseries, Manifest, SweepRow, Versions,
};
use crate::spectral::SpectralWorkspace;
use crate::timestep::{RunOutcome, RunStatus, Simulation};

/// What a finished command reports back to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub status: RunStatus,
    pub final_time: f64,
    pub dir: PathBuf,
    /// False when a check built into the mode failed (audit identities).
    pub checks_passed: bool,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if !self.checks_passed {
            1
        } else {
            self.status.exit_code()
        }
    }
}

/// Generates the initial data and integrates a simulate-mode configuration.
pub fn simulate(config: &RunConfig) -> Result<(InitialData, RunOutcome)> {
    let init = generate_initial_data(&config.initial, config.grid)?;
    let mut sim = Simulation::new(config.grid, config.coefficients(), config.frame, config.step);
    let outcome = sim.integrate(init.state.clone(), &config.plan())?;
    Ok((init, outcome))
}

/// Evenly spaced flow-map seeds over the configured range (default: the whole period).
pub fn flowmap_seeds(config: &RunConfig) -> Vec<f64> {
    let n = config.flowmap_seeds;
    let (a, b) = config.flowmap_range.unwrap_or((0.0, config.grid.length()));
    let h = (b - a) / n as f64;
    (0..n).map(|k| a + (k as f64 + 0.5) * h).collect()
}

fn base_manifest(config: &RunConfig, warnings: Vec<String>) -> Manifest {
    Manifest {
        config_hash: config.hash(),
        mode: config.mode.as_str().into(),
        status: RunStatus::Completed.as_str().into(),
        final_time: 0.0,
        breaking_time: None,
        steps: 0,
        abort_reason: None,
        grid: config.grid.into(),
        coefficients: config.coefficients().tuple(),
        warnings,
        versions: Versions::default(),
        summary: json!({}),
    }
}

fn fill_outcome(m: &mut Manifest, out: &RunOutcome) {
    m.status = out.status.as_str().into();
    m.final_time = out.final_time;
    m.steps = out.steps;
    m.abort_reason = out.abort_reason.clone();
    if out.status == RunStatus::BreakingDetected {
        m.breaking_time = out.records.last().map(|r| r.t);
    }
}

fn prepare_dir(dir: &Path) -> Result<PathBuf> {
    let snaps = dir.join("snapshots");
    fs::create_dir_all(&snaps).map_err(|e| Error::io(&snaps, e))?;
    Ok(snaps)
}

fn write_snapshots(states: &[crate::model::State], snaps: &Path) -> Result<()> {
    for (i, s) in states.iter().enumerate() {
        write_snapshot(s, &snaps.join(format!("snapshot_{i:04}.csv")))?;
    }
    Ok(())
}

/// Runs `config` and writes `manifest.json`, `timeseries.csv`, `snapshots/` and the
/// mode-specific table into `dir`.
pub fn execute(config: &RunConfig, dir: &Path) -> Result<RunSummary> {
    match config.mode {
        Mode::Simulate => execute_simulate(config, dir),
        Mode::Friedrichs => execute_friedrichs(config, dir),
        Mode::Audit => execute_audit(config, dir),
        Mode::Sweep => execute_sweep(config, dir),
    }
}

fn execute_simulate(config: &RunConfig, dir: &Path) -> Result<RunSummary> {
    let (init, out) = simulate(config)?;
    let snaps = prepare_dir(dir)?;
    let mut m = base_manifest(config, init.warnings.clone());
    fill_outcome(&mut m, &out);
    let mut summary = serde_json::Map::new();
    summary.insert("initial_energy".into(), json!(init.energy));
    summary.insert("initial_scale".into(), json!(init.scale));
    if let Some(b) = &out.slope_bounds {
        summary.insert("slope_bounds".into(), json!(b));
    }
    if config.flowmap_seeds > 0 {
        let flow = evolve_flowmap(&out, &flowmap_seeds(config))?;
        let mut fm = serde_json::Map::new();
        fm.insert("seeds".into(), json!(flow.seeds.len()));
        fm.insert("ordered".into(), json!(flow.is_monotone()));
        if out.coefficients.is_sigma0_zero_vorticity() {
            let rep = verify_alongflow_ode(&out, &flow)?;
            fm.insert("max_relative_rho_mismatch".into(), json!(rep.max_relative_mismatch));
            fm.insert("rho_sign_preserved".into(), json!(rep.sign_preserved));
        }
        summary.insert("flowmap".into(), serde_json::Value::Object(fm));
    }
    m.summary = serde_json::Value::Object(summary);
    write_timeseries(&out, &dir.join("timeseries.csv"))?;
    write_snapshots(&out.snapshots, &snaps)?;
    write_manifest(&m, &dir.join("manifest.json"))?;
    Ok(RunSummary {
        status: out.status,
        final_time: out.final_time,
        dir: dir.to_path_buf(),
        checks_passed: true,
    })
}

/// Friedrichs iteration together with a direct run on the same fixed step.
pub fn friedrichs_with_reference(config: &RunConfig) -> Result<(FriedrichsResult, RunOutcome, f64)> {
    let init = generate_initial_data(&config.initial, config.grid)?;
    let c = config.coefficients();
    let res = friedrichs_iterate(&init.state, &c, &config.friedrichs)?;
    let mut sim = Simulation::new(config.grid, c, crate::model::Frame::Translated, config.step);
    let mut plan = config.plan();
    plan.t_final = config.friedrichs.t_final;
    plan.diag_interval = config.friedrichs.t_final;
    plan.fixed_dt = Some(res.dt);
    plan.snapshot_interval = None;
    plan.snapshot_times.clear();
    let direct = sim.integrate(init.state, &plan)?;
    let dist = match direct.final_state() {
        Some(s) if direct.status == RunStatus::Completed => {
            let mut ws = SpectralWorkspace::new(config.grid);
            pair_distance(&mut ws, res.final_iterate(), s, res.s)
        }
        _ => f64::NAN,
    };
    Ok((res, direct, dist))
}

fn execute_friedrichs(config: &RunConfig, dir: &Path) -> Result<RunSummary> {
    let (res, direct, dist) = friedrichs_with_reference(config)?;
    let snaps = prepare_dir(dir)?;
    let mut m = base_manifest(config, Vec::new());
    fill_outcome(&mut m, &direct);
    m.summary = json!({
        "dt": res.dt,
        "steps": res.n_steps,
        "s": res.s,
        "differences": res.differences,
        "ratios": res.ratios(),
        "distance_to_direct": dist,
    });
    write_friedrichs(&res, &dir.join("friedrichs.csv"))?;
    write_timeseries(&direct, &dir.join("timeseries.csv"))?;
    write_snapshots(&[res.final_iterate().clone()], &snaps)?;
    write_manifest(&m, &dir.join("manifest.json"))?;
    Ok(RunSummary {
        status: direct.status,
        final_time: direct.final_time,
        dir: dir.to_path_buf(),
        checks_passed: true,
    })
}

fn execute_audit(config: &RunConfig, dir: &Path) -> Result<RunSummary> {
    let report = audit_coefficient_identities(&config.audit_a);
    prepare_dir(dir)?;
    let mut m = base_manifest(config, Vec::new());
    m.summary = json!({
        "tolerance": report.tolerance,
        "passed": report.passed(),
        "max_residuals": report.max_residuals(),
    });
    write_audit(&report, &dir.join("audit.csv"))?;
    write_empty_timeseries(&dir.join("timeseries.csv"))?;
    write_manifest(&m, &dir.join("manifest.json"))?;
    Ok(RunSummary {
        status: RunStatus::Completed,
        final_time: 0.0,
        dir: dir.to_path_buf(),
        checks_passed: report.passed(),
    })
}

fn execute_sweep(config: &RunConfig, dir: &Path) -> Result<RunSummary> {
    let points = config.sweep_points()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let results: Vec<Result<RunSummary>> = points
        .par_iter()
        .enumerate()
        .map(|(i, (_, cfg))| execute_simulate(cfg, &dir.join(format!("point_{i:04}"))))
        .collect();
    let keys: Vec<String> = config.sweep.iter().map(|(k, _)| k.clone()).collect();
    let mut rows = Vec::with_capacity(points.len());
    let mut worst = RunStatus::Completed;
    for (i, ((assign, _), res)) in points.iter().zip(results).enumerate() {
        let values = assign.iter().map(|(_, v)| v.to_string()).collect();
        let (status, final_time) = match res {
            Ok(s) => (s.status, s.final_time),
            Err(e) => return Err(e),
        };
        if status.exit_code() > worst.exit_code() {
            worst = status;
        }
        rows.push(SweepRow {
            dir: format!("point_{i:04}"),
            values,
            status: status.as_str().into(),
            final_time,
        });
    }
    write_sweep_index(&keys, &rows, &dir.join("index.csv"))?;
    Ok(RunSummary {
        status: worst,
        final_time: rows.iter().map(|r| r.final_time).fold(0.0, f64::max),
        dir: dir.to_path_buf(),
        checks_passed: true,
    })
}
