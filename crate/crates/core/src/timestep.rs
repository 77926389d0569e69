//! Classical RK4 integration with transport-speed CFL control, and run orchestration.

use serde::{Deserialize, Serialize};

use crate::besov::{besov_norm, BesovParams};
use crate::diagnostics::{
    blowup_integrand, energy, extrema_ux, lemma52_bounds, BesovPair, DiagnosticsRecord,
    SlopeBounds,
};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::model::{rhs_nonlocal, Coefficients, Frame, State};
use crate::spectral::SpectralWorkspace;

/// Step-size and breaking-detection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// A run stops as breaking once `min u_x <= -breaking_threshold`.
    pub breaking_threshold: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            cfl: 0.3,
            dt_min: 1e-10,
            dt_max: 0.1,
            breaking_threshold: 1e4,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            errs.push(format!("step.cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.dt_min > 0.0) {
            errs.push(format!("step.dt_min must be positive, got {}", self.dt_min));
        }
        if !(self.dt_max > 0.0) {
            errs.push(format!("step.dt_max must be positive, got {}", self.dt_max));
        }
        if self.dt_min > self.dt_max {
            errs.push(format!(
                "step.dt_min ({}) exceeds step.dt_max ({})",
                self.dt_min, self.dt_max
            ));
        }
        if !(self.breaking_threshold > 0.0) {
            errs.push(format!(
                "step.breaking_threshold must be positive, got {}",
                self.breaking_threshold
            ));
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BreakingDetected,
    NonfiniteAbort,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BreakingDetected => "breaking_detected",
            RunStatus::NonfiniteAbort => "nonfinite_abort",
        }
    }

    /// Process exit code of the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::BreakingDetected => 2,
            RunStatus::NonfiniteAbort => 3,
        }
    }
}

/// Result of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub final_time: f64,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<State>,
    pub grid: Grid,
    pub coefficients: Coefficients,
    pub frame: Frame,
    pub steps: usize,
    /// Name of the failing term for `NonfiniteAbort`.
    pub abort_reason: Option<String>,
    pub slope_bounds: Option<SlopeBounds>,
}

impl RunOutcome {
    pub fn final_state(&self) -> Option<&State> {
        self.snapshots.last()
    }
}

/// Time plan of an integration: horizon, output cadence and optional monitors.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub t_final: f64,
    /// Records are taken at every multiple of this interval (and at termination).
    pub diag_interval: f64,
    /// Snapshots at every multiple of this interval, if set.
    pub snapshot_interval: Option<f64>,
    /// Extra snapshot times.
    pub snapshot_times: Vec<f64>,
    pub besov: Option<BesovParams>,
    /// `eps0` for the slope-bound monitor; `None` uses the midpoint default.
    pub eps0: Option<f64>,
    /// Fixed step size instead of CFL control (convergence studies).
    pub fixed_dt: Option<f64>,
}

impl RunPlan {
    pub fn new(t_final: f64, diag_interval: f64) -> Self {
        Self {
            t_final,
            diag_interval,
            snapshot_interval: None,
            snapshot_times: Vec::new(),
            besov: None,
            eps0: None,
            fixed_dt: None,
        }
    }
}

/// One classical RK4 step of the nonlocal system.
pub fn step_rk4(
    ws: &mut SpectralWorkspace,
    state: &State,
    dt: f64,
    c: &Coefficients,
    frame: Frame,
) -> Result<State> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Validation(format!("dt must be positive, got {dt}")));
    }
    let grid = *state.grid();
    let stage = |base: &State, k: &(Field, Field), h: f64, t: f64| State {
        t,
        u: base.u.axpy(h, &k.0),
        zeta: base.zeta.axpy(h, &k.1),
    };
    let k1 = rhs_nonlocal(ws, state, c, frame)?;
    let s2 = stage(state, &k1, 0.5 * dt, state.t + 0.5 * dt);
    let k2 = rhs_nonlocal(ws, &s2, c, frame)?;
    let s3 = stage(state, &k2, 0.5 * dt, state.t + 0.5 * dt);
    let k3 = rhs_nonlocal(ws, &s3, c, frame)?;
    let s4 = stage(state, &k3, dt, state.t + dt);
    let k4 = rhs_nonlocal(ws, &s4, c, frame)?;

    let combine = |y: &Field, a: &Field, b: &Field, cc: &Field, d: &Field| {
        let v = y
            .values()
            .iter()
            .enumerate()
            .map(|(i, y)| {
                y + dt / 6.0
                    * (a.values()[i] + 2.0 * b.values()[i] + 2.0 * cc.values()[i] + d.values()[i])
            })
            .collect();
        Field::from_values_unchecked(grid, v)
    };
    let next = State {
        t: state.t + dt,
        u: combine(&state.u, &k1.0, &k2.0, &k3.0, &k4.0),
        zeta: combine(&state.zeta, &k1.1, &k2.1, &k3.1, &k4.1),
    };
    next.u.check_finite("u after RK4 step")?;
    next.zeta.check_finite("zeta after RK4 step")?;
    Ok(next)
}

/// CFL step before clamping: `cfl dx / max(|u| + |b1| zeta^2 + 2 |b1| |zeta| + 1)`.
pub fn cfl_dt(state: &State, c: &Coefficients, ctl: &StepControl) -> f64 {
    let b1 = c.b1.abs();
    let speed = state
        .u
        .values()
        .iter()
        .zip(state.zeta.values())
        .map(|(u, z)| u.abs() + b1 * z * z + 2.0 * b1 * z.abs() + 1.0)
        .fold(1.0, f64::max);
    ctl.cfl * state.grid().dx() / speed
}

/// CFL step clamped to `[dt_min, dt_max]`.
pub fn adaptive_dt(state: &State, c: &Coefficients, ctl: &StepControl) -> f64 {
    cfl_dt(state, c, ctl).clamp(ctl.dt_min, ctl.dt_max)
}

fn grid_min_ux(ws: &mut SpectralWorkspace, state: &State) -> f64 {
    let mut s = ws.forward(state.u.values());
    ws.differentiate_spectrum(&mut s, 1);
    ws.inverse(s).into_iter().fold(f64::INFINITY, f64::min)
}

/// Integrator bound to one grid, coefficient set and frame.
pub struct Simulation {
    ws: SpectralWorkspace,
    coefficients: Coefficients,
    frame: Frame,
    control: StepControl,
}

impl Simulation {
    pub fn new(grid: Grid, coefficients: Coefficients, frame: Frame, control: StepControl) -> Self {
        Self {
            ws: SpectralWorkspace::new(grid),
            coefficients,
            frame,
            control,
        }
    }

    pub fn workspace(&mut self) -> &mut SpectralWorkspace {
        &mut self.ws
    }

    pub fn step(&mut self, state: &State, dt: f64) -> Result<State> {
        step_rk4(&mut self.ws, state, dt, &self.coefficients, self.frame)
    }

    /// `n_steps` fixed steps of size `dt`.
    pub fn advance_fixed(&mut self, state: &State, dt: f64, n_steps: usize) -> Result<State> {
        let mut s = state.clone();
        for _ in 0..n_steps {
            s = self.step(&s, dt)?;
        }
        Ok(s)
    }

    fn record(
        &mut self,
        state: &State,
        slopes: Option<&SlopeBounds>,
        besov: Option<&BesovParams>,
    ) -> DiagnosticsRecord {
        let ext = extrema_ux(&mut self.ws, state);
        let besov = besov.map(|bp| {
            let zeta_params = BesovParams { s: bp.s - 1.0, ..*bp };
            BesovPair {
                u_s: besov_norm(&mut self.ws, &state.u, bp),
                zeta_sm1: besov_norm(&mut self.ws, &state.zeta, &zeta_params),
            }
        });
        DiagnosticsRecord {
            t: state.t,
            energy: energy(&mut self.ws, state),
            min_ux: ext.min,
            max_ux: ext.max,
            argmin_x: ext.argmin,
            argmax_x: ext.argmax,
            blowup_integrand: blowup_integrand(&mut self.ws, state),
            lemma52: slopes.map(|b| b.check(state.t, ext.min, ext.max)),
            besov,
        }
    }

    /// Integrates `initial` according to `plan`.
    ///
    /// Configuration problems are errors; breaking and non-finite values are reported
    /// through [`RunOutcome::status`].
    pub fn integrate(&mut self, initial: State, plan: &RunPlan) -> Result<RunOutcome> {
        if !(plan.t_final > 0.0 && plan.t_final.is_finite()) {
            return Err(Error::Validation(format!(
                "t_final must be positive, got {}",
                plan.t_final
            )));
        }
        if !(plan.diag_interval > 0.0) {
            return Err(Error::Validation(format!(
                "diagnostics interval must be positive, got {}",
                plan.diag_interval
            )));
        }
        let errs = self.control.validate();
        if !errs.is_empty() {
            return Err(Error::ConfigList(errs));
        }
        initial.check_finite()?;

        let slopes = if self.coefficients.is_sigma0_zero_vorticity() {
            match lemma52_bounds(&mut self.ws, &initial, &self.coefficients, plan.eps0) {
                Ok(b) => Some(b),
                // E(0) >= 1/3 simply disables the monitor; an explicit bad eps0 is an error
                Err(e) if plan.eps0.is_some() => return Err(e),
                Err(_) => None,
            }
        } else {
            None
        };

        let t_final = plan.t_final;
        let eps_t = 1e-12 * t_final.max(1.0);
        let mut snap_times: Vec<f64> = plan
            .snapshot_times
            .iter()
            .copied()
            .filter(|&t| t > 0.0 && t < t_final)
            .collect();
        if let Some(dt_s) = plan.snapshot_interval {
            let n = (t_final / dt_s).floor() as usize;
            snap_times.extend((1..=n).map(|k| k as f64 * dt_s).filter(|&t| t < t_final - eps_t));
        }
        snap_times.sort_by(f64::total_cmp);
        snap_times.dedup_by(|a, b| (*a - *b).abs() <= eps_t);

        let mut records = vec![self.record(&initial, slopes.as_ref(), plan.besov.as_ref())];
        let mut snapshots = vec![initial.clone()];
        let mut state = initial;
        let mut diag_k = 1usize;
        let mut snap_i = 0usize;
        let mut prev_min_ux = grid_min_ux(&mut self.ws, &state);
        let mut steps = 0usize;
        let mut status = RunStatus::Completed;
        let mut abort_reason = None;

        while state.t < t_final - eps_t {
            let next_diag = (diag_k as f64 * plan.diag_interval).min(t_final);
            let next_snap = snap_times.get(snap_i).copied().unwrap_or(f64::INFINITY);
            let next_event = next_diag.min(next_snap).min(t_final);

            let raw = match plan.fixed_dt {
                Some(h) => h,
                None => cfl_dt(&state, &self.coefficients, &self.control),
            };
            let mut dt = match plan.fixed_dt {
                Some(h) => h,
                None => raw.clamp(self.control.dt_min, self.control.dt_max),
            };
            let lands = state.t + dt >= next_event - eps_t;
            if lands {
                dt = next_event - state.t;
            }
            let mut next = match self.step(&state, dt) {
                Ok(s) => s,
                Err(Error::NonFinite(what)) => {
                    status = RunStatus::NonfiniteAbort;
                    abort_reason = Some(what);
                    break;
                }
                Err(e) => return Err(e),
            };
            steps += 1;
            if lands {
                next.t = next_event;
            }
            state = next;

            let min_ux = grid_min_ux(&mut self.ws, &state);
            let collapsed = plan.fixed_dt.is_none() && raw < self.control.dt_min && min_ux < prev_min_ux;
            if min_ux <= -self.control.breaking_threshold || collapsed {
                status = RunStatus::BreakingDetected;
                break;
            }
            prev_min_ux = min_ux;

            let at = |target: f64| (state.t - target).abs() <= eps_t;
            if at(next_diag) {
                records.push(self.record(&state, slopes.as_ref(), plan.besov.as_ref()));
                diag_k += 1;
            }
            while snap_i < snap_times.len() && snap_times[snap_i] <= state.t + eps_t {
                snapshots.push(state.clone());
                snap_i += 1;
            }
        }

        if status != RunStatus::NonfiniteAbort {
            if records.last().map(|r| r.t) != Some(state.t) {
                records.push(self.record(&state, slopes.as_ref(), plan.besov.as_ref()));
            }
            if snapshots.last().map(|s| s.t) != Some(state.t) {
                snapshots.push(state.clone());
            }
        }

        Ok(RunOutcome {
            status,
            final_time: state.t,
            records,
            snapshots,
            grid: *state.grid(),
            coefficients: self.coefficients,
            frame: self.frame,
            steps,
            abort_reason,
            slope_bounds: slopes,
        })
    }
}

/// Generates the initial data of `config` and integrates it.
pub fn run(config: &crate::config::RunConfig) -> Result<RunOutcome> {
    crate::runner::simulate(config).map(|(_, outcome)| outcome)
}
