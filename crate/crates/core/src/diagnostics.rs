//! Scalar monitors, the slope bounds of the `sigma = 0` system, and Lagrangian tracking.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::model::{Coefficients, State};
use crate::spectral::SpectralWorkspace;
use crate::timestep::{RunOutcome, RunStatus};

/// Threshold on the energy below which the `sigma = 0` system is globally well posed.
pub const GLOBAL_ENERGY_BOUND: f64 = 1.0 / 3.0;

/// `11 sqrt(6) / 36`, shared by both slope bounds.
pub fn sqrt6_constant() -> f64 {
    11.0 * 6f64.sqrt() / 36.0
}

/// One row of the time series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub min_ux: f64,
    pub max_ux: f64,
    pub argmin_x: f64,
    pub argmax_x: f64,
    pub blowup_integrand: f64,
    pub lemma52: Option<SlopeCheck>,
    pub besov: Option<BesovPair>,
}

/// Linear-in-time bounds on `u_x` evaluated at one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeCheck {
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
}

/// Besov norms `|u|_{B^s_{p,r}}` and `|zeta|_{B^{s-1}_{p,r}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesovPair {
    pub u_s: f64,
    pub zeta_sm1: f64,
}

/// `E = int (u^2 + u_x^2 + zeta^2) dx`.
pub fn energy(ws: &mut SpectralWorkspace, state: &State) -> f64 {
    let mut s = ws.forward(state.u.values());
    ws.differentiate_spectrum(&mut s, 1);
    let ux = ws.inverse(s);
    let sum: f64 = state
        .u
        .values()
        .iter()
        .zip(&ux)
        .zip(state.zeta.values())
        .map(|((u, ux), z)| u * u + ux * ux + z * z)
        .sum();
    sum * state.grid().dx()
}

fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Integrand of the blow-up criterion, with sup-norms taken over grid nodes.
pub fn blowup_integrand(ws: &mut SpectralWorkspace, state: &State) -> f64 {
    let mut su = ws.forward(state.u.values());
    ws.differentiate_spectrum(&mut su, 1);
    let mut sz = ws.forward(state.zeta.values());
    ws.differentiate_spectrum(&mut sz, 1);
    let ux = sup(&ws.inverse(su));
    let zx = sup(&ws.inverse(sz));
    let u = state.u.max_abs();
    let z = state.zeta.max_abs();
    (u + z) + (u * u + z * z) + ux + zx * (1.0 + z) + u * u * z
}

/// Extrema of `u_x` with their positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UxExtrema {
    pub min: f64,
    pub max: f64,
    pub argmin: f64,
    pub argmax: f64,
    /// Whether the Newton refinement of the minimum converged.
    pub min_refined: bool,
    pub max_refined: bool,
}

/// Residual `|u_xx|` accepted for a refined extremum.
pub const REFINE_RESIDUAL: f64 = 1e-8;
const REFINE_ITERS: usize = 8;

/// Grid extrema of `u_x`, refined by Newton iteration on the interpolant of `u_xx`.
///
/// Ties go to the smallest index. A refinement that does not reach
/// [`REFINE_RESIDUAL`] within one cell of the grid extremum is dropped and flagged.
pub fn extrema_ux(ws: &mut SpectralWorkspace, state: &State) -> UxExtrema {
    let grid = *state.grid();
    let su = ws.forward(state.u.values());
    let mut sux = su.clone();
    ws.differentiate_spectrum(&mut sux, 1);
    let ux = ws.inverse(sux.clone());

    let (mut imin, mut imax) = (0, 0);
    for (i, &v) in ux.iter().enumerate() {
        if v < ux[imin] {
            imin = i;
        }
        if v > ux[imax] {
            imax = i;
        }
    }
    let (min, argmin, min_refined) = refine(ws, &sux, grid.x(imin), ux[imin], true);
    let (max, argmax, max_refined) = refine(ws, &sux, grid.x(imax), ux[imax], false);
    UxExtrema {
        min,
        max,
        argmin,
        argmax,
        min_refined,
        max_refined,
    }
}

fn refine(
    ws: &SpectralWorkspace,
    sux: &[Complex64],
    x0: f64,
    v0: f64,
    is_min: bool,
) -> (f64, f64, bool) {
    let grid = *ws.grid();
    if sux.iter().all(|c| c.norm() == 0.0) {
        return (v0, x0, false);
    }
    let mut x = x0;
    for _ in 0..REFINE_ITERS {
        let d1 = ws.interpolate_spectrum(sux, &[x], 1)[0];
        let d2 = ws.interpolate_spectrum(sux, &[x], 2)[0];
        if d1.abs() < REFINE_RESIDUAL {
            break;
        }
        if d2 == 0.0 || !d2.is_finite() {
            return (v0, x0, false);
        }
        x -= d1 / d2;
    }
    let residual = ws.interpolate_spectrum(sux, &[x], 1)[0].abs();
    let shift = {
        let d = (x - x0).rem_euclid(grid.length());
        d.min(grid.length() - d)
    };
    let v = ws.interpolate_spectrum(sux, &[x], 0)[0];
    let improves = if is_min { v <= v0 } else { v >= v0 };
    if residual < REFINE_RESIDUAL && shift <= grid.dx() && improves {
        (v, grid.wrap(x), true)
    } else {
        (v0, x0, false)
    }
}

/// Outcome of the small-energy test for global existence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalCondition {
    pub energy0: f64,
    pub boundary: f64,
    pub holds: bool,
    /// Admissible open interval for `eps0`, empty when the condition fails.
    pub eps0_interval: Option<(f64, f64)>,
}

pub fn check_global_condition(ws: &mut SpectralWorkspace, state0: &State) -> GlobalCondition {
    let e0 = energy(ws, state0);
    let holds = e0 < GLOBAL_ENERGY_BOUND;
    GlobalCondition {
        energy0: e0,
        boundary: GLOBAL_ENERGY_BOUND,
        holds,
        eps0_interval: holds.then_some((0.0, GLOBAL_ENERGY_BOUND - e0)),
    }
}

/// Slopes of the linear-in-time bounds on `sup u_x` and `inf u_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeBounds {
    pub energy0: f64,
    pub eps0: f64,
    pub sup_rho0_sq: f64,
    pub inf_rho0_sq: f64,
    pub sup_ux0: f64,
    pub inf_ux0: f64,
    pub upper_slope: f64,
    pub lower_slope: f64,
}

impl SlopeBounds {
    pub fn check(&self, t: f64, min_ux: f64, max_ux: f64) -> SlopeCheck {
        let upper_bound = self.sup_ux0 + self.upper_slope * t;
        let lower_bound = self.inf_ux0 + self.lower_slope * t;
        SlopeCheck {
            upper_bound,
            lower_bound,
            upper_ok: max_ux <= upper_bound,
            lower_ok: min_ux >= lower_bound,
        }
    }
}

/// `2 sup rho0^2 + 3/8 + 11 sqrt(6)/36`.
pub fn upper_slope(sup_rho0_sq: f64) -> f64 {
    2.0 * sup_rho0_sq + 3.0 / 8.0 + sqrt6_constant()
}

/// `(1/2 - 3/2 (E0 + eps0)) inf rho0^2 - 1/(24 eps0) - 7/6 - 11 sqrt(6)/36`.
pub fn lower_slope(energy0: f64, eps0: f64, inf_rho0_sq: f64) -> f64 {
    (0.5 - 1.5 * (energy0 + eps0)) * inf_rho0_sq - 1.0 / (24.0 * eps0) - 7.0 / 6.0 - sqrt6_constant()
}

/// Slope bounds for the zero-vorticity `sigma = 0` system.
///
/// `eps0 = None` picks the midpoint of `(0, 1/3 - E0)`.
pub fn lemma52_bounds(
    ws: &mut SpectralWorkspace,
    state0: &State,
    coefficients: &Coefficients,
    eps0: Option<f64>,
) -> Result<SlopeBounds> {
    if !coefficients.is_sigma0_zero_vorticity() {
        return Err(Error::Validation(
            "slope bounds apply only to the sigma0 preset (A = 0, sigma = 0)".into(),
        ));
    }
    let e0 = energy(ws, state0);
    let span = GLOBAL_ENERGY_BOUND - e0;
    if span <= 0.0 {
        return Err(Error::Validation(format!(
            "E(0) = {e0} is not below 1/3; no admissible eps0"
        )));
    }
    let eps0 = eps0.unwrap_or(0.5 * span);
    if !(eps0 > 0.0 && eps0 < span) {
        return Err(Error::Validation(format!(
            "eps0 = {eps0} outside the open interval (0, {span})"
        )));
    }
    let rho = state0.rho();
    let sq: Vec<f64> = rho.values().iter().map(|r| r * r).collect();
    let sup_rho0_sq = sq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf_rho0_sq = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let ext = extrema_ux(ws, state0);
    Ok(SlopeBounds {
        energy0: e0,
        eps0,
        sup_rho0_sq,
        inf_rho0_sq,
        sup_ux0: ext.max,
        inf_ux0: ext.min,
        upper_slope: upper_slope(sup_rho0_sq),
        lower_slope: lower_slope(e0, eps0, inf_rho0_sq),
    })
}

/// `eps0` in `(0, 1/3 - E0)` maximising the lower slope, by golden-section search.
pub fn best_eps0(energy0: f64, inf_rho0_sq: f64) -> Option<f64> {
    let span = GLOBAL_ENERGY_BOUND - energy0;
    if span <= 0.0 {
        return None;
    }
    let f = |e: f64| lower_slope(energy0, e, inf_rho0_sq);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (span * 1e-12, span * (1.0 - 1e-12));
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > 1e-14 * span.max(1e-300) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Some(0.5 * (a + b))
}

/// Characteristic trajectories and field samples along them.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    pub seeds: Vec<f64>,
    pub times: Vec<f64>,
    /// `positions[i][k]`: unwrapped position of seed `k` at `times[i]`.
    pub positions: Vec<Vec<f64>>,
    pub u_along: Vec<Vec<f64>>,
    pub ux_along: Vec<Vec<f64>>,
    pub zeta_along: Vec<Vec<f64>>,
}

impl FlowMap {
    /// True when every pair of consecutive seeds stays strictly ordered at every time.
    pub fn is_monotone(&self) -> bool {
        self.positions
            .iter()
            .all(|row| row.windows(2).all(|w| w[1] > w[0]))
    }
}

/// Substeps of the characteristic RK4 between consecutive snapshots.
const FLOW_SUBSTEPS: usize = 2;

/// Integrates `q_t = u(t, q)` through the stored snapshots of a run.
///
/// Velocity between snapshots is linear in time; in space it is the trigonometric
/// interpolant. Positions are kept unwrapped so ordering is meaningful.
pub fn evolve_flowmap(run: &RunOutcome, seeds: &[f64]) -> Result<FlowMap> {
    if run.status == RunStatus::NonfiniteAbort {
        return Err(Error::Validation(
            "flow map needs a completed or breaking run".into(),
        ));
    }
    let grid = run.grid;
    if let Some(bad) = seeds
        .iter()
        .find(|&&s| !(s.is_finite() && (0.0..grid.length()).contains(&s)))
    {
        return Err(Error::Validation(format!(
            "seed {bad} outside [0, {})",
            grid.length()
        )));
    }
    if run.snapshots.is_empty() {
        return Err(Error::Validation("run has no snapshots".into()));
    }
    let mut ws = SpectralWorkspace::new(grid);
    let spectra: Vec<(Vec<Complex64>, Vec<Complex64>)> = run
        .snapshots
        .iter()
        .map(|s| (ws.forward(s.u.values()), ws.forward(s.zeta.values())))
        .collect();

    let velocity_at = |ws: &SpectralWorkspace, i: usize, q: &[f64]| {
        ws.interpolate_spectrum(&spectra[i].0, q, 0)
    };
    let sample = |ws: &SpectralWorkspace, i: usize, q: &[f64]| {
        let (su, sz) = &spectra[i];
        (
            ws.interpolate_spectrum(su, q, 0),
            ws.interpolate_spectrum(su, q, 1),
            ws.interpolate_spectrum(sz, q, 0),
        )
    };

    let mut q = seeds.to_vec();
    let mut times = Vec::with_capacity(spectra.len());
    let mut positions = Vec::with_capacity(spectra.len());
    let mut u_along = Vec::with_capacity(spectra.len());
    let mut ux_along = Vec::with_capacity(spectra.len());
    let mut zeta_along = Vec::with_capacity(spectra.len());

    for i in 0..spectra.len() {
        if i > 0 {
            let t0 = run.snapshots[i - 1].t;
            let h = (run.snapshots[i].t - t0) / FLOW_SUBSTEPS as f64;
            let velocity = |theta: f64, pos: &[f64]| -> Vec<f64> {
                let a = velocity_at(&ws, i - 1, pos);
                let b = velocity_at(&ws, i, pos);
                a.iter()
                    .zip(&b)
                    .map(|(a, b)| (1.0 - theta) * a + theta * b)
                    .collect()
            };
            let span = run.snapshots[i].t - t0;
            for sub in 0..FLOW_SUBSTEPS {
                let th0 = sub as f64 * h / span;
                let thh = (sub as f64 + 0.5) * h / span;
                let th1 = (sub as f64 + 1.0) * h / span;
                let k1 = velocity(th0, &q);
                let p: Vec<f64> = q.iter().zip(&k1).map(|(q, k)| q + 0.5 * h * k).collect();
                let k2 = velocity(thh, &p);
                let p: Vec<f64> = q.iter().zip(&k2).map(|(q, k)| q + 0.5 * h * k).collect();
                let k3 = velocity(thh, &p);
                let p: Vec<f64> = q.iter().zip(&k3).map(|(q, k)| q + h * k).collect();
                let k4 = velocity(th1, &p);
                for (j, qj) in q.iter_mut().enumerate() {
                    *qj += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
            }
        }
        let (u, ux, z) = sample(&ws, i, &q);
        times.push(run.snapshots[i].t);
        positions.push(q.clone());
        u_along.push(u);
        ux_along.push(ux);
        zeta_along.push(z);
    }
    Ok(FlowMap {
        seeds: seeds.to_vec(),
        times,
        positions,
        u_along,
        ux_along,
        zeta_along,
    })
}

/// Comparison of `rho` along characteristics with the scalar along-flow ODE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlongFlowReport {
    pub max_relative_mismatch: f64,
    /// Whether `rho` kept its initial sign along every tracked characteristic.
    pub sign_preserved: bool,
    pub rho_ode_final: Vec<f64>,
    pub rho_pde_final: Vec<f64>,
}

/// Integrates `d rho/dt = -rho u_x (1 - 3 u^2)` along each trajectory of `flow`.
pub fn verify_alongflow_ode(run: &RunOutcome, flow: &FlowMap) -> Result<AlongFlowReport> {
    if !run.coefficients.is_sigma0_zero_vorticity() {
        return Err(Error::Validation(
            "along-flow ODE applies only to the sigma0 preset (A = 0, sigma = 0)".into(),
        ));
    }
    let nt = flow.times.len();
    let ns = flow.seeds.len();
    let mut max_rel: f64 = 0.0;
    let mut sign_preserved = true;
    let mut rho_ode_final = Vec::with_capacity(ns);
    let mut rho_pde_final = Vec::with_capacity(ns);
    for k in 0..ns {
        let g: Vec<f64> = (0..nt)
            .map(|i| {
                let u = flow.u_along[i][k];
                flow.ux_along[i][k] * (1.0 - 3.0 * u * u)
            })
            .collect();
        let integral = cumulative_integral(&flow.times, &g);
        let rho0 = 1.0 + flow.zeta_along[0][k];
        let mut last = (rho0, rho0);
        for i in 0..nt {
            let rho_ode = rho0 * (-integral[i]).exp();
            let rho_pde = 1.0 + flow.zeta_along[i][k];
            let scale = rho_pde.abs().max(f64::MIN_POSITIVE);
            max_rel = max_rel.max((rho_ode - rho_pde).abs() / scale);
            if rho0 != 0.0 && rho_pde.signum() != rho0.signum() {
                sign_preserved = false;
            }
            last = (rho_ode, rho_pde);
        }
        rho_ode_final.push(last.0);
        rho_pde_final.push(last.1);
    }
    Ok(AlongFlowReport {
        max_relative_mismatch: max_rel,
        sign_preserved,
        rho_ode_final,
        rho_pde_final,
    })
}

/// Running integral of samples `g` at times `t`.
///
/// Each interval is integrated with the cubic through four neighbouring samples when
/// those are uniformly spaced, and with the trapezoid rule otherwise.
pub fn cumulative_integral(t: &[f64], g: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut out = vec![0.0; n];
    let uniform = |a: usize, b: usize| {
        let h = t[a + 1] - t[a];
        (a..b).all(|i| ((t[i + 1] - t[i]) - h).abs() <= 1e-9 * h.abs())
    };
    for i in 0..n.saturating_sub(1) {
        let h = t[i + 1] - t[i];
        let piece = if i >= 1 && i + 2 < n && uniform(i - 1, i + 2) {
            h / 24.0 * (-g[i - 1] + 13.0 * g[i] + 13.0 * g[i + 1] - g[i + 2])
        } else if i == 0 && n >= 4 && uniform(0, 3) {
            h / 24.0 * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3])
        } else if i + 2 == n && n >= 4 && uniform(n - 4, n - 1) {
            h / 24.0 * (g[i - 2] - 5.0 * g[i - 1] + 19.0 * g[i] + 9.0 * g[i + 1])
        } else {
            0.5 * h * (g[i] + g[i + 1])
        };
        out[i + 1] = out[i] + piece;
    }
    out
}

/// Running time integral of the blow-up integrand over the records of a run.
pub fn blowup_integral(records: &[DiagnosticsRecord]) -> Vec<f64> {
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let g: Vec<f64> = records.iter().map(|r| r.blowup_integrand).collect();
    cumulative_integral(&t, &g)
}

/// Grid field of `u_x` (helper for callers that only hold a state).
pub fn ux_field(ws: &mut SpectralWorkspace, state: &State) -> Field {
    let mut s = ws.forward(state.u.values());
    ws.differentiate_spectrum(&mut s, 1);
    Field::from_values_unchecked(*state.grid(), ws.inverse(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn sine_state(n: usize) -> (SpectralWorkspace, State) {
        let g = Grid::new(n, 2.0 * PI).unwrap();
        let s = State {
            t: 0.0,
            u: Field::from_fn(g, f64::sin),
            zeta: Field::zeros(g),
        };
        (SpectralWorkspace::new(g), s)
    }

    #[test]
    fn energy_of_zero_and_sine() {
        let (mut ws, s) = sine_state(64);
        assert_eq!(energy(&mut ws, &State::zeros(*s.grid())), 0.0);
        assert!((energy(&mut ws, &s) - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn blowup_integrand_examples() {
        let (mut ws, s) = sine_state(64);
        assert_eq!(blowup_integrand(&mut ws, &State::zeros(*s.grid())), 0.0);
        assert!((blowup_integrand(&mut ws, &s) - 3.0).abs() < 1e-13);
        let g = *s.grid();
        let s2 = State {
            zeta: Field::from_fn(g, |x| 0.5 * x.cos()),
            ..s
        };
        assert!((blowup_integrand(&mut ws, &s2) - 5.0).abs() < 1e-13);
    }

    #[test]
    fn extrema_of_sine() {
        let (mut ws, s) = sine_state(64);
        let e = extrema_ux(&mut ws, &s);
        assert!((e.min + 1.0).abs() < 1e-13);
        assert!((e.max - 1.0).abs() < 1e-13);
        assert!((e.argmin - PI).abs() < 1e-9);
        assert!(e.argmax.abs() < 1e-9 || (e.argmax - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn extrema_of_zero_use_first_index() {
        let (mut ws, s) = sine_state(32);
        let e = extrema_ux(&mut ws, &State::zeros(*s.grid()));
        assert_eq!((e.min, e.max, e.argmin, e.argmax), (0.0, 0.0, 0.0, 0.0));
        assert!(!e.min_refined && !e.max_refined);
    }

    #[test]
    fn global_condition_for_zero_state() {
        let (mut ws, s) = sine_state(32);
        let r = check_global_condition(&mut ws, &State::zeros(*s.grid()));
        assert!(r.holds);
        assert_eq!(r.eps0_interval, Some((0.0, 1.0 / 3.0)));
        // sin x on [0, 2pi) has E = 2 pi
        let r = check_global_condition(&mut ws, &s);
        assert!(!r.holds);
        assert_eq!(r.eps0_interval, None);
    }

    #[test]
    fn slope_constants() {
        assert!((upper_slope(1.0) - 3.123_455_2).abs() < 1e-6);
        assert!((lower_slope(0.1, 0.1, 1.0) + 2.131_788_6).abs() < 1e-6);
    }

    #[test]
    fn golden_section_matches_calculus() {
        // d/de [-3/2 e r - 1/(24 e)] = 0  =>  e = 1 / (6 sqrt(r))
        for (e0, r) in [(0.1, 1.0), (0.0, 4.0), (0.3, 1.0), (0.2, 0.25)] {
            let span: f64 = 1.0 / 3.0 - e0;
            let analytic = (1.0 / (6.0 * f64::sqrt(r))).min(span);
            let found = best_eps0(e0, r).unwrap();
            assert!((found - analytic).abs() < 1e-6, "{e0} {r}: {found} vs {analytic}");
        }
        assert!(best_eps0(0.4, 1.0).is_none());
    }

    #[test]
    fn cubic_rule_integrates_cubics() {
        let t: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let g: Vec<f64> = t.iter().map(|t| t * t * t).collect();
        let out = cumulative_integral(&t, &g);
        for (ti, oi) in t.iter().zip(&out) {
            assert!((oi - ti.powi(4) / 4.0).abs() < 1e-14);
        }
        let out = cumulative_integral(&[0.0, 0.1, 0.3], &[0.0, 1.0, 1.0]);
        assert!((out[2] - 0.25).abs() < 1e-15);
    }
}
