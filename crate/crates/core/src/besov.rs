//! Discrete Littlewood-Paley blocks, nonhomogeneous Besov norms and the Friedrichs
//! iteration for the linearised transport system.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::model::{Coefficients, State};
use crate::spectral::SpectralWorkspace;

const INNER: f64 = 0.75;
const OUTER: f64 = 4.0 / 3.0;

fn smooth_step(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Low-pass profile: 1 on `|xi| <= 3/4`, 0 on `|xi| >= 4/3`, smooth in between.
pub fn chi(xi: f64) -> f64 {
    let x2 = xi * xi;
    if x2 <= INNER * INNER {
        return 1.0;
    }
    if x2 >= OUTER * OUTER {
        return 0.0;
    }
    let a = smooth_step(OUTER * OUTER - x2);
    let b = smooth_step(x2 - INNER * INNER);
    a / (a + b)
}

/// Dyadic annulus profile `chi(xi/2) - chi(xi)`.
pub fn phi(xi: f64) -> f64 {
    chi(0.5 * xi) - chi(xi)
}

/// Multiplier of block `q >= -1`.
pub fn block_multiplier(q: i32, xi: f64) -> f64 {
    if q < 0 {
        chi(xi)
    } else {
        phi(xi * (-(q as f64)).exp2())
    }
}

/// Smallest block index whose partial sum of the partition covers `[0, xi_max]`.
pub fn max_block_index(xi_max: f64) -> i32 {
    let mut q = -1;
    while INNER * 2f64.powi(q + 1) < xi_max {
        q += 1;
    }
    q
}

/// The dyadic partition restricted to the frequencies of one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicPartition {
    pub grid: Grid,
    pub q_max: i32,
}

impl DyadicPartition {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            q_max: max_block_index(grid.nyquist_wavenumber()),
        }
    }

    /// Largest pointwise deviation of `chi + sum phi_q` from 1 over the grid wavenumbers
    /// and a dense sample of `[0, xi_nyquist]`.
    pub fn partition_residual(&self) -> f64 {
        let xi_n = self.grid.nyquist_wavenumber();
        let dense = (0..=4096).map(|i| xi_n * i as f64 / 4096.0);
        let grid_xi = (0..self.grid.n_points()).map(|k| self.grid.wavenumber(k));
        dense
            .chain(grid_xi)
            .map(|xi| {
                let s: f64 = (-1..=self.q_max).map(|q| block_multiplier(q, xi)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    /// Integrability index in `[1, inf]`.
    pub p: f64,
    /// Summability index in `[1, inf]`.
    pub r: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        let bp = Self { s, p, r };
        let errs = bp.validate();
        if errs.is_empty() {
            Ok(bp)
        } else {
            Err(Error::ConfigList(errs))
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !self.s.is_finite() {
            errs.push(format!("besov.s must be finite, got {}", self.s));
        }
        if !(self.p >= 1.0) {
            errs.push(format!("besov.p must lie in [1, inf], got {}", self.p));
        }
        if !(self.r >= 1.0) {
            errs.push(format!("besov.r must lie in [1, inf], got {}", self.r));
        }
        errs
    }
}

fn apply_multiplier(ws: &mut SpectralWorkspace, f: &Field, m: impl Fn(f64) -> f64) -> Field {
    let mut spec = ws.forward(f.values());
    for (v, &xi) in spec.iter_mut().zip(ws.wavenumbers()) {
        *v *= m(xi);
    }
    Field::from_values_unchecked(*f.grid(), ws.inverse(spec))
}

/// Block `Delta_q f`; `q = -1` is the low-frequency block.
pub fn lp_block(ws: &mut SpectralWorkspace, f: &Field, q: i32) -> Result<Field> {
    let q_max = DyadicPartition::new(*ws.grid()).q_max;
    if q > q_max {
        return Err(Error::Resolution { q, q_max });
    }
    if q < -1 {
        return Err(Error::Validation(format!("block index must be >= -1, got {q}")));
    }
    Ok(apply_multiplier(ws, f, |xi| block_multiplier(q, xi)))
}

/// Low-pass `S_j f = chi(2^-j D) f`.
pub fn lowpass_s(ws: &mut SpectralWorkspace, f: &Field, j: i32) -> Field {
    let scale = (-(j as f64)).exp2();
    apply_multiplier(ws, f, |xi| chi(xi * scale))
}

fn lp_norm(f: &[f64], p: f64, dx: f64) -> f64 {
    if p.is_infinite() {
        f.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    } else if p == 2.0 {
        (dx * f.iter().map(|v| v * v).sum::<f64>()).sqrt()
    } else {
        (dx * f.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

fn lr_aggregate(terms: &[f64], r: f64) -> f64 {
    if r.is_infinite() {
        terms.iter().fold(0.0, |m: f64, v| m.max(*v))
    } else {
        terms.iter().map(|v| v.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Weighted block norms `2^{qs} ||Delta_q f||_{L^p}` for `q = -1..=q_max`.
pub fn block_norms(ws: &mut SpectralWorkspace, f: &Field, bp: &BesovParams) -> Vec<f64> {
    let part = DyadicPartition::new(*ws.grid());
    let dx = ws.grid().dx();
    let spec = ws.forward(f.values());
    (-1..=part.q_max)
        .map(|q| {
            let block: Vec<Complex64> = spec
                .iter()
                .zip(ws.wavenumbers())
                .map(|(v, &xi)| v * block_multiplier(q, xi))
                .collect();
            let vals = ws.inverse(block);
            (q as f64 * bp.s).exp2() * lp_norm(&vals, bp.p, dx)
        })
        .collect()
}

/// Nonhomogeneous Besov norm truncated at the last resolvable block.
pub fn besov_norm(ws: &mut SpectralWorkspace, f: &Field, bp: &BesovParams) -> f64 {
    lr_aggregate(&block_norms(ws, f, bp), bp.r)
}

/// Bounds `[c1, c2]` of `||f||_{B^0_{2,2}} / ||f||_{L^2}` implied by the partition:
/// square roots of the extreme values of `sum_q psi_q(xi)^2`.
pub fn norm_equivalence_constants() -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    // the sum is invariant under xi -> 2 xi once xi >= 3/2
    let n = 200_000;
    for i in 0..=n {
        let xi = 3.0 * i as f64 / n as f64;
        let s: f64 = (-1..=4).map(|q| block_multiplier(q, xi).powi(2)).sum();
        lo = lo.min(s);
        hi = hi.max(s);
    }
    (lo.sqrt(), hi.sqrt())
}

/// Settings of the Friedrichs iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedrichsConfig {
    pub t_final: f64,
    /// Fixed step; `None` takes a quarter of the CFL step of the initial data.
    pub dt: Option<f64>,
    pub j_max: usize,
    /// Regularity index; differences are measured in `B^{s-1}_{2,2} x B^{s-2}_{2,2}`.
    pub s: f64,
}

impl Default for FriedrichsConfig {
    fn default() -> Self {
        Self {
            t_final: 0.5,
            dt: None,
            j_max: 8,
            s: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedrichsResult {
    /// States of iterates `0..=j_max+1` at the final time.
    pub iterates: Vec<State>,
    /// `d_j` for `j = 0..=j_max`.
    pub differences: Vec<f64>,
    pub dt: f64,
    pub n_steps: usize,
    pub s: f64,
}

impl FriedrichsResult {
    pub fn final_iterate(&self) -> &State {
        self.iterates.last().expect("at least one iterate")
    }

    /// Ratios `d_{j+1} / d_j`.
    pub fn ratios(&self) -> Vec<f64> {
        self.differences.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// `||u_a - u_b||_{B^{s-1}_{2,2}} + ||zeta_a - zeta_b||_{B^{s-2}_{2,2}}`.
pub fn pair_distance(ws: &mut SpectralWorkspace, a: &State, b: &State, s: f64) -> f64 {
    let du = a.u.axpy(-1.0, &b.u);
    let dz = a.zeta.axpy(-1.0, &b.zeta);
    besov_norm(ws, &du, &BesovParams { s: s - 1.0, p: 2.0, r: 2.0 })
        + besov_norm(ws, &dz, &BesovParams { s: s - 2.0, p: 2.0, r: 2.0 })
}

/// Frozen data of iterate `j` at one time level.
struct Frozen {
    forcing_u: Vec<Complex64>,
    forcing_z: Vec<Complex64>,
    speed_u: Vec<f64>,
    speed_z: Vec<f64>,
}

fn freeze(ws: &mut SpectralWorkspace, u: &[f64], z: &[f64], c: &Coefficients) -> Frozen {
    let su = ws.forward(u);
    let sz = ws.forward(z);
    let mut sux = su.clone();
    ws.differentiate_spectrum(&mut sux, 1);
    let u = ws.pad_spectrum(&su);
    let ux = ws.pad_spectrum(&sux);
    let z = ws.pad_spectrum(&sz);
    let s = c.sigma;
    let m = u.len();
    let (mut f, mut g) = (Vec::with_capacity(m), Vec::with_capacity(m));
    let (mut au, mut az) = (Vec::with_capacity(m), Vec::with_capacity(m));
    for i in 0..m {
        let (u, ux, z) = (u[i], ux[i], z[i]);
        let u2 = u * u;
        f.push(
            0.5 * (3.0 - s) * u2
                + 0.5 * s * ux * ux
                + 0.5 * z * z
                + z
                + c.a1 * u * (z * z + 2.0 * z + 1.0)
                + c.a2 * u * (z + 1.0)
                + (c.a3 + c.a4) * u
                + c.a5 * u2 * z * (z + 1.0)
                + c.a6 * u2 * u,
        );
        g.push(
            -z * ux - ux - c.b2 * z * u * ux - c.b2 * u * ux - c.b3 * z * u2 * ux - c.b3 * u2 * ux,
        );
        au.push(s * u);
        az.push(u + c.b1 * z * z + 2.0 * c.b1 * z);
    }
    let mut forcing_u = ws.truncate_spectrum(&f);
    ws.pd_spectrum(&mut forcing_u);
    let forcing_z = ws.truncate_spectrum(&g);
    Frozen {
        forcing_u,
        forcing_z,
        speed_u: au,
        speed_z: az,
    }
}

/// Right-hand side of the linear transport pair in spectral form.
fn transport_rhs(
    ws: &mut SpectralWorkspace,
    v: &[Complex64],
    w: &[Complex64],
    fr: &Frozen,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut one = |spec: &[Complex64], speed: &[f64], forcing: &[Complex64]| {
        let mut d = spec.to_vec();
        ws.differentiate_spectrum(&mut d, 1);
        let padded: Vec<f64> = ws
            .pad_spectrum(&d)
            .iter()
            .zip(speed)
            .map(|(a, b)| a * b)
            .collect();
        let t = ws.truncate_spectrum(&padded);
        t.iter().zip(forcing).map(|(t, f)| f - t).collect::<Vec<_>>()
    };
    let dv = one(v, &fr.speed_u, &fr.forcing_u);
    let dw = one(w, &fr.speed_z, &fr.forcing_z);
    (dv, dw)
}

fn axpy_c(y: &[Complex64], h: f64, k: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Runs the Friedrichs iteration from `u^(0) = zeta^(0) = 0`.
///
/// Each iterate solves its linear transport problem with RK4 on a fixed step; the
/// previous iterate is stored at half steps (cubic Hermite midpoints) so that every
/// RK4 stage sees its coefficients at the exact stage time.
pub fn friedrichs_iterate(
    initial: &State,
    c: &Coefficients,
    cfg: &FriedrichsConfig,
) -> Result<FriedrichsResult> {
    if !(cfg.t_final > 0.0 && cfg.t_final.is_finite()) {
        return Err(Error::Validation(format!(
            "Friedrichs horizon must be positive, got {}",
            cfg.t_final
        )));
    }
    initial.check_finite()?;
    let grid = *initial.grid();
    let mut ws = SpectralWorkspace::new(grid);
    let dt_target = match cfg.dt {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(Error::Validation(format!("dt must be positive, got {h}"))),
        None => {
            crate::timestep::cfl_dt(initial, c, &crate::timestep::StepControl::default()) / 4.0
        }
    };
    let n_steps = (cfg.t_final / dt_target).ceil().max(1.0) as usize;
    let dt = cfg.t_final / n_steps as f64;
    let n = grid.n_points();

    // iterate 0: identically zero at every half step
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let mut traj: Vec<(Vec<Complex64>, Vec<Complex64>)> = vec![(zero.clone(), zero); 2 * n_steps + 1];
    let mut iterates = vec![State::zeros(grid)];
    let mut differences = Vec::with_capacity(cfg.j_max + 1);

    for j in 0..=cfg.j_max {
        let u0 = lowpass_s(&mut ws, &initial.u, j as i32 + 1);
        let z0 = lowpass_s(&mut ws, &initial.zeta, j as i32 + 1);
        let mut v = ws.forward(u0.values());
        let mut w = ws.forward(z0.values());

        let frozen_at = |ws: &mut SpectralWorkspace, idx: usize| {
            let (su, sz) = &traj[idx];
            let u = ws.inverse(su.clone());
            let z = ws.inverse(sz.clone());
            freeze(ws, &u, &z, c)
        };

        let mut full = Vec::with_capacity(n_steps + 1);
        let mut slopes = Vec::with_capacity(n_steps + 1);
        let mut f0 = frozen_at(&mut ws, 0);
        for k in 0..n_steps {
            let fh = frozen_at(&mut ws, 2 * k + 1);
            let f1 = frozen_at(&mut ws, 2 * k + 2);
            let k1 = transport_rhs(&mut ws, &v, &w, &f0);
            let k2 = transport_rhs(&mut ws, &axpy_c(&v, 0.5 * dt, &k1.0), &axpy_c(&w, 0.5 * dt, &k1.1), &fh);
            let k3 = transport_rhs(&mut ws, &axpy_c(&v, 0.5 * dt, &k2.0), &axpy_c(&w, 0.5 * dt, &k2.1), &fh);
            let k4 = transport_rhs(&mut ws, &axpy_c(&v, dt, &k3.0), &axpy_c(&w, dt, &k3.1), &f1);
            let comb = |y: &[Complex64], a: &[Complex64], b: &[Complex64], cc: &[Complex64], d: &[Complex64]| {
                (0..y.len())
                    .map(|i| y[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * cc[i] + d[i]))
                    .collect::<Vec<_>>()
            };
            let v_next = comb(&v, &k1.0, &k2.0, &k3.0, &k4.0);
            let w_next = comb(&w, &k1.1, &k2.1, &k3.1, &k4.1);
            full.push((std::mem::replace(&mut v, v_next), std::mem::replace(&mut w, w_next)));
            slopes.push(k1);
            if !all_finite(&v) || !all_finite(&w) {
                return Err(Error::NonFinite(format!("Friedrichs iterate {}", j + 1)));
            }
            f0 = f1;
        }
        slopes.push(transport_rhs(&mut ws, &v, &w, &f0));
        full.push((v, w));

        let mut next = Vec::with_capacity(2 * n_steps + 1);
        for k in 0..n_steps {
            let (ya, za) = &full[k];
            let (yb, zb) = &full[k + 1];
            let (sa, sb) = (&slopes[k], &slopes[k + 1]);
            let mid = |a: &[Complex64], b: &[Complex64], da: &[Complex64], db: &[Complex64]| {
                (0..a.len())
                    .map(|i| 0.5 * (a[i] + b[i]) + dt / 8.0 * (da[i] - db[i]))
                    .collect::<Vec<_>>()
            };
            next.push(full[k].clone());
            next.push((mid(ya, yb, &sa.0, &sb.0), mid(za, zb, &sa.1, &sb.1)));
        }
        next.push(full[n_steps].clone());
        traj = next;

        let (su, sz) = traj.last().expect("nonempty trajectory").clone();
        let state = State {
            t: cfg.t_final,
            u: Field::from_values_unchecked(grid, ws.inverse(su)),
            zeta: Field::from_values_unchecked(grid, ws.inverse(sz)),
        };
        let prev = iterates.last().expect("iterate 0 present");
        let mut prev = prev.clone();
        prev.t = cfg.t_final;
        differences.push(pair_distance(&mut ws, &state, &prev, cfg.s));
        iterates.push(state);
    }

    Ok(FriedrichsResult {
        iterates,
        differences,
        dt,
        n_steps,
        s: cfg.s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ws_2pi(n: usize) -> SpectralWorkspace {
        SpectralWorkspace::new(Grid::new(n, 2.0 * PI).unwrap())
    }

    #[test]
    fn profile_ranges_and_supports() {
        for i in 0..=4000 {
            let xi = 4.0 * i as f64 / 4000.0;
            let (c, p) = (chi(xi), phi(xi));
            assert!((0.0..=1.0).contains(&c));
            assert!(p >= 0.0 && p <= 1.0);
            if xi <= 0.75 {
                assert_eq!(c, 1.0);
                assert_eq!(p, 0.0);
            }
            if xi >= 8.0 / 3.0 {
                assert_eq!(p, 0.0);
            }
        }
        assert!((chi(1.0) - chi(-1.0)).abs() == 0.0);
    }

    #[test]
    fn partition_of_unity_on_grids() {
        for (n, l) in [(64, 2.0 * PI), (512, 40.0 * PI), (128, 10.0)] {
            let p = DyadicPartition::new(Grid::new(n, l).unwrap());
            assert!(p.partition_residual() <= 1e-12, "n={n} l={l}");
        }
    }

    #[test]
    fn block_index_limit() {
        let mut ws = ws_2pi(64);
        let f = Field::zeros(*ws.grid());
        let q_max = DyadicPartition::new(*ws.grid()).q_max;
        assert!(lp_block(&mut ws, &f, q_max).is_ok());
        assert!(matches!(
            lp_block(&mut ws, &f, q_max + 1),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn constant_lives_in_low_block() {
        let mut ws = ws_2pi(64);
        let f = Field::constant(*ws.grid(), 2.5);
        let low = lp_block(&mut ws, &f, -1).unwrap();
        assert!(low.max_abs_diff(&f) < 1e-14);
        for q in 0..=DyadicPartition::new(*ws.grid()).q_max {
            assert!(lp_block(&mut ws, &f, q).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn lowpass_limits() {
        let mut ws = ws_2pi(64);
        let g = *ws.grid();
        let f = Field::from_fn(g, |x| (8.0 * x).cos());
        assert!(lowpass_s(&mut ws, &f, 0).max_abs() < 1e-15);
        let q_max = DyadicPartition::new(g).q_max;
        let r = Field::from_fn(g, |x| (x.sin() * 3.0).exp());
        assert!(lowpass_s(&mut ws, &r, q_max + 2).max_abs_diff(&r) < 1e-12);
    }

    #[test]
    fn infinite_indices() {
        let mut ws = ws_2pi(64);
        let f = Field::from_fn(*ws.grid(), |x| (3.0 * x).cos());
        let bp = BesovParams::new(0.0, f64::INFINITY, f64::INFINITY).unwrap();
        assert!((besov_norm(&mut ws, &f, &bp) - 1.0).abs() < 1e-12);
        assert!(BesovParams::new(0.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn zero_data_gives_zero_iterates() {
        let g = Grid::new(32, 20.0).unwrap();
        let cfg = FriedrichsConfig {
            t_final: 0.1,
            dt: Some(0.05),
            j_max: 3,
            s: 3.0,
        };
        let res = friedrichs_iterate(&State::zeros(g), &Coefficients::from_vorticity(0.0, 1.0), &cfg).unwrap();
        assert_eq!(res.iterates.len(), 5);
        assert!(res.differences.iter().all(|&d| d == 0.0));
        assert!(res.iterates.iter().all(|s| s.u.max_abs() == 0.0 && s.zeta.max_abs() == 0.0));
    }
}
