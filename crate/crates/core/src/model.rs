//! Model catalog and right-hand sides.
//!
//! The general system is written for the velocity `u` and `rho = 1 + zeta`:
//!
//! ```text
//! m_t + sigma (2 m u_x + u m_x) + 3 (1 - sigma) u u_x + (rho^2 / 2)_x + a1 (rho^2 u)_x
//!     + a2 (rho u)_x + a3 u_x + a4 u_xxx + a5 (u^2 rho (rho - 1))_x + a6 (u^3)_x = 0
//! rho_t + (rho u)_x + b1 rho^2 rho_x + b2 rho u u_x + b3 rho u^2 u_x = 0
//! ```
//!
//! with `m = u - u_xx`. The evolved (nonlocal) form solves for `(u, zeta)` with the
//! operator `P(D) = -d_x (1 - d_xx)^{-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::spectral::SpectralWorkspace;

/// Where a coefficient set came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Constant vorticity `A` with Burns speed `c`.
    Vorticity { a: f64, c: f64, beta1: f64, beta2: f64 },
    /// Coriolis parameter `omega`.
    Coriolis { omega: f64, c: f64, beta1: f64, beta2: f64 },
    Custom,
}

/// Parameter set `sigma, a1..a6, b1..b3` of the general system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub sigma: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub provenance: Provenance,
    /// Test hook: when set, both equations reduce to `f_t = -speed * f_x`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_advection: Option<f64>,
}

/// Right-moving Burns speed `c = (A + sqrt(A^2 + 4)) / 2`.
pub fn burns_speed(a: f64) -> f64 {
    let root = (a * a + 4.0).sqrt();
    if a >= 0.0 {
        0.5 * (a + root)
    } else {
        // same root without cancellation
        2.0 / (root - a)
    }
}

/// `c = sqrt(1 + omega^2) - omega`.
pub fn coriolis_speed(omega: f64) -> f64 {
    let root = (1.0 + omega * omega).sqrt();
    if omega >= 0.0 {
        1.0 / (root + omega)
    } else {
        root - omega
    }
}

impl Coefficients {
    /// Constant-vorticity system.
    pub fn from_vorticity(a: f64, sigma: f64) -> Self {
        let c = burns_speed(a);
        let beta1 = -(c * c + 5.0) / 48.0;
        let beta2 = (c.powi(3) + 3.0 * c) / 4.0;
        Self {
            sigma,
            a1: 0.0,
            a2: 0.0,
            a3: 0.0,
            a4: -a,
            a5: 24.0 * beta1,
            a6: 4.0 * beta2,
            b1: a,
            b2: a,
            b3: 24.0 * beta1,
            provenance: Provenance::Vorticity { a, c, beta1, beta2 },
            test_advection: None,
        }
    }

    /// Equatorial system with Coriolis parameter `omega`.
    pub fn from_coriolis(omega: f64, sigma: f64) -> Self {
        let c = coriolis_speed(omega);
        let c2 = c * c;
        let beta1 = (1.0 - 7.0 * c2) / (48.0 * c2);
        let beta2 = (c2 * c2 + 5.0 * c2 - 2.0) / (4.0 * c2 * c);
        Self {
            sigma,
            a1: 2.0 * omega,
            a2: -8.0 * omega,
            a3: 4.0 * omega,
            a4: 0.0,
            a5: 24.0 * beta1,
            a6: 4.0 * beta2,
            b1: 0.0,
            b2: 2.0 * omega,
            b3: 24.0 * beta1,
            provenance: Provenance::Coriolis { omega, c, beta1, beta2 },
            test_advection: None,
        }
    }

    /// Zero-vorticity system with free `sigma`.
    pub fn generalized_two_component(sigma: f64) -> Self {
        Self::from_vorticity(0.0, sigma)
    }

    /// Zero-vorticity system with `sigma = 0`, the global-existence setting.
    pub fn sigma0() -> Self {
        Self::from_vorticity(0.0, 0.0)
    }

    /// Custom coefficients `a = [a1..a6]`, `b = [b1..b3]`.
    pub fn custom(sigma: f64, a: [f64; 6], b: [f64; 3]) -> Self {
        Self {
            sigma,
            a1: a[0],
            a2: a[1],
            a3: a[2],
            a4: a[3],
            a5: a[4],
            a6: a[5],
            b1: b[0],
            b2: b[1],
            b3: b[2],
            provenance: Provenance::Custom,
            test_advection: None,
        }
    }

    /// Pure linear transport at `speed` in both components.
    pub fn advection_hook(speed: f64) -> Self {
        Self {
            test_advection: Some(speed),
            ..Self::custom(0.0, [0.0; 6], [0.0; 3])
        }
    }

    /// `(sigma, a1..a6, b1..b3)` as a flat tuple.
    pub fn tuple(&self) -> [f64; 10] {
        [
            self.sigma, self.a1, self.a2, self.a3, self.a4, self.a5, self.a6, self.b1, self.b2,
            self.b3,
        ]
    }

    /// True for the zero-vorticity `sigma = 0` system (energy and bounds monitors apply).
    pub fn is_sigma0_zero_vorticity(&self) -> bool {
        let reference = Self::sigma0().tuple();
        self.test_advection.is_none()
            && self
                .tuple()
                .iter()
                .zip(reference)
                .all(|(a, b)| (a - b).abs() < 1e-14)
    }

    /// True when the energy functional is conserved (zero vorticity, any `sigma`).
    pub fn conserves_energy(&self) -> bool {
        let reference = Self::sigma0().tuple();
        self.test_advection.is_none()
            && self.tuple()[1..]
                .iter()
                .zip(&reference[1..])
                .all(|(a, b)| (a - b).abs() < 1e-14)
    }
}

/// Snapshot `(t, u, zeta)` with `zeta = rho - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub zeta: Field,
}

impl State {
    pub fn new(t: f64, u: Field, zeta: Field) -> Result<Self> {
        if !u.same_grid(&zeta) {
            return Err(Error::Config("u and zeta live on different grids".into()));
        }
        Ok(Self { t, u, zeta })
    }

    pub fn zeros(grid: crate::grid::Grid) -> Self {
        Self {
            t: 0.0,
            u: Field::zeros(grid),
            zeta: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> &crate::grid::Grid {
        self.u.grid()
    }

    pub fn rho(&self) -> Field {
        Field::from_values_unchecked(*self.grid(), self.zeta.values().iter().map(|z| z + 1.0).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.u.is_finite() && self.zeta.is_finite()
    }

    pub fn check_finite(&self) -> Result<()> {
        self.u.check_finite("u")?;
        self.zeta.check_finite("zeta")
    }
}

/// Reference frame of the evolved system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Linear drift terms `a4 u_x` and `b1 zeta_x` removed.
    #[default]
    Translated,
    /// All linear terms of the momentum form kept.
    Original,
}

fn finite_or(values: &[f64], term: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(term.to_string()))
    }
}

/// Right-hand side `(u_t, zeta_t)` of the nonlocal system.
pub fn rhs_nonlocal(
    ws: &mut SpectralWorkspace,
    state: &State,
    c: &Coefficients,
    frame: Frame,
) -> Result<(Field, Field)> {
    let grid = *state.grid();
    finite_or(state.u.values(), "u")?;
    finite_or(state.zeta.values(), "zeta")?;

    let su = ws.forward(state.u.values());
    let sz = ws.forward(state.zeta.values());
    let mut sux = su.clone();
    ws.differentiate_spectrum(&mut sux, 1);
    let mut szx = sz.clone();
    ws.differentiate_spectrum(&mut szx, 1);

    if let Some(speed) = c.test_advection {
        let du = ws.inverse(sux.iter().map(|v| -speed * v).collect());
        let dz = ws.inverse(szx.iter().map(|v| -speed * v).collect());
        return Ok((
            Field::from_values_unchecked(grid, du),
            Field::from_values_unchecked(grid, dz),
        ));
    }

    let u = ws.pad_spectrum(&su);
    let ux = ws.pad_spectrum(&sux);
    let z = ws.pad_spectrum(&sz);
    let zx = ws.pad_spectrum(&szx);

    let s = c.sigma;
    let m = u.len();
    let mut bracket = Vec::with_capacity(m);
    let mut transport = Vec::with_capacity(m);
    let mut zrhs = Vec::with_capacity(m);
    for i in 0..m {
        let (u, ux, z, zx) = (u[i], ux[i], z[i], zx[i]);
        let u2 = u * u;
        bracket.push(
            0.5 * (3.0 - s) * u2
                + 0.5 * s * ux * ux
                + 0.5 * z * z
                + z
                + c.a1 * (z * z * u + 2.0 * z * u + u)
                + c.a2 * (z * u + u)
                + (c.a3 + c.a4) * u
                + c.a5 * (u2 * z * z + u2 * z)
                + c.a6 * u2 * u,
        );
        transport.push(s * u * ux);
        zrhs.push(
            -(u + c.b1 * z * z + 2.0 * c.b1 * z) * zx - (z + 1.0) * ux
                - c.b2 * (z + 1.0) * u * ux
                - c.b3 * (z + 1.0) * u2 * ux,
        );
    }
    finite_or(&bracket, "P(D) bracket")?;
    finite_or(&transport, "sigma u u_x")?;
    finite_or(&zrhs, "zeta right-hand side")?;

    let mut sb = ws.truncate_spectrum(&bracket);
    ws.pd_spectrum(&mut sb);
    let st = ws.truncate_spectrum(&transport);
    let mut du_spec: Vec<_> = sb.iter().zip(&st).map(|(b, t)| b - t).collect();
    let mut dz_spec = ws.truncate_spectrum(&zrhs);
    if frame == Frame::Original {
        du_spec.iter_mut().zip(&sux).for_each(|(d, v)| *d += c.a4 * v);
        dz_spec.iter_mut().zip(&szx).for_each(|(d, v)| *d -= c.b1 * v);
    }
    let du = ws.inverse(du_spec);
    let dz = ws.inverse(dz_spec);
    finite_or(&du, "u_t")?;
    finite_or(&dz, "zeta_t")?;
    Ok((
        Field::from_values_unchecked(grid, du),
        Field::from_values_unchecked(grid, dz),
    ))
}

/// Right-hand side `(u_t, rho_t)` evaluated literally in momentum form.
///
/// `u_t` is recovered as `(1 - d_xx)^{-1} m_t`; the result equals the nonlocal right-hand
/// side in the original frame.
pub fn rhs_m_form(
    ws: &mut SpectralWorkspace,
    state: &State,
    c: &Coefficients,
) -> Result<(Field, Field)> {
    let grid = *state.grid();
    finite_or(state.u.values(), "u")?;
    finite_or(state.zeta.values(), "zeta")?;

    let su = ws.forward(state.u.values());
    let sz = ws.forward(state.zeta.values());
    let deriv = |ws: &SpectralWorkspace, s: &[num_complex::Complex64], order| {
        let mut d = s.to_vec();
        ws.differentiate_spectrum(&mut d, order);
        d
    };
    let sux = deriv(ws, &su, 1);
    let suxx = deriv(ws, &su, 2);
    let suxxx = deriv(ws, &su, 3);
    let szx = deriv(ws, &sz, 1);
    let sm: Vec<_> = su.iter().zip(&suxx).map(|(a, b)| a - b).collect();
    let smx: Vec<_> = sux.iter().zip(&suxxx).map(|(a, b)| a - b).collect();

    let u = ws.pad_spectrum(&su);
    let ux = ws.pad_spectrum(&sux);
    let mm = ws.pad_spectrum(&sm);
    let mx = ws.pad_spectrum(&smx);
    let z = ws.pad_spectrum(&sz);
    let zx = ws.pad_spectrum(&szx);

    let s = c.sigma;
    let n_pad = u.len();
    let mut m_local = Vec::with_capacity(n_pad);
    let mut m_flux = Vec::with_capacity(n_pad);
    let mut r_flux = Vec::with_capacity(n_pad);
    let mut r_local = Vec::with_capacity(n_pad);
    for i in 0..n_pad {
        let (u, ux, m, mx) = (u[i], ux[i], mm[i], mx[i]);
        let rho = 1.0 + z[i];
        let rhox = zx[i];
        let u2 = u * u;
        m_local.push(s * (2.0 * m * ux + u * mx) + 3.0 * (1.0 - s) * u * ux);
        m_flux.push(
            0.5 * rho * rho
                + c.a1 * rho * rho * u
                + c.a2 * rho * u
                + c.a5 * u2 * rho * (rho - 1.0)
                + c.a6 * u2 * u,
        );
        r_flux.push(rho * u);
        r_local.push(c.b1 * rho * rho * rhox + c.b2 * rho * u * ux + c.b3 * rho * u2 * ux);
    }
    finite_or(&m_local, "momentum transport")?;
    finite_or(&m_flux, "momentum flux")?;
    finite_or(&r_flux, "rho flux")?;
    finite_or(&r_local, "rho source")?;

    let sl = ws.truncate_spectrum(&m_local);
    let flux = ws.truncate_spectrum(&m_flux);
    let sf = deriv(ws, &flux, 1);
    let mut mt: Vec<_> = (0..sl.len())
        .map(|k| -(sl[k] + sf[k] + c.a3 * sux[k] + c.a4 * suxxx[k]))
        .collect();
    ws.helmholtz_spectrum(&mut mt);
    let du = ws.inverse(mt);

    let flux = ws.truncate_spectrum(&r_flux);
    let srf = deriv(ws, &flux, 1);
    let srl = ws.truncate_spectrum(&r_local);
    let drho = ws.inverse(srf.iter().zip(&srl).map(|(a, b)| -(a + b)).collect());
    finite_or(&du, "u_t")?;
    finite_or(&drho, "rho_t")?;
    Ok((
        Field::from_values_unchecked(grid, du),
        Field::from_values_unchecked(grid, drho),
    ))
}

/// Residuals of the coefficient identities for one vorticity value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditEntry {
    pub a: f64,
    pub c: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// `|c^2 - A c - 1|`
    pub burns: f64,
    /// unsimplified minus simplified `beta1`
    pub beta1_forms: f64,
    /// `|beta2 - (alpha1 - alpha2)|`
    pub beta2_split: f64,
    /// `|6 beta1 - alpha2 / c|`
    pub alpha2_choice: f64,
    /// `|A - (c^2 - 1) / c|`
    pub inverse_map: f64,
}

impl AuditEntry {
    pub fn residuals(&self) -> [f64; 5] {
        [
            self.burns,
            self.beta1_forms,
            self.beta2_split,
            self.alpha2_choice,
            self.inverse_map,
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals().into_iter().fold(0.0, f64::max)
    }
}

/// Audit of the coefficient identities over a set of vorticity samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub tolerance: f64,
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub const RESIDUAL_NAMES: [&'static str; 5] = [
        "burns",
        "beta1_forms",
        "beta2_split",
        "alpha2_choice",
        "inverse_map",
    ];

    /// Largest residual of each identity across all samples.
    pub fn max_residuals(&self) -> [f64; 5] {
        let mut out = [0.0f64; 5];
        for e in &self.entries {
            for (o, r) in out.iter_mut().zip(e.residuals()) {
                *o = (*o).max(r);
            }
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| {
            e.residuals()
                .iter()
                .all(|r| r.is_finite() && *r <= self.tolerance)
        })
    }
}

pub const AUDIT_TOLERANCE: f64 = 1e-12;

pub fn audit_coefficient_identities(a_samples: &[f64]) -> AuditReport {
    let entries = a_samples
        .iter()
        .map(|&a| {
            let c = burns_speed(a);
            let c2 = c * c;
            let c3 = c2 * c;
            let beta1 = -(c2 + 5.0) / 48.0;
            let beta1_long =
                -((5.0 * c2 + 1.0) / 48.0 + (3.0 * c3 - c) * a / 48.0 - a * (c3 + c) / 16.0);
            let alpha1 = (c3 + c) / 8.0;
            let alpha2 = -c * (c2 + 5.0) / 8.0;
            let beta2 = (c3 + 3.0 * c) / 4.0;
            AuditEntry {
                a,
                c,
                beta1,
                beta2,
                alpha1,
                alpha2,
                burns: (c2 - a * c - 1.0).abs(),
                beta1_forms: (beta1_long - beta1).abs(),
                beta2_split: (beta2 - (alpha1 - alpha2)).abs(),
                alpha2_choice: (6.0 * beta1 - alpha2 / c).abs(),
                inverse_map: (a - (c2 - 1.0) / c).abs(),
            }
        })
        .collect();
    AuditReport {
        tolerance: AUDIT_TOLERANCE,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn vorticity_at_zero() {
        let c = Coefficients::from_vorticity(0.0, 1.0);
        let Provenance::Vorticity { c: speed, beta1, beta2, .. } = c.provenance else {
            panic!("wrong provenance")
        };
        assert_eq!(speed, 1.0);
        assert_eq!(beta1, -0.125);
        assert_eq!(beta2, 1.0);
        assert_eq!((c.a5, c.a6, c.b3, c.a4), (-3.0, 4.0, -3.0, 0.0));
    }

    #[test]
    fn vorticity_three_halves() {
        let c = Coefficients::from_vorticity(1.5, 0.0);
        let Provenance::Vorticity { c: speed, beta1, beta2, .. } = c.provenance else {
            panic!()
        };
        assert!((speed - 2.0).abs() < 1e-15);
        assert!((beta1 + 9.0 / 48.0).abs() < 1e-15);
        assert!((beta2 - 3.5).abs() < 1e-15);
        assert!((speed * speed - 1.5 * speed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vorticity_negative_root() {
        let c = Coefficients::from_vorticity(-1.5, 0.0);
        let Provenance::Vorticity { c: speed, .. } = c.provenance else {
            panic!()
        };
        assert!((speed - 0.5).abs() < 1e-15);
        assert!((-1.5 - (speed * speed - 1.0) / speed).abs() < 1e-14);
    }

    #[test]
    fn coriolis_reduces_to_vorticity_at_zero() {
        let a = Coefficients::from_coriolis(0.0, 0.7);
        let b = Coefficients::from_vorticity(0.0, 0.7);
        assert_eq!(a.tuple(), b.tuple());
    }

    #[test]
    fn coriolis_unit_rotation() {
        let c = Coefficients::from_coriolis(1.0, 1.0);
        let Provenance::Coriolis { c: speed, beta1, beta2, .. } = c.provenance else {
            panic!()
        };
        let expected = 2f64.sqrt() - 1.0;
        assert!((speed - expected).abs() < 1e-15);
        let c2 = expected * expected;
        assert!((beta1 - (1.0 - 7.0 * c2) / (48.0 * c2)).abs() < 1e-13);
        assert!((beta2 - (c2 * c2 + 5.0 * c2 - 2.0) / (4.0 * c2 * expected)).abs() < 1e-13);
        assert_eq!((c.a1, c.a2, c.a3, c.b2), (2.0, -8.0, 4.0, 2.0));
    }

    #[test]
    fn coriolis_continuity_near_zero() {
        let a = Coefficients::from_coriolis(1e-8, 1.0).tuple();
        let b = Coefficients::from_coriolis(0.0, 1.0).tuple();
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn audit_at_zero_is_exact() {
        let r = audit_coefficient_identities(&[0.0]);
        assert!(r.entries[0].max_residual() < 1e-14);
        assert!((r.entries[0].beta1 + 0.125).abs() < 1e-16);
    }

    #[test]
    fn audit_at_two() {
        let r = audit_coefficient_identities(&[2.0]);
        let e = r.entries[0];
        assert!((e.c - (1.0 + 2f64.sqrt())).abs() < 1e-14);
        assert!(e.beta1_forms < 1e-12);
        assert!(r.passed());
    }

    #[test]
    fn rest_state_is_equilibrium() {
        let g = Grid::new(32, 10.0).unwrap();
        let mut ws = SpectralWorkspace::new(g);
        let s = State::zeros(g);
        for c in [
            Coefficients::from_vorticity(1.0, 1.0),
            Coefficients::from_coriolis(1.0, 0.0),
        ] {
            let (du, dz) = rhs_nonlocal(&mut ws, &s, &c, Frame::Translated).unwrap();
            assert_eq!(du.max_abs(), 0.0);
            assert_eq!(dz.max_abs(), 0.0);
            let (du, dr) = rhs_m_form(&mut ws, &s, &c).unwrap();
            assert!(du.max_abs() < 1e-15);
            assert!(dr.max_abs() < 1e-15);
        }
    }

    #[test]
    fn nonfinite_names_the_field() {
        let g = Grid::new(16, 1.0).unwrap();
        let mut ws = SpectralWorkspace::new(g);
        let mut s = State::zeros(g);
        s.zeta.values_mut()[2] = f64::NAN;
        let err = rhs_nonlocal(&mut ws, &s, &Coefficients::sigma0(), Frame::Translated).unwrap_err();
        assert!(err.to_string().contains("zeta"));
    }

    #[test]
    fn linearisation_keeps_only_minus_ux() {
        let g = Grid::new(64, 2.0 * std::f64::consts::PI).unwrap();
        let mut ws = SpectralWorkspace::new(g);
        let eps = 1e-6;
        let s = State {
            t: 0.0,
            u: Field::from_fn(g, |x| eps * x.cos()),
            zeta: Field::zeros(g),
        };
        let c = Coefficients::custom(0.0, [0.0; 6], [0.0; 3]);
        let (du, dz) = rhs_nonlocal(&mut ws, &s, &c, Frame::Translated).unwrap();
        assert!(du.max_abs() < 10.0 * eps * eps);
        let expected = Field::from_fn(g, |x| eps * x.sin());
        assert!(dz.max_abs_diff(&expected) < 10.0 * eps * eps);
    }
}
