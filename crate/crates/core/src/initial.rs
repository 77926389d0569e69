//! Initial-data library.

use crate::config::{InitialDataSpec, InitialKind};
use crate::diagnostics::{energy, GLOBAL_ENERGY_BOUND};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::model::State;
use crate::spectral::SpectralWorkspace;

/// Largest magnitude allowed at the first and last grid nodes.
pub const EDGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub state: State,
    /// Factor applied to the raw profile to reach `target_E0` (1 otherwise).
    pub scale: f64,
    pub energy: f64,
    /// Non-fatal findings, recorded in the run manifest.
    pub warnings: Vec<String>,
}

/// Unscaled `(u0, zeta0)` of an analytic profile.
pub fn profile(spec: &InitialDataSpec, grid: Grid) -> Result<(Field, Field)> {
    if !(spec.width > 0.0) {
        return Err(Error::Validation(format!(
            "initial width must be positive, got {}",
            spec.width
        )));
    }
    let c = spec.center.unwrap_or(0.5 * grid.length());
    let (a, z, w, k) = (spec.amplitude, spec.zeta_amplitude, spec.width, spec.wavenumber);
    let s = move |x: f64| (x - c) / w;
    let gauss = move |x: f64| (-s(x).powi(2)).exp();
    let sech2 = move |x: f64| {
        let e = (-2.0 * s(x).abs()).exp();
        4.0 * e / (1.0 + e).powi(2)
    };
    let front = (2.0 * std::f64::consts::E).sqrt();
    Ok(match spec.kind {
        InitialKind::Gaussian => (
            Field::from_fn(grid, |x| a * gauss(x)),
            Field::from_fn(grid, |x| z * gauss(x)),
        ),
        InitialKind::Sech2 => (
            Field::from_fn(grid, |x| a * sech2(x)),
            Field::from_fn(grid, |x| z * sech2(x)),
        ),
        InitialKind::SinePacket => (
            Field::from_fn(grid, |x| a * gauss(x) * (k * (x - c)).sin()),
            Field::from_fn(grid, |x| z * gauss(x) * (k * (x - c)).cos()),
        ),
        InitialKind::SteepFront => (
            Field::from_fn(grid, |x| -a * front * s(x) * gauss(x)),
            Field::from_fn(grid, |x| z * gauss(x)),
        ),
        InitialKind::File => {
            let path = spec
                .file
                .as_ref()
                .ok_or_else(|| Error::Config("initial.file is required for kind 'file'".into()))?;
            let st = crate::output::read_snapshot(path, Some(grid))?;
            (st.u, st.zeta)
        }
    })
}

fn check_edges(u: &Field, zeta: &Field) -> Result<()> {
    let n = u.values().len();
    let worst = [u.values()[0], u.values()[n - 1], zeta.values()[0], zeta.values()[n - 1]]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if !(worst < EDGE_TOLERANCE) {
        return Err(Error::Validation(format!(
            "initial data is {worst:e} at the domain edges (must be below {EDGE_TOLERANCE:e}); \
             use a larger grid.length or a narrower profile"
        )));
    }
    Ok(())
}

/// Builds `(u0, zeta0)` on `grid`, enforces edge decay and applies the energy rescaling.
pub fn generate_initial_data(spec: &InitialDataSpec, grid: Grid) -> Result<InitialData> {
    let (u, zeta) = profile(spec, grid)?;
    u.check_finite("initial u")?;
    zeta.check_finite("initial zeta")?;
    let mut ws = SpectralWorkspace::new(grid);
    let mut state = State { t: 0.0, u, zeta };
    let mut scale = 1.0;
    let mut warnings = Vec::new();

    if let Some(target) = spec.target_e0 {
        let raw = energy(&mut ws, &state);
        if raw == 0.0 && target > 0.0 {
            return Err(Error::Validation(
                "initial.target_E0 > 0 requested for a zero profile".into(),
            ));
        }
        // E is homogeneous of degree 2 in a common factor of (u, zeta)
        scale = if raw == 0.0 { 0.0 } else { (target / raw).sqrt() };
        state.u = state.u.scaled(scale);
        state.zeta = state.zeta.scaled(scale);
        let got = energy(&mut ws, &state);
        if (got - target).abs() >= 1e-10 {
            return Err(Error::Validation(format!(
                "energy rescaling reached {got}, target {target}"
            )));
        }
        if spec.global_regime && target >= GLOBAL_ENERGY_BOUND {
            warnings.push(format!(
                "global_regime requested with target_E0 = {target} >= 1/3; the small-energy condition does not hold"
            ));
        }
    }
    check_edges(&state.u, &state.zeta)?;
    let e0 = energy(&mut ws, &state);
    if spec.global_regime && spec.target_e0.is_none() && e0 >= GLOBAL_ENERGY_BOUND {
        warnings.push(format!(
            "global_regime requested with E(0) = {e0} >= 1/3; the small-energy condition does not hold"
        ));
    }
    Ok(InitialData {
        state,
        scale,
        energy: e0,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(512, 40.0 * PI).unwrap()
    }

    #[test]
    fn zero_amplitude_gives_zero_fields() {
        let d = generate_initial_data(&InitialDataSpec::gaussian(0.0, 1.0), grid()).unwrap();
        assert_eq!(d.state.u.max_abs(), 0.0);
        assert_eq!(d.state.zeta.max_abs(), 0.0);
    }

    #[test]
    fn wide_profile_fails_edge_check() {
        let e = generate_initial_data(&InitialDataSpec::gaussian(1.0, 20.0), grid()).unwrap_err();
        assert!(e.to_string().contains("grid.length"));
    }

    #[test]
    fn steep_front_slope() {
        let spec = InitialDataSpec::steep_front(2.0, 1.0);
        let g = grid();
        let (u, z) = profile(&spec, g).unwrap();
        let c = 0.5 * g.length();
        // closed-form derivative of -a sqrt(2e) s exp(-s^2)
        let d = |x: f64| {
            let s: f64 = x - c;
            -2.0 * (2.0 * std::f64::consts::E).sqrt() * (1.0 - 2.0 * s * s) * (-s * s).exp()
        };
        let min_closed = g.nodes().into_iter().map(d).fold(f64::INFINITY, f64::min);
        assert!(min_closed < -1.0);
        assert!(u.max_abs() > 0.0 && (z.min() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn warning_for_large_global_target() {
        let mut spec = InitialDataSpec::gaussian(0.1, 1.0);
        spec.target_e0 = Some(0.5);
        spec.global_regime = true;
        let d = generate_initial_data(&spec, grid()).unwrap();
        assert_eq!(d.warnings.len(), 1);
    }
}
