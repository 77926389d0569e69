use std::f64::consts::PI;

use vortex2ch::diagnostics::{blowup_integral, energy};
use vortex2ch::model::rhs_nonlocal;
use vortex2ch::timestep::{step_rk4, RunPlan, Simulation};
use vortex2ch::{Coefficients, Field, Frame, Grid, RunStatus, SpectralWorkspace, State};

fn bump(grid: Grid, amp: f64, w: f64, shift: f64) -> Field {
    let c = 0.5 * grid.length() + shift;
    Field::from_fn(grid, |x| amp * (-((x - c) / w).powi(2)).exp())
}

#[test]
fn advection_hook_local_error_is_fifth_order() {
    let g = Grid::new(64, 2.0 * PI).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    let c = Coefficients::advection_hook(1.0);
    let s0 = State {
        t: 0.0,
        u: Field::from_fn(g, |x| (3.0 * x).sin()),
        zeta: Field::from_fn(g, |x| (2.0 * x).cos()),
    };
    let err = |ws: &mut SpectralWorkspace, dt: f64| {
        let s = step_rk4(ws, &s0, dt, &c, Frame::Translated).unwrap();
        let u = Field::from_fn(g, |x| (3.0 * (x - dt)).sin());
        let z = Field::from_fn(g, |x| (2.0 * (x - dt)).cos());
        s.u.max_abs_diff(&u).max(s.zeta.max_abs_diff(&z))
    };
    let e1 = err(&mut ws, 0.1);
    let e2 = err(&mut ws, 0.05);
    // leading term (k dt)^5 / 120
    assert!((e1 - 0.3f64.powi(5) / 120.0).abs() < 0.1 * e1, "{e1}");
    assert!((28.0..36.0).contains(&(e1 / e2)), "ratio {}", e1 / e2);
}

#[test]
fn nonlinear_local_error_order() {
    let g = Grid::new(256, 20.0 * PI).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    let c = Coefficients::from_vorticity(1.0, 1.0);
    let s0 = State {
        t: 0.0,
        u: bump(g, 0.4, 2.0, 0.0),
        zeta: bump(g, 0.2, 2.0, 0.5),
    };
    let reference = |ws: &mut SpectralWorkspace, dt: f64| {
        let mut s = s0.clone();
        for _ in 0..64 {
            s = step_rk4(ws, &s, dt / 64.0, &c, Frame::Translated).unwrap();
        }
        s
    };
    let mut errs = Vec::new();
    for dt in [0.2, 0.1] {
        let r = reference(&mut ws, dt);
        let s = step_rk4(&mut ws, &s0, dt, &c, Frame::Translated).unwrap();
        errs.push(s.u.max_abs_diff(&r.u).max(s.zeta.max_abs_diff(&r.zeta)));
    }
    let ratio = errs[0] / errs[1];
    assert!((24.0..40.0).contains(&ratio), "ratio {ratio}, errors {errs:?}");
}

#[test]
fn energy_rate_vanishes_without_vorticity() {
    // dE/dt = 2 int (u u_t + u_x u_xt + zeta zeta_t)
    let g = Grid::new(512, 40.0 * PI).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    let s = State {
        t: 0.0,
        u: bump(g, 0.7, 2.0, 0.0),
        zeta: bump(g, 0.4, 1.5, 1.0),
    };
    let rate = |ws: &mut SpectralWorkspace, c: &Coefficients| {
        let (ut, zt) = rhs_nonlocal(ws, &s, c, Frame::Translated).unwrap();
        let ux = ws.derivative(&s.u, 1).unwrap();
        let uxt = ws.derivative(&ut, 1).unwrap();
        let sum: f64 = (0..g.n_points())
            .map(|j| {
                s.u.values()[j] * ut.values()[j]
                    + ux.values()[j] * uxt.values()[j]
                    + s.zeta.values()[j] * zt.values()[j]
            })
            .sum();
        2.0 * sum * g.dx()
    };
    let e = energy(&mut ws, &s);
    for c in [Coefficients::generalized_two_component(1.0), Coefficients::sigma0()] {
        assert!(c.conserves_energy());
        let r = rate(&mut ws, &c);
        assert!(r.abs() < 1e-12 * e, "rate {r}");
    }
    let vort = Coefficients::from_vorticity(1.0, 1.0);
    assert!(!vort.conserves_energy());
}

#[test]
fn zero_state_is_a_fixed_point_of_every_preset() {
    let g = Grid::new(64, 20.0).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    for c in [
        Coefficients::from_vorticity(2.0, 1.0),
        Coefficients::from_coriolis(0.5, 0.0),
        Coefficients::sigma0(),
    ] {
        for frame in [Frame::Translated, Frame::Original] {
            let (ut, zt) = rhs_nonlocal(&mut ws, &State::zeros(g), &c, frame).unwrap();
            assert_eq!(ut.max_abs(), 0.0);
            assert_eq!(zt.max_abs(), 0.0);
        }
    }
}

#[test]
fn nonfinite_input_is_rejected() {
    let g = Grid::new(32, 10.0).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    let mut s = State::zeros(g);
    s.u.values_mut()[3] = f64::NAN;
    assert!(rhs_nonlocal(&mut ws, &s, &Coefficients::sigma0(), Frame::Translated).is_err());
}

#[test]
fn steep_front_slope_steepens_until_breaking() {
    // sigma = 1, A = 0, amplitude 2 with a flat initial surface
    let g = Grid::new(8192, 10.0 * PI).unwrap();
    let c0 = 0.5 * g.length();
    let front = (2.0 * std::f64::consts::E).sqrt();
    let s0 = State {
        t: 0.0,
        u: Field::from_fn(g, |x| -2.0 * front * (x - c0) * (-(x - c0).powi(2)).exp()),
        zeta: Field::zeros(g),
    };
    let ctl = vortex2ch::timestep::StepControl {
        breaking_threshold: 40.0,
        ..Default::default()
    };
    let mut sim = Simulation::new(g, Coefficients::generalized_two_component(1.0), Frame::Translated, ctl);
    let out = sim.integrate(s0, &RunPlan::new(2.0, 0.01)).unwrap();
    assert_eq!(out.status, RunStatus::BreakingDetected);
    assert!(out.final_time < 1.0);
    let n = out.records.len();
    let tail = &out.records[n - n / 5..];
    assert!(tail.windows(2).all(|w| w[1].min_ux < w[0].min_ux));
    assert!(out.records.last().unwrap().min_ux <= -40.0);

    let times: Vec<f64> = out.records.iter().map(|r| r.t).collect();
    let running = blowup_integral(&out.records);
    let mid = 0.5 * out.final_time;
    let k = times.iter().position(|t| *t >= mid).unwrap();
    assert!(running[n - 1] > 10.0 * running[k], "{} vs {}", running[n - 1], running[k]);
}
