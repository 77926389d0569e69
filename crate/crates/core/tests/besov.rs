use std::f64::consts::PI;

use vortex2ch::besov::{
    besov_norm, block_norms, friedrichs_iterate, lowpass_s, lp_block, norm_equivalence_constants,
    BesovParams, FriedrichsConfig,
};
use vortex2ch::{Coefficients, Error, Field, Grid, SpectralWorkspace, State};

// Reference profile built directly from exp(-1/t).
fn chi_ref(xi: f64) -> f64 {
    let h = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let x = xi.abs();
    let (a, b) = (h(16.0 / 9.0 - x * x), h(x * x - 9.0 / 16.0));
    if a + b == 0.0 {
        return if x < 1.0 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

fn l2(f: &[f64], dx: f64) -> f64 {
    (f.iter().map(|v| v * v).sum::<f64>() * dx).sqrt()
}

#[test]
fn blocks_of_cos3x_match_direct_multipliers() {
    let g = Grid::new(64, 2.0 * PI).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    let f = Field::from_fn(g, |x| (3.0 * x).cos());
    let mut total = Field::zeros(g);
    for q in -1..=5 {
        let m = if q < 0 {
            chi_ref(3.0)
        } else {
            chi_ref(3.0 / 2f64.powi(q + 1)) - chi_ref(3.0 / 2f64.powi(q))
        };
        let b = lp_block(&mut ws, &f, q).unwrap();
        let want = Field::from_fn(g, |x| m * (3.0 * x).cos());
        assert!(b.max_abs_diff(&want) < 1e-14, "block {q}");
        if !(q == 1 || q == 2) {
            assert!(b.max_abs() < 1e-14, "block {q} should vanish");
        }
        total = total.axpy(1.0, &b);
    }
    assert!(total.max_abs_diff(&f) < 1e-14);
}

#[test]
fn distant_blocks_have_disjoint_spectra() {
    let g = Grid::new(256, 40.0).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    let f = Field::from_fn(g, |x| (-(x - 20.0f64).powi(2) / 0.1).exp());
    let q_max = vortex2ch::besov::DyadicPartition::new(g).q_max;
    assert_eq!(q_max, 4);
    let blocks: Vec<_> = (-1..=q_max).map(|q| lp_block(&mut ws, &f, q).unwrap()).collect();
    let spectra: Vec<Vec<f64>> = blocks
        .iter()
        .map(|b| ws.forward(b.values()).iter().map(|c| c.norm()).collect())
        .collect();
    for i in 0..spectra.len() {
        for j in i + 2..spectra.len() {
            let overlap = spectra[i]
                .iter()
                .zip(&spectra[j])
                .fold(0.0f64, |m, (a, b)| m.max(a.min(*b)));
            assert!(overlap < 1e-12, "blocks {} and {}", i as i32 - 1, j as i32 - 1);
        }
    }
}

#[test]
fn block_beyond_resolution_is_an_error() {
    let g = Grid::new(64, 2.0 * PI).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    let f = Field::zeros(g);
    assert!(lp_block(&mut ws, &f, 5).is_ok());
    assert!(matches!(lp_block(&mut ws, &f, 6), Err(Error::Resolution { q: 6, q_max: 5 })));
}

#[test]
fn equivalence_constants() {
    // at most two neighbouring profiles overlap, so the sum of squares lies in [1/2, 1]
    let (c1, c2) = norm_equivalence_constants();
    assert!((c1 - 0.5f64.sqrt()).abs() < 1e-6, "{c1}");
    assert!((c2 - 1.0).abs() < 1e-15, "{c2}");

    let g = Grid::new(256, 40.0).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    let f = Field::from_fn(g, |x| (-(x - 20.0f64).powi(2)).exp() * (3.0 * x).sin());
    let b = besov_norm(&mut ws, &f, &BesovParams::new(0.0, 2.0, 2.0).unwrap());
    let n = l2(f.values(), g.dx());
    assert!(b >= c1 * n * (1.0 - 1e-12) && b <= c2 * n * (1.0 + 1e-12));
}

#[test]
fn single_mode_norm_inside_one_block() {
    // xi = 3 sits where block 1 equals 1
    let g = Grid::new(64, 2.0 * PI).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    let f = Field::from_fn(g, |x| (3.0 * x).cos());
    for (s, p, r) in [(1.0, 2.0, 2.0), (2.5, 2.0, 1.0), (-1.0, f64::INFINITY, f64::INFINITY)] {
        let bp = BesovParams::new(s, p, r).unwrap();
        let lp = if p.is_infinite() { 1.0 } else { PI.sqrt() };
        let want = 2f64.powf(s) * lp;
        assert!((besov_norm(&mut ws, &f, &bp) - want).abs() < 1e-12 * want);
        let blocks = block_norms(&mut ws, &f, &bp);
        assert_eq!(blocks.iter().filter(|v| **v > 1e-10 * want).count(), 1);
    }
    assert!(BesovParams::new(1.0, 0.5, 2.0).is_err());
}

#[test]
fn lowpass_error_decays() {
    let g = Grid::new(512, 40.0 * PI).unwrap();
    let mut ws = SpectralWorkspace::new(g);
    let c = 20.0 * PI;
    let f = Field::from_fn(g, |x| (-((x - c) / 0.7).powi(2)).exp());
    let errs: Vec<f64> = (0..7)
        .map(|j| l2(lowpass_s(&mut ws, &f, j).axpy(-1.0, &f).values(), g.dx()))
        .collect();
    // strictly decreasing until the roundoff floor
    assert!(errs.windows(2).all(|w| w[1] < w[0] || w[0] < 1e-14), "{errs:?}");
    assert!(errs[6] < 1e-14);
}

#[test]
fn friedrichs_initial_data_converge() {
    let g = Grid::new(256, 40.0 * PI).unwrap();
    let c = 20.0 * PI;
    let s0 = State {
        t: 0.0,
        u: Field::from_fn(g, |x| 0.3 * (-(x - c).powi(2)).exp()),
        zeta: Field::from_fn(g, |x| 0.15 * (-(x - c).powi(2)).exp()),
    };
    let cfg = FriedrichsConfig {
        t_final: 0.2,
        ..Default::default()
    };
    let res = friedrichs_iterate(&s0, &Coefficients::generalized_two_component(1.0), &cfg).unwrap();
    assert_eq!(res.iterates.len(), cfg.j_max + 2);
    assert_eq!(res.differences.len(), cfg.j_max + 1);
    assert!(res.ratios().iter().skip(2).all(|r| *r < 1.0));
    // iterate 0 is identically zero
    assert_eq!(res.iterates[0].u.max_abs(), 0.0);
}

#[test]
fn friedrichs_rejects_bad_horizon() {
    let g = Grid::new(32, 10.0).unwrap();
    let cfg = FriedrichsConfig {
        t_final: -1.0,
        ..Default::default()
    };
    assert!(friedrichs_iterate(&State::zeros(g), &Coefficients::sigma0(), &cfg).is_err());
}
