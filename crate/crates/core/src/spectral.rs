//! Fourier-space primitives on the periodic grid.
//!
//! All transforms use the unnormalised forward convention
//! `f_hat[k] = sum_j f[j] exp(-i xi_k x_j)`, so that
//! `f[j] = (1/N) sum_k f_hat[k] exp(i xi_k x_j)`.
//!
//! The Nyquist coefficient of a real field is treated as a cosine: it is dropped by
//! odd-order derivatives and by `P(D)`, and split evenly between `+N/2` and `-N/2`
//! when a spectrum is zero-padded.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Default zero-padding ratio: alias-free for quartic nonlinearities.
pub const DEFAULT_PADDING: (usize, usize) = (5, 2);

/// Multiplier of `(1 - d_xx)^{-1}` at angular wavenumber `xi`.
pub fn helmholtz_multiplier(xi: f64) -> f64 {
    1.0 / (1.0 + xi * xi)
}

/// Multiplier of `P(D) = -d_x (1 - d_xx)^{-1}` at angular wavenumber `xi`.
pub fn pd_multiplier(xi: f64) -> Complex64 {
    Complex64::new(0.0, -xi / (1.0 + xi * xi))
}

/// FFT plans, multiplier tables and padded-grid plans for one grid.
///
/// A workspace belongs to a single simulation; it is `Send` but not meant to be shared.
pub struct SpectralWorkspace {
    grid: Grid,
    wavenumbers: Vec<f64>,
    helmholtz: Vec<f64>,
    pd: Vec<Complex64>,
    padding: (usize, usize),
    padded_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    pad_forward: Arc<dyn Fft<f64>>,
    pad_inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for SpectralWorkspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralWorkspace")
            .field("grid", &self.grid)
            .field("padding", &self.padding)
            .field("padded_len", &self.padded_len)
            .finish()
    }
}

impl SpectralWorkspace {
    pub fn new(grid: Grid) -> Self {
        Self::with_padding(grid, DEFAULT_PADDING.0, DEFAULT_PADDING.1)
            .expect("default padding ratio is valid")
    }

    /// Workspace with zero-padding ratio `num/den >= 1`.
    ///
    /// Ratios below 5/2 are accepted but no longer alias-free for the quartic terms of
    /// the model; see [`SpectralWorkspace::padding_warning`].
    pub fn with_padding(grid: Grid, num: usize, den: usize) -> Result<Self> {
        if den == 0 || num < den {
            return Err(Error::Config(format!(
                "padding ratio must be >= 1, got {num}/{den}"
            )));
        }
        let n = grid.n_points();
        let padded_len = fft_friendly((n * num).div_ceil(den));
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let pad_forward = planner.plan_fft_forward(padded_len);
        let pad_inverse = planner.plan_fft_inverse(padded_len);
        let scratch_len = [&forward, &inverse, &pad_forward, &pad_inverse]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);

        let wavenumbers: Vec<f64> = (0..n).map(|k| grid.wavenumber(k)).collect();
        let helmholtz = wavenumbers.iter().map(|&xi| helmholtz_multiplier(xi)).collect();
        let nyq = n / 2;
        let pd = wavenumbers
            .iter()
            .enumerate()
            .map(|(k, &xi)| {
                if k == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    pd_multiplier(xi)
                }
            })
            .collect();

        Ok(Self {
            grid,
            wavenumbers,
            helmholtz,
            pd,
            padding: (num, den),
            padded_len,
            forward,
            inverse,
            pad_forward,
            pad_inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn padded_len(&self) -> usize {
        self.padded_len
    }

    /// Highest polynomial degree whose products are alias-free after truncation.
    pub fn alias_free_degree(&self) -> usize {
        // need padded_len >= (d + 1) n / 2
        (2 * self.padded_len / self.grid.n_points()).saturating_sub(1)
    }

    /// Returns a message when the padding ratio is below the quartic-safe 5/2.
    pub fn padding_warning(&self) -> Option<String> {
        let (num, den) = self.padding;
        (2 * num < 5 * den).then(|| {
            format!(
                "padding ratio {num}/{den} is below 5/2: products of degree > {} alias",
                self.alias_free_degree()
            )
        })
    }

    /// Unnormalised forward transform of real grid values.
    pub fn forward(&mut self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.grid.n_points());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process_with_scratch(&mut buf, &mut self.scratch);
        buf
    }

    /// Inverse transform including the `1/N` factor; returns the real part.
    pub fn inverse(&mut self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        let n = self.grid.n_points() as f64;
        self.inverse.process_with_scratch(&mut spectrum, &mut self.scratch);
        spectrum.into_iter().map(|c| c.re / n).collect()
    }

    /// Multiply a spectrum in place by `(i xi)^order`.
    pub fn differentiate_spectrum(&self, spectrum: &mut [Complex64], order: u32) {
        let nyq = self.grid.n_points() / 2;
        for (k, (c, &xi)) in spectrum.iter_mut().zip(&self.wavenumbers).enumerate() {
            if k == nyq && order % 2 == 1 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, xi).powu(order);
            }
        }
    }

    pub fn helmholtz_spectrum(&self, spectrum: &mut [Complex64]) {
        for (c, &m) in spectrum.iter_mut().zip(&self.helmholtz) {
            *c *= m;
        }
    }

    pub fn pd_spectrum(&self, spectrum: &mut [Complex64]) {
        for (c, &m) in spectrum.iter_mut().zip(&self.pd) {
            *c *= m;
        }
    }

    /// Spectral derivative of order 1, 2 or 3.
    pub fn derivative(&mut self, f: &Field, order: u32) -> Result<Field> {
        if !(1..=3).contains(&order) {
            return Err(Error::Config(format!(
                "derivative order must be 1, 2 or 3, got {order}"
            )));
        }
        self.check(f, "derivative input")?;
        let mut s = self.forward(f.values());
        self.differentiate_spectrum(&mut s, order);
        Ok(Field::from_values_unchecked(self.grid, self.inverse(s)))
    }

    /// Solves `(1 - d_xx) g = f`.
    pub fn helmholtz_inverse(&mut self, f: &Field) -> Result<Field> {
        self.check(f, "helmholtz_inverse input")?;
        let mut s = self.forward(f.values());
        self.helmholtz_spectrum(&mut s);
        Ok(Field::from_values_unchecked(self.grid, self.inverse(s)))
    }

    /// Applies `P(D) = -d_x (1 - d_xx)^{-1}`.
    pub fn apply_pd(&mut self, f: &Field) -> Result<Field> {
        self.check(f, "apply_pd input")?;
        let mut s = self.forward(f.values());
        self.pd_spectrum(&mut s);
        Ok(Field::from_values_unchecked(self.grid, self.inverse(s)))
    }

    /// `P(D)` on complex grid values (test harness for non-real modes).
    pub fn apply_pd_complex(&mut self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n_points() as f64;
        let mut buf = values.to_vec();
        self.forward.process_with_scratch(&mut buf, &mut self.scratch);
        for (c, &m) in buf.iter_mut().zip(&self.pd) {
            *c *= m;
        }
        self.inverse.process_with_scratch(&mut buf, &mut self.scratch);
        buf.iter_mut().for_each(|c| *c /= n);
        buf
    }

    /// Values of the trigonometric interpolant of `spectrum` on the padded grid.
    pub fn pad_spectrum(&mut self, spectrum: &[Complex64]) -> Vec<f64> {
        let n = self.grid.n_points();
        let m = self.padded_len;
        let nyq = n / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (k, &c) in spectrum.iter().enumerate() {
            if k == nyq {
                buf[nyq] += 0.5 * c;
                buf[m - nyq] += 0.5 * c;
            } else {
                let mode = self.grid.mode(k);
                buf[mode.rem_euclid(m as i64) as usize] = c;
            }
        }
        self.pad_inverse.process_with_scratch(&mut buf, &mut self.scratch);
        let scale = 1.0 / n as f64;
        buf.into_iter().map(|c| c.re * scale).collect()
    }

    /// Interpolates real grid values onto the padded grid.
    pub fn pad(&mut self, values: &[f64]) -> Vec<f64> {
        let s = self.forward(values);
        self.pad_spectrum(&s)
    }

    /// Grid spectrum of padded-grid values, truncated to the resolvable modes.
    pub fn truncate_spectrum(&mut self, padded: &[f64]) -> Vec<Complex64> {
        let n = self.grid.n_points();
        let m = self.padded_len;
        debug_assert_eq!(padded.len(), m);
        let nyq = n / 2;
        let mut buf: Vec<Complex64> = padded.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.pad_forward.process_with_scratch(&mut buf, &mut self.scratch);
        let scale = n as f64 / m as f64;
        (0..n)
            .map(|k| {
                if k == nyq {
                    (buf[nyq] + buf[m - nyq]) * scale
                } else {
                    let mode = self.grid.mode(k);
                    buf[mode.rem_euclid(m as i64) as usize] * scale
                }
            })
            .collect()
    }

    /// Truncates padded-grid values back to grid values.
    pub fn truncate(&mut self, padded: &[f64]) -> Vec<f64> {
        let s = self.truncate_spectrum(padded);
        self.inverse(s)
    }

    /// Pointwise product of 2 to 4 fields, evaluated on the padded grid and truncated.
    pub fn dealias_product(&mut self, factors: &[&Field]) -> Result<Field> {
        if !(2..=4).contains(&factors.len()) {
            return Err(Error::Config(format!(
                "dealias_product takes 2 to 4 factors, got {}",
                factors.len()
            )));
        }
        if let Some(bad) = factors.iter().find(|f| *f.grid() != self.grid) {
            return Err(Error::Config(format!(
                "factor grid {:?} does not match workspace grid {:?}",
                bad.grid(),
                self.grid
            )));
        }
        for f in factors {
            f.check_finite("dealias_product factor")?;
        }
        let mut acc = self.pad(factors[0].values());
        for f in &factors[1..] {
            let p = self.pad(f.values());
            acc.iter_mut().zip(&p).for_each(|(a, b)| *a *= b);
        }
        Ok(Field::from_values_unchecked(self.grid, self.truncate(&acc)))
    }

    /// Evaluates the trigonometric interpolant of `f` at arbitrary positions.
    pub fn trig_interpolate(&mut self, f: &Field, positions: &[f64]) -> Vec<f64> {
        let s = self.forward(f.values());
        self.interpolate_spectrum(&s, positions, 0)
    }

    /// Evaluates the `order`-th derivative of the interpolant described by `spectrum`.
    ///
    /// Positions are wrapped into `[0, L)` first.
    pub fn interpolate_spectrum(
        &self,
        spectrum: &[Complex64],
        positions: &[f64],
        order: u32,
    ) -> Vec<f64> {
        let n = self.grid.n_points();
        let nyq = n / 2;
        let mut s = spectrum.to_vec();
        self.differentiate_spectrum(&mut s, order);
        let dk = 2.0 * std::f64::consts::PI / self.grid.length();
        let inv_n = 1.0 / n as f64;
        positions
            .iter()
            .map(|&x| {
                let x = self.grid.wrap(x);
                let step = Complex64::from_polar(1.0, dk * x);
                let mut phase = step;
                let mut acc = 0.0;
                for c in &s[1..nyq] {
                    acc += (c * phase).re;
                    phase *= step;
                }
                let nyq_term = s[nyq].re * (self.wavenumbers[nyq] * x).cos();
                (s[0].re + 2.0 * acc + nyq_term) * inv_n
            })
            .collect()
    }

    fn check(&self, f: &Field, what: &str) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::Config(format!(
                "{what}: field grid {:?} does not match workspace grid {:?}",
                f.grid(),
                self.grid
            )));
        }
        f.check_finite(what)
    }
}

/// Smallest even 5-smooth integer `>= n`.
fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(2);
    loop {
        if m % 2 == 0 && is_5_smooth(m) {
            return m;
        }
        m += 1;
    }
}

fn is_5_smooth(mut m: usize) -> bool {
    for p in [2, 3, 5] {
        while m % p == 0 {
            m /= p;
        }
    }
    m == 1
}
