//! Uniform periodic grid and real-valued grid functions.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid on `[0, length)` with `n_points` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_points: usize,
    length: f64,
}

impl Grid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(n_points: usize, length: f64) -> Result<Self> {
        if n_points < Self::MIN_POINTS || !n_points.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid.n must be a power of two >= {}, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Config(format!(
                "grid.length must be finite and positive, got {length}"
            )));
        }
        Ok(Self { n_points, length })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_points as f64
    }

    /// Coordinate of node `j`.
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Signed integer mode number stored at FFT index `k`.
    ///
    /// The Nyquist index `n/2` maps to `-n/2`.
    pub fn mode(&self, k: usize) -> i64 {
        let n = self.n_points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Angular wavenumber `2 pi k / L` at FFT index `k`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * self.mode(k) as f64 / self.length
    }

    /// Largest resolvable angular wavenumber `pi n / L`.
    pub fn nyquist_wavenumber(&self) -> f64 {
        PI * self.n_points as f64 / self.length
    }

    /// Wrap a coordinate into `[0, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let y = x.rem_euclid(self.length);
        if y >= self.length {
            0.0
        } else {
            y
        }
    }
}

/// Real-valued grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Config(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Build a field from a closure of position, without finiteness checks.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_points()).map(|j| f(grid.x(j))).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.n_points()],
        }
    }

    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Returns `Err(NonFinite)` naming `what` when any value is NaN or infinite.
    pub fn check_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Riemann-sum integral over one period.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Pointwise `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &Field) -> Field {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        Field::from_values_unchecked(self.grid, values)
    }

    pub fn scaled(&self, scale: f64) -> Field {
        Field::from_values_unchecked(self.grid, self.values.iter().map(|v| v * scale).collect())
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub(crate) fn same_grid(&self, other: &Field) -> bool {
        self.grid == other.grid
    }
}
