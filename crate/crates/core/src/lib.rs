//! Pseudospectral solver and diagnostics for a two-component shallow-water system with
//! constant vorticity in the Camassa-Holm regime.

pub mod besov;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod initial;
pub mod model;
pub mod output;
pub mod runner;
pub mod spectral;
pub mod timestep;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use model::{Coefficients, Frame, State};
pub use config::RunConfig;
pub use spectral::SpectralWorkspace;
pub use timestep::{RunOutcome, RunStatus};
