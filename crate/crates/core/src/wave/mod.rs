//! Finite-difference wave solver for `∂_tt u = Δ_h u`.
//!
//! The discrete sub-Laplacian is assembled as `−Σ X_{i,h}ᵀ X_{i,h}` from centred differences,
//! time stepping is leapfrog, and the module provides the energy, beam injection, tracking and
//! observability measurements built on top of it.

mod checkpoint;
mod grid;
mod inject;
mod laplacian;
mod manufactured;
mod observe;
mod solver;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use grid::{Grid, GridAxis, MIN_AXIS_NODES};
pub use inject::{MIN_POINTS_PER_WAVELENGTH, beam_grid_spacing, check_resolution, inject_beam, sample_beam, BeamSample};
pub use laplacian::{build_sublaplacian, DiscreteSubLaplacian, StencilOrder, Workspace};
pub use manufactured::{dispersion_check, manufactured_convergence, ConvergenceRow, DispersionResult, ManufacturedSpec};
pub use observe::{
    beam_tracking_error, observability_quotient, region_mask, ObservabilityReport, QuotientRun, StepRecord, TrackingRun,
};
pub use solver::{leapfrog_run, stable_dt, Forcing, RunSummary, StepView};

/// Two consecutive time levels `u^{n−1}, u^n` with `u^n` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub t: f64,
    pub dt: f64,
}

impl WaveState {
    pub fn zeros(len: usize, dt: f64) -> Self {
        WaveState { u_prev: vec![0.0; len], u_curr: vec![0.0; len], t: 0.0, dt }
    }

    pub fn len(&self) -> usize {
        self.u_curr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_curr.is_empty()
    }
}
