//! Benchmark fixtures shared by the criterion targets.

use hypowave_core::beams::GaussianBeam;
use hypowave_core::experiments::{heisenberg_box, spiral_beam};
use hypowave_core::wave::{build_sublaplacian, DiscreteSubLaplacian, Grid, StencilOrder};
use hypowave_core::{builtin_frame, Result};

/// Sub-Laplacian of the built-in Heisenberg frame on a cube of `n` nodes per axis.
pub fn heisenberg_operator(n: usize, order: StencilOrder) -> Result<DiscreteSubLaplacian> {
    let f = builtin_frame("heisenberg")?;
    let g = Grid::for_frame(&f, &[n - 1, n, n])?;
    build_sublaplacian(&f, &g, order)
}

/// Unit spiral beam on the enlarged box.
pub fn unit_beam(k: f64) -> Result<GaussianBeam> {
    spiral_beam(&heisenberg_box(3.0)?, 1.0, 0.5, k, 0.6, false)
}
