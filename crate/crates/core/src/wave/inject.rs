use super::grid::Grid;
use super::laplacian::{DiscreteSubLaplacian, Workspace};
use super::WaveState;
use crate::beams::{BeamSlice, GaussianBeam};
use crate::error::{Error, Result};
use crate::frames::Boundary;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Minimum points per wavelength demanded by [`inject_beam`].
pub const MIN_POINTS_PER_WAVELENGTH: f64 = 10.0;

/// `Re v_k` and `Re ∂_t v_k` on the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamSample {
    pub v: Vec<f64>,
    pub vt: Vec<f64>,
}

/// Largest spacing per axis with `points_per_wavelength` nodes per local wavelength.
///
/// Over the ellipsoid `δᵀ Im M δ ≤ 9/k` (three envelope widths) the phase wavenumber along
/// axis `a` is at most `k|ξ_a| + 3√k √(Re M (Im M)⁻¹ Re M)_aa`; the bound is maximised over
/// the trajectory samples.
pub fn beam_grid_spacing(beam: &GaussianBeam, points_per_wavelength: f64) -> Result<Vec<f64>> {
    let n = beam.trajectory.spatial_dim();
    let mut kmax = vec![0.0f64; n];
    let k = beam.k;
    for i in 0..beam.trajectory.len() {
        let slice = BeamSlice::new(beam, beam.trajectory.times[i])?;
        let im = slice.m.map(|z| z.im);
        let im = (&im + im.transpose()) * 0.5;
        let re = slice.m.map(|z| z.re);
        let eig = SymmetricEigen::new(im.clone());
        if !(eig.eigenvalues.min() > 0.0) {
            return Err(Error::Resolution("Im M is not positive on a slice".into()));
        }
        let inv = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l)) * eig.eigenvectors.transpose();
        let q = &re * inv * &re;
        for a in 0..n {
            let spread = 3.0 * k.sqrt() * q[(a, a)].max(0.0).sqrt();
            kmax[a] = kmax[a].max(k * slice.xi[a].abs() + spread);
        }
    }
    Ok(kmax.iter().map(|&kk| if kk > 0.0 { 2.0 * PI / (points_per_wavelength * kk) } else { f64::INFINITY }).collect())
}

/// Errors unless every axis has at least `points_per_wavelength` nodes per local wavelength.
pub fn check_resolution(beam: &GaussianBeam, grid: &Grid, points_per_wavelength: f64) -> Result<()> {
    let need = beam_grid_spacing(beam, points_per_wavelength)?;
    for (a, h) in need.iter().enumerate() {
        let have = grid.spacing(a);
        if have > h * (1.0 + 1e-9) {
            return Err(Error::Resolution(format!(
                "axis {a}: spacing {have:.3e} exceeds {h:.3e} ({points_per_wavelength} points per wavelength)"
            )));
        }
    }
    Ok(())
}

/// The cutoff tube must stay inside Dirichlet grid windows and be shorter than half a period.
pub(crate) fn check_tube(beam: &GaussianBeam, grid: &Grid) -> Result<()> {
    crate::error::check_dim(grid.dim(), beam.trajectory.spatial_dim())?;
    let r = beam.cutoff;
    for (t, s) in beam.trajectory.times.iter().zip(&beam.trajectory.states) {
        for (a, ax) in grid.axes().iter().enumerate() {
            let ok = match ax.boundary {
                Boundary::Dirichlet => s.x[a] - r > ax.lo && s.x[a] + r < ax.hi,
                Boundary::Periodic => 2.0 * r < ax.extent(),
            };
            if !ok {
                return Err(Error::TubeCollision { time: *t, axis: a });
            }
        }
    }
    Ok(())
}

/// Samples `Re v_k(t)` and `Re ∂_t v_k(t)` at the nodes (nearest periodic image).
pub fn sample_beam(beam: &GaussianBeam, grid: &Grid, t: f64) -> Result<BeamSample> {
    crate::error::check_dim(grid.dim(), beam.trajectory.spatial_dim())?;
    let slice = BeamSlice::new(beam, t)?;
    let dom = beam.frame().domain();
    let r2 = beam.cutoff * beam.cutoff;
    let n = grid.dim();
    let vals: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |x, idx| {
                grid.point_into(idx, x);
                let delta = dom.displacement(&slice.x, x);
                if delta.iter().map(|d| d * d).sum::<f64>() >= r2 {
                    return (0.0, 0.0);
                }
                let b = slice.value(&delta);
                (b.v.re, b.dv_dt.re)
            },
        )
        .collect();
    let (v, vt) = vals.into_iter().unzip();
    Ok(BeamSample { v, vt })
}

/// Discrete initial state from the beam at its start time.
///
/// `u^{−1}` is the Taylor expansion `u₀ − dt u₁ + dt²/2 Δ_h u₀`, continued with
/// `− dt³/6 Δ_h u₁ + dt⁴/24 Δ_h² u₀` for the fourth-order-in-time scheme.
pub fn inject_beam(beam: &GaussianBeam, op: &DiscreteSubLaplacian, dt: f64) -> Result<WaveState> {
    let grid = op.grid();
    check_tube(beam, grid)?;
    check_resolution(beam, grid, MIN_POINTS_PER_WAVELENGTH)?;
    if !(dt > 0.0) {
        return Err(Error::StepSize(dt));
    }
    let t0 = beam.trajectory.times[0];
    let BeamSample { v: u0, vt: u1 } = sample_beam(beam, grid, t0)?;
    let len = grid.len();
    let mut ws = Workspace::new(len);
    let mut lu0 = vec![0.0; len];
    op.apply_with(&u0, &mut lu0, &mut ws);
    let mut prev: Vec<f64> =
        u0.par_iter().zip(u1.par_iter()).zip(lu0.par_iter()).map(|((a, b), l)| a - dt * b + 0.5 * dt * dt * l).collect();
    if op.order().modified_equation() {
        let mut lu1 = vec![0.0; len];
        let mut llu0 = vec![0.0; len];
        op.apply_with(&u1, &mut lu1, &mut ws);
        op.apply_with(&lu0, &mut llu0, &mut ws);
        let (c3, c4) = (dt.powi(3) / 6.0, dt.powi(4) / 24.0);
        prev.par_iter_mut().zip(lu1.par_iter().zip(llu0.par_iter())).for_each(|(p, (a, b))| *p += -c3 * a + c4 * b);
    }
    Ok(WaveState { u_prev: prev, u_curr: u0, t: t0, dt })
}
