use super::grid::Grid;
use super::laplacian::{build_sublaplacian, StencilOrder};
use super::solver::{leapfrog_run, stable_dt};
use super::WaveState;
use crate::error::{Error, Result};
use crate::frames::{AxisSpec, Boundary, Domain, SubRiemannianFrame};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Manufactured solution `u = A cos t · Π φ_j(x_j)` on the frame's own box.
///
/// `φ_j` is `sin²(π(x−lo)/L)` on Dirichlet axes and `cos(2π(x−lo)/L)` on periodic ones.
/// The Dirichlet profile has a vanishing normal derivative, which the zero-padded wide
/// stencil needs for consistency at the wall.
#[derive(Clone, Debug, PartialEq)]
pub struct ManufacturedSpec {
    pub amplitude: f64,
    pub t_final: f64,
}

impl Default for ManufacturedSpec {
    fn default() -> Self {
        ManufacturedSpec { amplitude: 1.0, t_final: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub counts: Vec<usize>,
    /// Largest grid spacing.
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    /// `max_n ‖u^n − u(t_n)‖_{L²}`.
    pub error: f64,
    /// `log(e_{i−1}/e_i) / log(h_{i−1}/h_i)`; absent on the first row.
    pub order: Option<f64>,
}

/// Per-axis factor and its first two derivatives.
fn factor(ax: &AxisSpec, x: f64) -> [f64; 3] {
    let w = 2.0 * PI / ax.length();
    let (s, c) = (w * (x - ax.lo)).sin_cos();
    match ax.boundary {
        Boundary::Dirichlet => [0.5 * (1.0 - c), 0.5 * w * s, 0.5 * w * w * c],
        Boundary::Periodic => [c, -w * s, -w * w * c],
    }
}

/// `(s, Δs)` at `x` for the separable profile, from the exact polynomial coefficients.
fn profile(frame: &SubRiemannianFrame, x: &[f64]) -> (f64, f64) {
    let n = x.len();
    let dom = frame.domain();
    let fac: Vec<[f64; 3]> = (0..n).map(|j| factor(dom.axis(j), x[j])).collect();
    let s: f64 = fac.iter().map(|f| f[0]).product();
    let prod_except = |skip: &[usize]| -> f64 { (0..n).filter(|j| !skip.contains(j)).map(|j| fac[j][0]).product() };
    let grad: Vec<f64> = (0..n).map(|j| fac[j][1] * prod_except(&[j])).collect();
    let hess = |j: usize, l: usize| -> f64 {
        if j == l {
            fac[j][2] * prod_except(&[j])
        } else {
            fac[j][1] * fac[l][1] * prod_except(&[j, l])
        }
    };
    let jet = frame.jet(x, false);
    let mut lap = 0.0;
    for i in 0..frame.rank() {
        let div: f64 = (0..n).map(|j| jet.dx(i, j, j)).sum();
        for j in 0..n {
            let cij = jet.x(i, j);
            lap += div * cij * grad[j];
            for l in 0..n {
                lap += cij * jet.x(i, l) * hess(j, l) + cij * jet.dx(i, l, j) * grad[l];
            }
        }
    }
    (s, lap)
}

/// Second-order solver convergence on a refinement sequence of node counts.
///
/// `dt` is halved with each grid, starting from the largest stable step of the first grid that
/// divides `t_final`.
pub fn manufactured_convergence(frame: &SubRiemannianFrame, grids: &[Vec<usize>], spec: &ManufacturedSpec) -> Result<Vec<ConvergenceRow>> {
    if grids.len() < 3 {
        return Err(Error::InvalidParameter(format!("{} grids given; a refinement study needs at least 3", grids.len())));
    }
    if !(spec.t_final > 0.0) {
        return Err(Error::InvalidParameter("final time must be positive".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(grids.len());
    let mut base_steps = 0;
    for (gi, counts) in grids.iter().enumerate() {
        let grid = Grid::for_frame(frame, counts)?;
        let op = build_sublaplacian(frame, &grid, StencilOrder::Second)?;
        if gi == 0 {
            base_steps = (spec.t_final / stable_dt(&op)).ceil() as usize;
        }
        let steps = base_steps << gi;
        let dt = spec.t_final / steps as f64;
        let a = spec.amplitude;
        let pairs: Vec<(f64, f64)> = grid.sample_map(|x| profile(frame, x));
        let s: Vec<f64> = pairs.iter().map(|p| a * p.0).collect();
        let g: Vec<f64> = pairs.iter().map(|p| a * (-p.0 - p.1)).collect();
        let mut state = WaveState { u_prev: s.iter().map(|v| v * dt.cos()).collect(), u_curr: s.clone(), t: 0.0, dt };
        let forcing = |t: f64, out: &mut [f64]| {
            let c = t.cos();
            out.par_iter_mut().zip(g.par_iter()).for_each(|(o, v)| *o = c * v);
        };
        let mut error: f64 = 0.0;
        leapfrog_run(&mut state, &op, steps, Some(&forcing), |v| {
            let c = (v.t + v.dt).cos();
            let e2: f64 = v.u_next.par_iter().zip(s.par_iter()).map(|(u, p)| (u - c * p).powi(2)).sum();
            error = error.max((grid.cell_volume() * e2).sqrt());
        })?;
        let h = (0..grid.dim()).map(|j| grid.spacing(j)).fold(0.0, f64::max);
        let order = rows.last().map(|p| (p.error / error).ln() / (p.h / h).ln());
        rows.push(ConvergenceRow { counts: counts.clone(), h, dt, steps, error, order });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispersionResult {
    pub count: usize,
    pub h: f64,
    pub dt: f64,
    /// `max_n max_x |u^n − cos(πx₂)cos(πt_n)|` over one period.
    pub max_error: f64,
    pub order: Option<f64>,
}

/// Plane wave `cos(πx₂)cos(πt)` for one period on a straight periodic box `[−1, 1)³`
/// carrying the frame's fields; only `∂₂` acts on it. `dt/h` is fixed by the first grid.
pub fn dispersion_check(frame: &SubRiemannianFrame, counts: &[usize]) -> Result<Vec<DispersionResult>> {
    crate::error::check_dim(3, frame.dim())?;
    let f = frame.with_domain(Domain::new(vec![AxisSpec::periodic(-1.0, 1.0); 3]))?;
    let mut out: Vec<DispersionResult> = Vec::with_capacity(counts.len());
    let period = 2.0;
    let mut courant = 0.0;
    for (gi, &c) in counts.iter().enumerate() {
        let grid = Grid::for_frame(&f, &[8, c, 8])?;
        let op = build_sublaplacian(&f, &grid, StencilOrder::Second)?;
        if gi == 0 {
            courant = stable_dt(&op) / grid.spacing(1);
        }
        let steps = (period / (courant * grid.spacing(1))).ceil() as usize;
        let dt = period / steps as f64;
        let u0 = grid.sample(|x| (PI * x[1]).cos());
        let mut state = WaveState { u_prev: u0.iter().map(|v| v * (PI * dt).cos()).collect(), u_curr: u0.clone(), t: 0.0, dt };
        let mut err: f64 = 0.0;
        leapfrog_run(&mut state, &op, steps, None, |v| {
            let ct = (PI * (v.t + v.dt)).cos();
            let e = v.u_next.iter().zip(&u0).map(|(u, p)| (u - ct * p).abs()).fold(0.0, f64::max);
            err = err.max(e);
        })?;
        let h = grid.spacing(1);
        let order = out.last().map(|p| (p.max_error / err).ln() / (p.h / h).ln());
        out.push(DispersionResult { count: c, h, dt, max_error: err, order });
    }
    Ok(out)
}
