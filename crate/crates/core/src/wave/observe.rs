use super::grid::Grid;
use super::inject::{inject_beam, sample_beam};
use super::laplacian::{DiscreteSubLaplacian, Workspace};
use super::solver::{leapfrog_run, StepView};
use super::WaveState;
use crate::beams::GaussianBeam;
use crate::error::{Error, Result};
use crate::flow::RegionSpec;
use rayon::prelude::*;

/// Nodes lying in `omega`.
pub fn region_mask(grid: &Grid, omega: &RegionSpec) -> Result<Vec<bool>> {
    let n = grid.dim();
    let mask: Vec<bool> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |x, idx| {
                grid.point_into(idx, x);
                omega.contains(x)
            },
        )
        .collect();
    if !mask.iter().any(|m| *m) {
        return Err(Error::EmptyRegion);
    }
    Ok(mask)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub energy: f64,
    /// Trapezoid contribution of this step to `∫∫_ω |∂_t u|²`.
    pub omega_increment: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuotientRun {
    pub quotient: f64,
    pub energy_drift: f64,
    pub initial_energy: f64,
    pub steps: usize,
    pub dt: f64,
    pub history: Vec<StepRecord>,
}

/// One point of an observability sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityReport {
    pub eps: f64,
    pub k: f64,
    pub t_final: f64,
    pub quotient: f64,
    pub energy_drift: f64,
}

impl ObservabilityReport {
    pub fn from_run(eps: f64, k: f64, run: &QuotientRun) -> Self {
        ObservabilityReport {
            eps,
            k,
            t_final: run.steps as f64 * run.dt,
            quotient: run.quotient,
            energy_drift: run.energy_drift,
        }
    }
}

/// `∫₀^T ∫_ω |∂_t u|² / ‖(u₀, u₁)‖²_{H×L²}` for the run starting at `state`, with `T = steps·dt`.
///
/// `∂_t u^n = (u^{n+1} − u^{n−1}) / 2dt`, the time integral is the trapezoid rule, and the
/// denominator is twice the discrete energy.
pub fn observability_quotient(state: WaveState, op: &DiscreteSubLaplacian, omega: &RegionSpec, steps: usize) -> Result<QuotientRun> {
    let grid = op.grid();
    let mask = region_mask(grid, omega)?;
    let cell = grid.cell_volume();
    let mut state = state;
    let dt = state.dt;
    let mut history = Vec::with_capacity(steps + 1);
    let mut total = 0.0;
    let summary = leapfrog_run(&mut state, op, steps + 1, None, |v: &StepView| {
        let inv = 1.0 / (2.0 * v.dt);
        let dens: f64 = v
            .u_next
            .par_iter()
            .zip(v.u_prev.par_iter())
            .zip(mask.par_iter())
            .filter(|(_, m)| **m)
            .map(|((a, b), _)| {
                let d = (a - b) * inv;
                d * d
            })
            .sum();
        let w = if v.n == 0 || v.n == steps { 0.5 } else { 1.0 };
        let inc = w * dt * cell * dens;
        total += inc;
        history.push(StepRecord { t: v.t, energy: v.energy, omega_increment: inc });
    })?;
    if !(summary.initial_energy > 0.0) {
        return Err(Error::ZeroInitialData);
    }
    Ok(QuotientRun {
        quotient: total / (2.0 * summary.initial_energy),
        energy_drift: summary.max_relative_drift,
        initial_energy: summary.initial_energy,
        steps,
        dt,
        history,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackingRun {
    /// `sup_t E_h(u − Re v_k)` over the checkpoints.
    pub max_error: f64,
    /// `(t, E_h(u − Re v_k))` per checkpoint.
    pub errors: Vec<(f64, f64)>,
    /// Discrete energy of the injected data.
    pub initial_energy: f64,
    pub steps: usize,
    pub dt: f64,
}

/// Evolves the injected beam over its lifetime and measures the discrete energy of
/// `u − Re v_k` at `checkpoints + 1` equally spaced times.
///
/// `dt` is reduced so that a whole number of steps reaches the final beam time.
pub fn beam_tracking_error(beam: &GaussianBeam, op: &DiscreteSubLaplacian, dt: f64, checkpoints: usize) -> Result<TrackingRun> {
    if checkpoints == 0 {
        return Err(Error::InvalidParameter("at least one checkpoint is needed".into()));
    }
    let dur = beam.duration();
    let steps = if dur > 0.0 { ((dur / dt).ceil() as usize).div_ceil(checkpoints) * checkpoints } else { 0 };
    let dt = if steps > 0 { dur / steps as f64 } else { dt };
    let stride = (steps / checkpoints).max(1);
    let mut state = inject_beam(beam, op, dt)?;
    let grid = op.grid();
    let len = grid.len();
    let t0 = state.t;
    let u1 = sample_beam(beam, grid, t0)?.vt;
    let modified = op.order().modified_equation();

    let mut errors = Vec::new();
    let mut failure = None;
    let mut ws = Workspace::new(len);
    let mut w = vec![0.0; len];
    let mut wd = vec![0.0; len];
    let mut lwd = vec![0.0; len];
    let summary = leapfrog_run(&mut state, op, steps + 1, None, |v: &StepView| {
        if failure.is_some() || !v.n.is_multiple_of(stride) || v.n > steps {
            return;
        }
        let t = if v.n == steps { t0 + dur } else { v.t };
        let sample = match sample_beam(beam, grid, t) {
            Ok(s) => s,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        if v.n == 0 {
            wd.par_iter_mut().zip(u1.par_iter()).for_each(|(d, a)| *d = *a);
        } else {
            let inv = 1.0 / (2.0 * v.dt);
            wd.par_iter_mut().zip(v.u_next.par_iter().zip(v.u_prev.par_iter())).for_each(|(d, (a, b))| *d = (a - b) * inv);
            if modified {
                op.apply_with(&wd, &mut lwd, &mut ws);
                let c = v.dt * v.dt / 6.0;
                wd.par_iter_mut().zip(lwd.par_iter()).for_each(|(d, l)| *d -= c * l);
            }
        }
        wd.par_iter_mut().zip(sample.vt.par_iter()).for_each(|(d, s)| *d -= s);
        w.par_iter_mut().zip(v.u_curr.par_iter().zip(sample.v.par_iter())).for_each(|(x, (u, s))| *x = u - s);
        let e = 0.5 * grid.norm_sq(&wd) + 0.5 * op.dirichlet_form(&w, &w);
        errors.push((t, e));
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let max_error = errors.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(TrackingRun { max_error, errors, initial_energy: summary.initial_energy, steps, dt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Aabb;
    use crate::frames::{builtin_frame, AxisSpec, Domain, PolyVectorField, SubRiemannianFrame};
    use crate::wave::{build_sublaplacian, stable_dt, StencilOrder};
    use std::f64::consts::PI;

    fn line_frame() -> SubRiemannianFrame {
        SubRiemannianFrame::new(
            vec![PolyVectorField::coordinate(2, 0)],
            Domain::new(vec![AxisSpec::periodic(0.0, 2.0), AxisSpec::periodic(0.0, 1.0)]),
        )
        .unwrap()
    }

    pub(crate) fn unit_spiral_beam(t_final: f64, k: f64, cutoff: f64) -> GaussianBeam {
        use crate::beams::*;
        let f = builtin_frame("heisenberg").unwrap();
        let p = crate::flow::heisenberg_closed_form(1.0, 0.0);
        let tr = crate::flow::integrate_bicharacteristic(&f, &p.x, &p.xi, t_final, 1e-3).unwrap();
        let st = spacetime_lift(&tr).unwrap();
        let m0 = default_initial_phase(&st);
        let ph = propagate_phase(&st, &m0).unwrap();
        let a = transport_amplitude(&st, &ph, C64::new(1.0, 0.0)).unwrap();
        assemble_beam(st, ph, a, k, cutoff).unwrap()
    }

    #[test]
    fn empty_region_and_zero_data_rejected() {
        let f = line_frame();
        let g = Grid::for_frame(&f, &[32, 8]).unwrap();
        let op = build_sublaplacian(&f, &g, StencilOrder::Second).unwrap();
        let s = WaveState::zeros(g.len(), stable_dt(&op));
        let none = RegionSpec::Boxes(vec![Aabb::new(vec![5.0, 5.0], vec![6.0, 6.0])]);
        assert!(matches!(observability_quotient(s.clone(), &op, &none, 10), Err(Error::EmptyRegion)));
        assert!(matches!(observability_quotient(s, &op, &RegionSpec::Everything, 10), Err(Error::ZeroInitialData)));
    }

    #[test]
    fn standing_mode_quotient_matches_closed_form() {
        let f = line_frame();
        let g = Grid::for_frame(&f, &[64, 8]).unwrap();
        let op = build_sublaplacian(&f, &g, StencilOrder::Second).unwrap();
        let h = g.spacing(0);
        let omega_h = (PI * h).sin() / h;
        let t_final = 0.7;
        let steps = (t_final / stable_dt(&op)).ceil() as usize;
        let dt = t_final / steps as f64;
        // exact discrete solution cos(w t_n) cos(πx)
        let w = 2.0 / dt * (0.5 * dt * omega_h).asin();
        let u0 = g.sample(|x| (PI * x[0]).cos());
        let up: Vec<f64> = u0.iter().map(|v| v * (w * dt).cos()).collect();
        let run = observability_quotient(WaveState { u_prev: up, u_curr: u0, t: 0.0, dt }, &op, &RegionSpec::Everything, steps).unwrap();
        let trapezoid: f64 = (0..=steps)
            .map(|n| {
                let wt = if n == 0 || n == steps { 0.5 } else { 1.0 };
                wt * dt * (w * n as f64 * dt).sin().powi(2)
            })
            .sum();
        assert!((run.quotient - trapezoid).abs() < 1e-10, "{} {}", run.quotient, trapezoid);
        // continuum: (T/2)(1 − sinc(2ωT))
        let x = 2.0 * PI * t_final;
        let expect = 0.5 * t_final * (1.0 - x.sin() / x);
        assert!((run.quotient - expect).abs() < 1e-2 * expect, "{} {}", run.quotient, expect);
        assert!(run.energy_drift < 1e-12);
        assert_eq!(run.history.len(), steps + 1);
    }

    #[test]
    fn tracking_error_vanishes_at_time_zero() {
        let beam = unit_spiral_beam(0.1, 20.0, 0.5);
        let g = Grid::window(&[-0.8; 3], &[0.8; 3], &[40, 40, 40]).unwrap();
        let f = builtin_frame("heisenberg").unwrap();
        let op = build_sublaplacian(&f, &g, StencilOrder::Second).unwrap();
        let run = beam_tracking_error(&beam, &op, stable_dt(&op), 2).unwrap();
        assert_eq!(run.errors[0].1, 0.0);
        assert!(run.errors.len() == 3);
        assert!(run.initial_energy > 0.0);
        assert!(run.max_error < 0.5 * run.initial_energy);
    }
}
