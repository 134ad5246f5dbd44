//! Parameter sweeps: observability quotients along shrinking spirals and escape times
//! from horizontal strips.

use crate::beams::{
    assemble_beam, beam_energy, beam_residual, default_initial_phase, propagate_phase, spacetime_lift, transport_amplitude,
    EnergyRegion, GaussianBeam, PhaseMatrixPath, QuadratureSpec, C64,
};
use crate::error::{Error, Result};
use crate::flow::{confinement_radius, escape_time, heisenberg_closed_form, integrate_bicharacteristic, Aabb, RegionSpec};
use crate::frames::{builtin_frame, AxisSpec, Domain, SubRiemannianFrame};
use crate::wave::{
    beam_grid_spacing, beam_tracking_error, build_sublaplacian, inject_beam, observability_quotient, stable_dt,
    DiscreteSubLaplacian, Grid, ObservabilityReport, StencilOrder, WaveState, MIN_AXIS_NODES, MIN_POINTS_PER_WAVELENGTH,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

/// Heisenberg fields on `[−L, L]` (Dirichlet) `× T_{2L} × T_{2L}`.
pub fn heisenberg_box(half_width: f64) -> Result<SubRiemannianFrame> {
    let l = half_width;
    builtin_frame("heisenberg")?.with_domain(Domain::new(vec![
        AxisSpec::dirichlet(-l, l),
        AxisSpec::periodic(-l, l),
        AxisSpec::periodic(-l, l),
    ]))
}

/// Beam along the spiral of parameter `eps` through the origin with the default initial phase.
///
/// `frozen` keeps `M ≡ M0` (the phase control).
pub fn spiral_beam(frame: &SubRiemannianFrame, eps: f64, t_final: f64, k: f64, cutoff: f64, frozen: bool) -> Result<GaussianBeam> {
    let p = heisenberg_closed_form(eps, 0.0);
    let traj = integrate_bicharacteristic(frame, &p.x, &p.xi, t_final, 1e-3 * eps.min(1.0))?;
    let st = spacetime_lift(&traj)?;
    let m0 = default_initial_phase(&st);
    let phase = if frozen { PhaseMatrixPath::frozen(&st, m0) } else { propagate_phase(&st, &m0)? };
    let amp = transport_amplitude(&st, &phase, C64::new(1.0, 0.0))?;
    assemble_beam(st, phase, amp, k, cutoff)
}

/// Residual and energy study of spiral beams over a list of frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamStudySpec {
    pub eps: f64,
    pub t_final: f64,
    pub cutoff: f64,
    pub box_half_width: f64,
    pub ks: Vec<f64>,
    /// Times at which energies are measured.
    pub energy_times: Vec<f64>,
    pub tube_radius: f64,
    pub with_frozen_control: bool,
}

impl Default for BeamStudySpec {
    fn default() -> Self {
        BeamStudySpec {
            eps: 1.0,
            t_final: 1.0,
            cutoff: 2.0,
            box_half_width: 3.0,
            ks: vec![40.0, 80.0, 160.0, 320.0],
            energy_times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            tube_radius: 0.1,
            with_frozen_control: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamStudyRow {
    pub k: f64,
    /// `‖P v_k‖_{L¹L²}`.
    pub residual: f64,
    pub frozen_residual: Option<f64>,
    /// `(t, total energy, energy outside the tube)`.
    pub energies: Vec<(f64, f64, f64)>,
}

pub fn beam_study(spec: &BeamStudySpec) -> Result<Vec<BeamStudyRow>> {
    if spec.ks.is_empty() {
        return Err(Error::InvalidParameter("k list is empty".into()));
    }
    let frame = heisenberg_box(spec.box_half_width)?;
    let quad = QuadratureSpec::default();
    spec.ks
        .par_iter()
        .map(|&k| {
            let beam = spiral_beam(&frame, spec.eps, spec.t_final, k, spec.cutoff, false)?;
            let residual = beam_residual(&beam, &quad)?;
            let frozen_residual = if spec.with_frozen_control {
                Some(beam_residual(&spiral_beam(&frame, spec.eps, spec.t_final, k, spec.cutoff, true)?, &quad)?)
            } else {
                None
            };
            let energies = spec
                .energy_times
                .iter()
                .map(|&t| {
                    beam_energy(&beam, t, &EnergyRegion::Tube { radius: spec.tube_radius }, &quad).map(|(e, o)| (t, e, o))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BeamStudyRow { k, residual, frozen_residual, energies })
        })
        .collect()
}

/// Grid tracking of spiral beams on a Dirichlet window around the tube.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackingSpec {
    pub eps: f64,
    pub t_final: f64,
    pub cutoff: f64,
    pub box_half_width: f64,
    pub ks: Vec<f64>,
    pub points_per_wavelength: f64,
    pub order: StencilOrder,
    pub checkpoints: usize,
}

impl Default for TrackingSpec {
    fn default() -> Self {
        TrackingSpec {
            eps: 1.0,
            t_final: 0.5,
            cutoff: 0.6,
            box_half_width: 3.0,
            ks: vec![40.0, 80.0, 160.0],
            points_per_wavelength: MIN_POINTS_PER_WAVELENGTH,
            order: StencilOrder::Eighth,
            checkpoints: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackingRow {
    pub k: f64,
    pub points_per_wavelength: f64,
    pub counts: Vec<usize>,
    pub steps: usize,
    pub max_error: f64,
    pub initial_energy: f64,
    pub frozen_amplitude: bool,
}

impl TrackingRow {
    pub fn relative_error(&self) -> f64 {
        self.max_error / self.initial_energy
    }
}

/// One tracking run; the window is the trajectory's bounding box grown by `cutoff + 0.01`.
pub fn tracking_run(spec: &TrackingSpec, k: f64, points_per_wavelength: f64, frozen_amplitude: bool) -> Result<TrackingRow> {
    let frame = heisenberg_box(spec.box_half_width)?;
    let mut beam = spiral_beam(&frame, spec.eps, spec.t_final, k, spec.cutoff, false)?;
    if frozen_amplitude {
        beam = beam.with_frozen_amplitude();
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for s in &beam.trajectory.states {
        for j in 0..3 {
            lo[j] = lo[j].min(s.x[j]);
            hi[j] = hi[j].max(s.x[j]);
        }
    }
    let pad = spec.cutoff + 0.01;
    let wlo: Vec<f64> = lo.iter().map(|v| v - pad).collect();
    let whi: Vec<f64> = hi.iter().map(|v| v + pad).collect();
    let need = beam_grid_spacing(&beam, points_per_wavelength)?;
    let counts: Vec<usize> =
        (0..3).map(|j| (((whi[j] - wlo[j]) / need[j]).ceil() as usize).max(MIN_AXIS_NODES)).collect();
    let grid = Grid::window(&wlo, &whi, &counts)?;
    let op = build_sublaplacian(&frame, &grid, spec.order)?;
    let run = beam_tracking_error(&beam, &op, stable_dt(&op), spec.checkpoints)?;
    Ok(TrackingRow {
        k,
        points_per_wavelength,
        counts,
        steps: run.steps,
        max_error: run.max_error,
        initial_energy: run.initial_energy,
        frozen_amplitude,
    })
}

/// Observability sweep along Heisenberg spirals of radius `ε` around the `x₃` axis.
///
/// The beam follows the spiral through `(0, ε, 0)` with `h = (½, 0)` and `ξ₃ = 1/(2ε)`.
/// `ω` is the complement of the column `|x₁|, |x₂| ≤ half_width`. Each point runs on a
/// Dirichlet window `|x₁| ≤ half_width + margin`, a periodic `x₂` of the same extent and a
/// periodic `x₃` of length `2·cutoff + margin·ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    /// `(ε, k)` pairs.
    pub points: Vec<(f64, f64)>,
    pub t_final: f64,
    pub half_width: f64,
    pub margin: f64,
    /// Cutoff radius as a multiple of `ε`.
    pub cutoff_factor: f64,
    pub points_per_wavelength: f64,
    pub order: StencilOrder,
    /// Node counts; empty sizes the grid from the beam.
    pub grid: Vec<usize>,
    /// Worker threads; `0` uses the global pool.
    pub jobs: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            points: vec![(0.2, 40.0), (0.1, 80.0), (0.05, 160.0)],
            t_final: 1.0,
            half_width: 0.5,
            margin: 0.05,
            cutoff_factor: 1.1,
            points_per_wavelength: MIN_POINTS_PER_WAVELENGTH,
            order: StencilOrder::Eighth,
            grid: Vec::new(),
            jobs: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub report: ObservabilityReport,
    pub counts: Vec<usize>,
    pub steps: usize,
    /// `confinement_radius + cutoff` and `dist(q, ω)` for the precondition.
    pub tube_reach: f64,
    pub omega_distance: f64,
}

impl SweepSpec {
    pub fn omega(&self) -> RegionSpec {
        let a = self.half_width;
        RegionSpec::BoxComplement(vec![Aabb::new(vec![-a, -a, f64::NEG_INFINITY], vec![a, a, f64::INFINITY])])
    }

    fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidParameter("the sweep needs at least one (eps, k) point".into()));
        }
        for &(eps, k) in &self.points {
            if !(eps > 0.0 && k > 0.0) {
                return Err(Error::InvalidParameter(format!("eps and k must be positive, got ({eps}, {k})")));
            }
        }
        let positive = [self.t_final, self.half_width, self.margin, self.cutoff_factor, self.points_per_wavelength];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("sweep lengths and factors must be positive".into()));
        }
        Ok(())
    }

    fn frame(&self, eps: f64) -> Result<SubRiemannianFrame> {
        let l = self.half_width + self.margin;
        let p3 = 2.0 * self.cutoff_factor * eps + self.margin * eps;
        builtin_frame("heisenberg")?.with_domain(Domain::new(vec![
            AxisSpec::dirichlet(-l, l),
            AxisSpec::periodic(-l, l),
            AxisSpec::periodic(-0.5 * p3, 0.5 * p3),
        ]))
    }
}

/// Everything a sweep point needs before time stepping.
#[derive(Clone, Debug)]
pub struct SweepSetup {
    pub beam: GaussianBeam,
    pub op: DiscreteSubLaplacian,
    pub state: WaveState,
    pub omega: RegionSpec,
    pub steps: usize,
    pub counts: Vec<usize>,
    pub tube_reach: f64,
    pub omega_distance: f64,
}

/// Builds the beam, checks the precondition, sizes the grid and injects the initial data.
pub fn prepare_sweep_point(spec: &SweepSpec, eps: f64, k: f64) -> Result<SweepSetup> {
    spec.validate()?;
    let frame = spec.frame(eps)?;
    let cutoff = spec.cutoff_factor * eps;
    let traj = integrate_bicharacteristic(&frame, &[0.0, eps, 0.0], &[0.5, 0.0, 0.5 / eps], spec.t_final, 1e-3 * eps)?;
    let omega = spec.omega();
    let q = [0.0; 3];
    let tube_reach = confinement_radius(&traj, &q) + cutoff;
    let omega_distance = omega.distance_from(&q);
    if tube_reach >= omega_distance {
        return Err(Error::Precondition(format!(
            "eps = {eps}: confinement radius + cutoff = {tube_reach:.6} reaches omega at distance {omega_distance:.6}"
        )));
    }
    let st = spacetime_lift(&traj)?;
    let m0 = default_initial_phase(&st);
    let phase = propagate_phase(&st, &m0)?;
    let amp = transport_amplitude(&st, &phase, C64::new(1.0, 0.0))?;
    let beam = assemble_beam(st, phase, amp, k, cutoff)?;

    let need = beam_grid_spacing(&beam, spec.points_per_wavelength)?;
    let counts: Vec<usize> = if !spec.grid.is_empty() {
        spec.grid.clone()
    } else {
        (0..3)
            .map(|j| {
                let ax = frame.domain().axis(j);
                let c = (ax.length() / need[j]).ceil() as usize;
                let c = if ax.is_periodic() { c } else { c.saturating_sub(1) };
                c.max(MIN_AXIS_NODES)
            })
            .collect()
    };
    let grid = Grid::for_frame(&frame, &counts)?;
    let op = build_sublaplacian(&frame, &grid, spec.order)?;
    let steps = (spec.t_final / stable_dt(&op)).ceil() as usize;
    let dt = spec.t_final / steps as f64;
    let state = inject_beam(&beam, &op, dt)?;
    Ok(SweepSetup { beam, op, state, omega, steps, counts, tube_reach, omega_distance })
}

/// Runs one sweep point.
pub fn sweep_point(spec: &SweepSpec, eps: f64, k: f64) -> Result<SweepRow> {
    let SweepSetup { op, state, omega, steps, counts, tube_reach, omega_distance, .. } = prepare_sweep_point(spec, eps, k)?;
    let run = observability_quotient(state, &op, &omega, steps)?;
    Ok(SweepRow { report: ObservabilityReport::from_run(eps, k, &run), counts, steps, tube_reach, omega_distance })
}

/// All sweep points, ordered by `ε` descending then `k` ascending.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut points = spec.points.clone();
    points.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let work = || points.par_iter().map(|&(eps, k)| sweep_point(spec, eps, k)).collect::<Result<Vec<_>>>();
    if spec.jobs == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work)
    }
}

/// Escape times from the strip `|x₃ − π| < π/2` of the Heisenberg nilmanifold.
///
/// Start points have `x₃ = π`; covectors satisfy `g* = ¼` with `ξ₃ = s/(2ε)`, `|s| ≤ 1`.
/// The normalized samples `(x₁, x₂, φ, s)` are drawn once from `seed` and reused for every `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct EscapeSpec {
    pub eps: Vec<f64>,
    pub samples: usize,
    /// Integration horizon `horizon/ε`.
    pub horizon: f64,
    /// Step `dt_factor·ε`.
    pub dt_factor: f64,
    pub seed: u64,
    /// Allowed spread of `ε·max escape` around its mean.
    pub tolerance: f64,
}

impl Default for EscapeSpec {
    fn default() -> Self {
        EscapeSpec { eps: vec![0.2, 0.1, 0.05], samples: 32, horizon: 12.0, dt_factor: 0.02, seed: 1, tolerance: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeRow {
    pub eps: f64,
    pub id: usize,
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    pub escape_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeSummary {
    pub rows: Vec<EscapeRow>,
    /// `(ε, ε·max escape time)`; `None` when some sample never escaped.
    pub scaled_max: Vec<(f64, Option<f64>)>,
    /// Mean of the scaled maxima.
    pub kappa: Option<f64>,
    pub pass: bool,
}

impl EscapeSummary {
    /// Escape-time bound `κ(1 + tolerance)/ε` used per row.
    pub fn bound(&self, eps: f64, tolerance: f64) -> Option<f64> {
        self.kappa.map(|k| k * (1.0 + tolerance) / eps)
    }
}

pub fn escape_region() -> RegionSpec {
    RegionSpec::StripComplement { axis: 2, lo: 0.5 * PI, hi: 1.5 * PI }
}

pub fn run_escape(spec: &EscapeSpec) -> Result<EscapeSummary> {
    if spec.eps.is_empty() || spec.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter("eps list must be nonempty and positive".into()));
    }
    if spec.samples == 0 || !(spec.horizon > 0.0) || !(spec.dt_factor > 0.0) {
        return Err(Error::InvalidParameter("samples, horizon and step factor must be positive".into()));
    }
    let frame = builtin_frame("heisenberg_quotient")?;
    let side = frame.domain().axis(0).length();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draws: Vec<[f64; 4]> = (0..spec.samples)
        .map(|_| [rng.random_range(0.0..side), rng.random_range(0.0..side), rng.random_range(0.0..2.0 * PI), rng.random_range(-1.0..=1.0)])
        .collect();
    let omega = escape_region();
    let jobs: Vec<(f64, usize)> = spec.eps.iter().flat_map(|&e| (0..spec.samples).map(move |i| (e, i))).collect();
    let rows: Vec<EscapeRow> = jobs
        .par_iter()
        .map(|&(eps, id)| {
            let [x1, x2, phi, s] = draws[id];
            let xi3 = s / (2.0 * eps);
            let x0 = vec![x1, x2, PI];
            let xi0 = vec![0.5 * phi.cos(), 0.5 * phi.sin() + x1 * xi3, xi3];
            let traj = integrate_bicharacteristic(&frame, &x0, &xi0, spec.horizon / eps, spec.dt_factor * eps)?;
            Ok(EscapeRow { eps, id, x0, xi0, escape_time: escape_time(&traj, &omega) })
        })
        .collect::<Result<_>>()?;
    let scaled_max: Vec<(f64, Option<f64>)> = spec
        .eps
        .iter()
        .map(|&e| {
            let times: Option<Vec<f64>> = rows.iter().filter(|r| r.eps == e).map(|r| r.escape_time).collect();
            (e, times.map(|t| e * t.into_iter().fold(0.0, f64::max)))
        })
        .collect();
    let all: Option<Vec<f64>> = scaled_max.iter().map(|(_, v)| *v).collect();
    let kappa = all.as_ref().map(|v| v.iter().sum::<f64>() / v.len() as f64);
    let pass = match (&all, kappa) {
        (Some(v), Some(m)) => v.iter().all(|x| (x - m).abs() <= spec.tolerance * m),
        _ => false,
    };
    Ok(EscapeSummary { rows, scaled_max, kappa, pass })
}
