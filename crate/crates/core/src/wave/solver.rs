use super::laplacian::{DiscreteSubLaplacian, Workspace};
use super::WaveState;
use crate::error::{Error, Result};
use rayon::prelude::*;

/// What the observer sees after each step.
#[derive(Debug)]
pub struct StepView<'a> {
    /// Index of `u_curr`.
    pub n: usize,
    /// Time of `u_curr`.
    pub t: f64,
    pub dt: f64,
    pub u_prev: &'a [f64],
    pub u_curr: &'a [f64],
    pub u_next: &'a [f64],
    /// `Δ̃ u_curr` (the operator actually stepped with).
    pub lu_curr: &'a [f64],
    /// `E^{n+1/2}`.
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub max_relative_drift: f64,
}

/// Source term `f(t, out)`.
pub type Forcing<'a> = dyn Fn(f64, &mut [f64]) + Sync + 'a;

/// `0.9 ×` the stability limit of the operator's scheme.
pub fn stable_dt(op: &DiscreteSubLaplacian) -> f64 {
    0.9 * op.cfl_limit()
}

/// `out = Δ̃ u`, with `Δ̃ = Δ_h + dt²/12 Δ_h²` when the order uses the modified equation.
pub(crate) fn apply_stepping(op: &DiscreteSubLaplacian, dt: f64, u: &[f64], out: &mut [f64], tmp: &mut [f64], ws: &mut Workspace) {
    op.apply_with(u, out, ws);
    if op.order().modified_equation() {
        op.apply_with(out, tmp, ws);
        let c = dt * dt / 12.0;
        out.par_iter_mut().zip(tmp.par_iter()).for_each(|(o, t)| *o += c * t);
    }
}

/// `½‖(u_b − u_a)/dt‖² − ½⟨Δ̃u_b, u_a⟩`, given `Δ̃u_b` or `Δ̃u_a` (the pairing is symmetric).
pub(crate) fn staggered_energy(op: &DiscreteSubLaplacian, dt: f64, u_a: &[f64], u_b: &[f64], l_one: &[f64], other: &[f64]) -> f64 {
    let (kin, pot) = u_a
        .par_iter()
        .zip(u_b.par_iter())
        .zip(l_one.par_iter().zip(other.par_iter()))
        .map(|((a, b), (l, o))| {
            let v = (b - a) / dt;
            (v * v, l * o)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    0.5 * op.grid().cell_volume() * (kin - pot)
}

/// Leapfrog `u^{n+1} = 2u^n − u^{n−1} + dt²(Δ̃u^n + f^n)` for `steps` steps.
///
/// `forcing(t, f)` fills `f` at the time of `u^n`; it is accepted by the plain second-order
/// scheme only. The observer runs once per step. The state is advanced in place.
pub fn leapfrog_run(
    state: &mut WaveState,
    op: &DiscreteSubLaplacian,
    steps: usize,
    forcing: Option<&Forcing<'_>>,
    mut observer: impl FnMut(&StepView),
) -> Result<RunSummary> {
    let len = op.grid().len();
    if state.u_prev.len() != len || state.u_curr.len() != len {
        return Err(Error::DimensionMismatch { expected: len, found: state.u_curr.len() });
    }
    let dt = state.dt;
    if !(dt > 0.0) {
        return Err(Error::StepSize(dt));
    }
    let bound = stable_dt(op);
    if dt > bound {
        return Err(Error::Cfl { dt, bound });
    }
    if forcing.is_some() && op.order().modified_equation() {
        return Err(Error::InvalidParameter("forcing terms need the second-order scheme".into()));
    }

    let mut ws = Workspace::new(len);
    let mut lu = vec![0.0; len];
    let mut tmp = vec![0.0; len];
    let mut next = vec![0.0; len];
    let mut f = forcing.map(|_| vec![0.0; len]);

    apply_stepping(op, dt, &state.u_curr, &mut lu, &mut tmp, &mut ws);
    let initial = staggered_energy(op, dt, &state.u_prev, &state.u_curr, &lu, &state.u_prev);
    let mut last = initial;
    let mut drift: f64 = 0.0;
    let scale = if initial.abs() > 0.0 { initial.abs() } else { 1.0 };

    for n in 0..steps {
        if n > 0 {
            apply_stepping(op, dt, &state.u_curr, &mut lu, &mut tmp, &mut ws);
        }
        let dt2 = dt * dt;
        match (&mut f, forcing) {
            (Some(fv), Some(src)) => {
                src(state.t, fv);
                next.par_iter_mut()
                    .zip(state.u_curr.par_iter().zip(state.u_prev.par_iter()))
                    .zip(lu.par_iter().zip(fv.par_iter()))
                    .for_each(|((x, (c, p)), (l, fv))| *x = 2.0 * c - p + dt2 * (l + fv));
            }
            _ => {
                next.par_iter_mut()
                    .zip(state.u_curr.par_iter().zip(state.u_prev.par_iter()))
                    .zip(lu.par_iter())
                    .for_each(|((x, (c, p)), l)| *x = 2.0 * c - p + dt2 * l);
            }
        }
        let energy = staggered_energy(op, dt, &state.u_curr, &next, &lu, &next);
        drift = drift.max((energy - initial).abs() / scale);
        last = energy;
        observer(&StepView {
            n,
            t: state.t,
            dt,
            u_prev: &state.u_prev,
            u_curr: &state.u_curr,
            u_next: &next,
            lu_curr: &lu,
            energy,
        });
        std::mem::swap(&mut state.u_prev, &mut state.u_curr);
        std::mem::swap(&mut state.u_curr, &mut next);
        state.t += dt;
    }
    Ok(RunSummary { steps, initial_energy: initial, final_energy: last, max_relative_drift: drift })
}
