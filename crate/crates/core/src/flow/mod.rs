//! Bicharacteristic (normal geodesic) integration and geometric measurements.

mod goh;
mod heisenberg;
mod region;

pub use goh::{spiral_covector, GohData};
pub use heisenberg::{heisenberg_closed_form, heisenberg_general_closed_form, HeisenbergParams};
pub use region::{confinement_radius, escape_time, Aabb, RegionSpec};

use crate::error::{check_dim, Error, Result};
use crate::frames::{FrameJet, PhasePoint, SubRiemannianFrame};

/// Time-sampled solution of `ẋ = ∇_ξ g*`, `ξ̇ = −∇_x g*`.
#[derive(Clone, Debug)]
pub struct BicharTrajectory {
    frame: SubRiemannianFrame,
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    /// `g*` at the initial point.
    pub hamiltonian_value: f64,
    /// `max_i |g*(x_i, ξ_i) − hamiltonian_value|`.
    pub drift: f64,
    pub dt: f64,
}

impl BicharTrajectory {
    pub fn frame(&self) -> &SubRiemannianFrame {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// A constant trajectory, e.g. a characteristic point where the flow is stationary.
    pub fn constant(frame: &SubRiemannianFrame, p: PhasePoint, t_final: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::StepSize(dt));
        }
        let g = frame.g_star(&p)?;
        let times = sample_times(t_final, dt);
        let states = vec![p; times.len()];
        Ok(BicharTrajectory { frame: frame.clone(), times, states, hamiltonian_value: g, drift: 0.0, dt })
    }

    /// Builds a trajectory from externally produced samples; drift is recomputed.
    pub fn from_samples(frame: &SubRiemannianFrame, times: Vec<f64>, states: Vec<PhasePoint>, dt: f64) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::EmptyTrajectory);
        }
        let g0 = frame.g_star(&states[0])?;
        let mut drift: f64 = 0.0;
        for s in &states {
            drift = drift.max((frame.g_star(s)? - g0).abs());
        }
        Ok(BicharTrajectory { frame: frame.clone(), times, states, hamiltonian_value: g0, drift, dt })
    }
}

fn sample_times(t_final: f64, dt: f64) -> Vec<f64> {
    let steps = if t_final <= 0.0 { 0 } else { ((t_final / dt) - 1e-9).ceil().max(1.0) as usize };
    let mut t: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    if steps > 0 {
        t[steps] = t_final;
    }
    t
}

/// Reusable RK4 stepper for the Hamiltonian flow of `g*`.
pub struct HamiltonStepper<'a> {
    frame: &'a SubRiemannianFrame,
    jet: FrameJet,
    n: usize,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a> HamiltonStepper<'a> {
    pub fn new(frame: &'a SubRiemannianFrame) -> Self {
        let n = frame.dim();
        HamiltonStepper {
            frame,
            jet: frame.new_jet(false),
            n,
            k: [vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]],
            tmp: vec![0.0; 2 * n],
        }
    }

    /// Writes `(ẋ, ξ̇)` for state `z = (x, ξ)` into `out`; returns `g*(z)`.
    pub fn rhs(&mut self, z: &[f64], out: &mut [f64]) -> f64 {
        let n = self.n;
        self.frame.jet_into(&z[..n], &mut self.jet);
        let (dx, dxi) = out.split_at_mut(n);
        let g = self.frame.hamilton_into(&self.jet, &z[n..], dxi, dx);
        dxi.iter_mut().for_each(|v| *v = -*v);
        g
    }

    pub fn g_star(&mut self, z: &[f64]) -> f64 {
        let n = self.n;
        self.frame.jet_into(&z[..n], &mut self.jet);
        self.frame.momenta(&self.jet, &z[n..]).iter().map(|h| h * h).sum()
    }

    /// One classical RK4 step of size `h`, in place.
    pub fn step(&mut self, z: &mut [f64], h: f64) {
        let m = 2 * self.n;
        let mut k = std::mem::take(&mut self.k);
        let mut tmp = std::mem::take(&mut self.tmp);
        self.rhs(z, &mut k[0]);
        for i in 0..m {
            tmp[i] = z[i] + 0.5 * h * k[0][i];
        }
        self.rhs(&tmp, &mut k[1]);
        for i in 0..m {
            tmp[i] = z[i] + 0.5 * h * k[1][i];
        }
        self.rhs(&tmp, &mut k[2]);
        for i in 0..m {
            tmp[i] = z[i] + h * k[2][i];
        }
        self.rhs(&tmp, &mut k[3]);
        for i in 0..m {
            z[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        self.k = k;
        self.tmp = tmp;
    }
}

/// Integrates the bicharacteristic from `(x0, xi0)` over `[0, t_final]` with fixed step `dt`.
///
/// Periodic axes wrap after every step; leaving a Dirichlet axis aborts.
pub fn integrate_bicharacteristic(
    frame: &SubRiemannianFrame,
    x0: &[f64],
    xi0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<BicharTrajectory> {
    let n = frame.dim();
    check_dim(n, x0.len())?;
    check_dim(n, xi0.len())?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::StepSize(dt));
    }
    if !(t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!("final time must be non-negative, got {t_final}")));
    }
    if let Some(axis) = frame.domain().exit_axis(x0) {
        return Err(Error::DomainExit { time: 0.0, axis });
    }
    let mut stepper = HamiltonStepper::new(frame);
    let mut z: Vec<f64> = x0.iter().chain(xi0).copied().collect();
    {
        let (x, xi) = z.split_at_mut(n);
        frame.domain().wrap(x, xi);
    }
    let g0 = stepper.g_star(&z);
    if !(g0 > 0.0) {
        return Err(Error::CharacteristicStart { gstar: g0 });
    }
    let times = sample_times(t_final, dt);
    let mut states = Vec::with_capacity(times.len());
    states.push(PhasePoint::new(z[..n].to_vec(), z[n..].to_vec()));
    let mut drift: f64 = 0.0;
    for w in times.windows(2) {
        stepper.step(&mut z, w[1] - w[0]);
        let (x, xi) = z.split_at_mut(n);
        frame.domain().wrap(x, xi);
        if let Some(axis) = frame.domain().exit_axis(x) {
            return Err(Error::DomainExit { time: w[1], axis });
        }
        drift = drift.max((stepper.g_star(&z) - g0).abs());
        states.push(PhasePoint::new(z[..n].to_vec(), z[n..].to_vec()));
    }
    Ok(BicharTrajectory { frame: frame.clone(), times, states, hamiltonian_value: g0, drift, dt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::builtin_frame;

    #[test]
    fn straight_line_when_xi3_vanishes() {
        let f = builtin_frame("heisenberg").unwrap();
        let tr = integrate_bicharacteristic(&f, &[0.0; 3], &[0.5, 0.0, 0.0], 0.5, 1e-3).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            assert!((s.x[0] - t).abs() < 1e-12);
            assert!(s.x[1].abs() < 1e-14 && s.x[2].abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_steps_and_characteristic_starts() {
        let f = builtin_frame("heisenberg").unwrap();
        assert!(matches!(integrate_bicharacteristic(&f, &[0.0; 3], &[0.5, 0.0, 0.0], 1.0, 0.0), Err(Error::StepSize(_))));
        assert!(matches!(
            integrate_bicharacteristic(&f, &[0.0; 3], &[0.0, 0.0, 1.0], 1.0, 1e-3),
            Err(Error::CharacteristicStart { .. })
        ));
    }

    #[test]
    fn dirichlet_exit_is_reported() {
        let f = builtin_frame("heisenberg").unwrap();
        let err = integrate_bicharacteristic(&f, &[0.9, 0.0, 0.0], &[0.5, 0.0, 0.0], 1.0, 1e-3).unwrap_err();
        match err {
            Error::DomainExit { time, axis } => {
                assert_eq!(axis, 0);
                assert!((time - 0.1).abs() < 2e-3);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn last_gap_may_be_short() {
        let f = builtin_frame("heisenberg").unwrap();
        let tr = integrate_bicharacteristic(&f, &[0.0; 3], &[0.5, 0.1, 0.0], 0.105, 0.01).unwrap();
        assert_eq!(tr.times.len(), 12);
        assert!((tr.times[11] - 0.105).abs() < 1e-15);
        assert!((tr.times[10] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn time_reversal() {
        let f = builtin_frame("martinet").unwrap();
        let x0 = [0.1, 0.2, -0.3];
        let xi0 = [0.3, -0.2, 0.4];
        let fwd = integrate_bicharacteristic(&f, &x0, &xi0, 1.0, 1e-3).unwrap();
        let end = fwd.states.last().unwrap();
        let back_xi: Vec<f64> = end.xi.iter().map(|v| -v).collect();
        let back = integrate_bicharacteristic(&f, &end.x, &back_xi, 1.0, 1e-3).unwrap();
        let last = back.states.last().unwrap();
        let dx = f.domain().displacement(&x0, &last.x);
        for k in 0..3 {
            assert!(dx[k].abs() < 1e-8);
            assert!((last.xi[k] + xi0[k]).abs() < 1e-8);
        }
    }
}
