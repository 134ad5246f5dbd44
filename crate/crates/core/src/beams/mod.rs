//! Gaussian beams along bicharacteristics: space-time Hessians, the linearised flow `(Y, N)`,
//! the complex phase matrix `M = N Y⁻¹`, amplitude transport and measurements.

mod beam;
mod quadrature;
mod riccati;

pub use beam::{assemble_beam, cutoff_profile, eval_beam, BeamSlice, BeamValue, GaussianBeam, SliceTerms};
pub use quadrature::{beam_energy, beam_residual, gaussian_mass_estimate, slice_mass, EnergyRegion, QuadratureSpec};
pub use riccati::{min_eig_transverse, propagate_phase, transport_amplitude, PhaseMatrixPath};

use crate::error::{Error, Result};
use crate::flow::BicharTrajectory;
use crate::frames::{PhasePoint, SubRiemannianFrame};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Bicharacteristic lifted to space-time with `x_0 = t` and `ξ_0 = τ = −1/2`.
#[derive(Clone, Debug)]
pub struct SpaceTimeTrajectory {
    frame: SubRiemannianFrame,
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub tau: f64,
    pub dt: f64,
}

impl SpaceTimeTrajectory {
    pub fn frame(&self) -> &SubRiemannianFrame {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn spatial_dim(&self) -> usize {
        self.frame.dim()
    }

    /// Full space-time point `(x_0, x', ξ_0, ξ')` of sample `i`.
    pub fn lifted(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        let s = &self.states[i];
        let mut x = vec![self.times[i]];
        x.extend_from_slice(&s.x);
        let mut xi = vec![self.tau];
        xi.extend_from_slice(&s.xi);
        (x, xi)
    }

    /// `p₂ = −ξ_0² + g*` at sample `i`.
    pub fn p2(&self, i: usize) -> f64 {
        -self.tau * self.tau + self.frame.g_star(&self.states[i]).unwrap_or(f64::NAN)
    }

    /// Space-time velocity and covector velocity `(ẋ, ξ̇)` at sample `i`.
    pub fn velocities(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        let (gx, gxi) = self.frame.g_star_gradients(&self.states[i]).expect("dimensions checked at lift");
        let mut xd = vec![-2.0 * self.tau];
        xd.extend(gxi);
        let mut xid = vec![0.0];
        xid.extend(gx.iter().map(|v| -v));
        (xd, xid)
    }
}

/// Adds `x_0 = t`, `ξ_0 = −1/2`; requires `g* = 1/4` along the samples.
pub fn spacetime_lift(traj: &BicharTrajectory) -> Result<SpaceTimeTrajectory> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    for s in &traj.states {
        let g = traj.frame().g_star(s)?;
        if (g - 0.25).abs() > 1e-6 {
            return Err(Error::NotNormalized { value: g });
        }
    }
    Ok(SpaceTimeTrajectory {
        frame: traj.frame().clone(),
        times: traj.times.clone(),
        states: traj.states.clone(),
        tau: -0.5,
        dt: traj.dt,
    })
}

/// Exact second derivatives `(A, B, C)` of `p₂(x, ξ) = −ξ_0² + g*(x', ξ')` at a space-time point.
///
/// `A = ∂²p₂/∂x∂x`, `B_ij = ∂²p₂/∂ξ_i∂x_j`, `C = ∂²p₂/∂ξ∂ξ`; index 0 is time.
pub fn hessian_p2(frame: &SubRiemannianFrame, x: &[f64], xi: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let n = frame.dim();
    crate::error::check_dim(n + 1, x.len())?;
    crate::error::check_dim(n + 1, xi.len())?;
    let jet = frame.jet(&x[1..], true);
    let h = frame.g_star_hessian(&jet, &xi[1..]);
    Ok(embed_hessian(n, &h))
}

pub(crate) fn embed_hessian(n: usize, h: &crate::frames::GStarHessian) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let d = n + 1;
    let mut a = DMatrix::zeros(d, d);
    let mut b = DMatrix::zeros(d, d);
    let mut c = DMatrix::zeros(d, d);
    c[(0, 0)] = -2.0;
    for i in 0..n {
        for j in 0..n {
            a[(i + 1, j + 1)] = h.xx[i * n + j];
            b[(i + 1, j + 1)] = h.xi_x[i * n + j];
            c[(i + 1, j + 1)] = h.xi_xi[i * n + j];
        }
    }
    (a, b, c)
}

/// Initial phase matrix with `Re M0 ẋ = ξ̇` and `Im M0` the projection onto `ẋ^⊥`.
pub fn default_initial_phase(st: &SpaceTimeTrajectory) -> CMat {
    let d = st.spatial_dim() + 1;
    scaled_initial_phase(st, &vec![1.0; d], 1.0)
}

/// Default construction carried out in rescaled coordinates `y = S⁻¹x`, `s' = s/λ`:
/// `M0 = λ S⁻¹ M0ʸ S⁻¹` where `M0ʸ` is the default matrix for the rescaled velocities.
///
/// With `S = diag(ε, ε^{w_1}, …)` and `λ = ε` this gives beams whose profile is invariant under
/// the anisotropic dilation of the frame.
pub fn scaled_initial_phase(st: &SpaceTimeTrajectory, scales: &[f64], lambda: f64) -> CMat {
    let d = st.spatial_dim() + 1;
    assert_eq!(scales.len(), d);
    let (xd, xid) = st.velocities(0);
    let u: Vec<f64> = (0..d).map(|i| lambda * xd[i] / scales[i]).collect();
    let v: Vec<f64> = (0..d).map(|i| scales[i] * xid[i]).collect();
    let uu: f64 = u.iter().map(|a| a * a).sum();
    let uv: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    let mut m = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let re = (v[i] * u[j] + u[i] * v[j]) / uu - uv * u[i] * u[j] / (uu * uu);
            let im = if i == j { 1.0 } else { 0.0 } - u[i] * u[j] / uu;
            m[(i, j)] = C64::new(re, im) * (lambda / (scales[i] * scales[j]));
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{heisenberg_closed_form, integrate_bicharacteristic};
    use crate::frames::{builtin_frame, AxisSpec, Domain, PolyVectorField};

    #[test]
    fn lift_examples() {
        let f = builtin_frame("heisenberg").unwrap();
        let eps = 0.2;
        let p = heisenberg_closed_form(eps, 0.0);
        let tr = integrate_bicharacteristic(&f, &p.x, &p.xi, 0.5, 1e-3).unwrap();
        let st = spacetime_lift(&tr).unwrap();
        for i in [0, 100, 500] {
            let (xd, _) = st.velocities(i);
            assert_eq!(xd[0], 1.0);
            assert!(st.p2(i).abs() < 1e-10);
        }
        let bad = integrate_bicharacteristic(&f, &[0.0; 3], &[1.0, 0.0, 0.0], 0.1, 1e-3).unwrap();
        assert!(matches!(spacetime_lift(&bad), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn flat_hessian() {
        let flat = SubRiemannianFrame::new(
            vec![PolyVectorField::coordinate(1, 0)],
            Domain::new(vec![AxisSpec::periodic(-1.0, 1.0)]),
        )
        .unwrap();
        let (a, b, c) = hessian_p2(&flat, &[0.0, 0.3], &[-0.5, 0.5]).unwrap();
        assert_eq!(a, DMatrix::zeros(2, 2));
        assert_eq!(b, DMatrix::zeros(2, 2));
        assert_eq!(c, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-2.0, 2.0])));
    }

    #[test]
    fn heisenberg_hessian_entry_and_symmetry() {
        let f = builtin_frame("heisenberg").unwrap();
        let xi3 = 2.5;
        let (a, _b, c) = hessian_p2(&f, &[0.0; 4], &[-0.5, 0.5, 0.0, xi3]).unwrap();
        assert!((a[(1, 1)] - 2.0 * xi3 * xi3).abs() < 1e-14);
        assert_eq!(c[(0, 0)], -2.0);
        let (a, _, c) = hessian_p2(&f, &[0.3, 0.4, -0.2, 0.7], &[-0.5, 0.1, 0.9, -1.3]).unwrap();
        assert!((&a - a.transpose()).amax() < 1e-15);
        assert!((&c - c.transpose()).amax() < 1e-15);
    }

    #[test]
    fn default_phase_constraints() {
        let f = builtin_frame("heisenberg").unwrap();
        let p = heisenberg_closed_form(0.2, 0.0);
        let tr = integrate_bicharacteristic(&f, &p.x, &p.xi, 0.1, 1e-3).unwrap();
        let st = spacetime_lift(&tr).unwrap();
        for m0 in [default_initial_phase(&st), scaled_initial_phase(&st, &[0.2, 0.2, 0.2, 0.04], 0.2)] {
            let (xd, xid) = st.velocities(0);
            for i in 0..4 {
                let r: C64 = (0..4).map(|j| m0[(i, j)] * xd[j]).sum();
                assert!((r - xid[i]).norm() < 1e-12);
            }
            assert!((&m0 - m0.transpose()).iter().all(|z| z.norm() < 1e-14));
        }
    }
}
