use super::riccati::{riccati_rhs, JointOde, JointState, PhaseMode};
use super::{CMat, PhaseMatrixPath, SpaceTimeTrajectory, C64};
use crate::error::{Error, Result};
use crate::frames::{Boundary, FrameJet, SubRiemannianFrame};

/// The approximate solution `v_k = k^{n/4−1} a e^{ikψ}` along a lifted bicharacteristic.
#[derive(Clone, Debug)]
pub struct GaussianBeam {
    pub trajectory: SpaceTimeTrajectory,
    pub phase: PhaseMatrixPath,
    pub amplitude: Vec<C64>,
    pub k: f64,
    pub cutoff: f64,
    /// Amplitude held at its initial value instead of transported.
    pub amplitude_frozen: bool,
}

impl GaussianBeam {
    /// Control beam whose amplitude skips the transport equation.
    pub fn with_frozen_amplitude(mut self) -> Self {
        let a = self.amplitude[0];
        self.amplitude.iter_mut().for_each(|v| *v = a);
        self.amplitude_frozen = true;
        self
    }

    pub fn frame(&self) -> &SubRiemannianFrame {
        self.trajectory.frame()
    }

    pub fn duration(&self) -> f64 {
        *self.trajectory.times.last().unwrap() - self.trajectory.times[0]
    }

    /// `k^{n/4−1}`.
    pub fn prefactor(&self) -> f64 {
        self.k.powf(self.trajectory.spatial_dim() as f64 / 4.0 - 1.0)
    }
}

/// Checks sample grids and keeps the cutoff tube strictly inside every Dirichlet axis.
pub fn assemble_beam(
    st: SpaceTimeTrajectory,
    phase: PhaseMatrixPath,
    amplitude: Vec<C64>,
    k: f64,
    cutoff: f64,
) -> Result<GaussianBeam> {
    if st.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if phase.len() != st.len() || amplitude.len() != st.len() {
        return Err(Error::InvalidParameter("trajectory, phase and amplitude sample counts differ".into()));
    }
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("frequency must be positive, got {k}")));
    }
    if !(cutoff > 0.0) {
        return Err(Error::InvalidParameter(format!("cutoff radius must be positive, got {cutoff}")));
    }
    if amplitude.iter().any(|a| a.norm() == 0.0 || !a.norm().is_finite()) {
        return Err(Error::ZeroAmplitude);
    }
    let dom = st.frame().domain();
    for (t, s) in st.times.iter().zip(&st.states) {
        for (j, ax) in dom.axes().iter().enumerate() {
            if ax.boundary == Boundary::Dirichlet && !(s.x[j] - cutoff > ax.lo && s.x[j] + cutoff < ax.hi) {
                return Err(Error::TubeCollision { time: *t, axis: j });
            }
        }
    }
    Ok(GaussianBeam { trajectory: st, phase, amplitude, k, cutoff, amplitude_frozen: false })
}

/// Smooth bump in `q = (dist/cutoff)²` with its first two `q`-derivatives:
/// 1 for `q ≤ 1/4`, 0 for `q ≥ 1`, septic smootherstep in between.
pub fn cutoff_profile(q: f64) -> (f64, f64, f64) {
    if q <= 0.25 {
        return (1.0, 0.0, 0.0);
    }
    if q >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let s = 4.0 / 3.0;
    let u = (q - 0.25) * s;
    let u2 = u * u;
    let u3 = u2 * u;
    let p = u2 * u2 * (35.0 - 84.0 * u + 70.0 * u2 - 20.0 * u3);
    let dp = 140.0 * u3 * (1.0 - u).powi(3);
    let ddp = 420.0 * u2 * (1.0 - u).powi(2) * (1.0 - 2.0 * u);
    (1.0 - p, -dp * s, -ddp * s * s)
}

/// Everything needed to evaluate the beam on one time slice.
///
/// `m`, `md`, `mdd` are the spatial block of `M` and its time derivatives.
#[derive(Clone, Debug)]
pub struct BeamSlice {
    pub t: f64,
    pub k: f64,
    pub cutoff: f64,
    pub prefactor: f64,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub xd: Vec<f64>,
    pub xid: Vec<f64>,
    pub xdd: Vec<f64>,
    pub xidd: Vec<f64>,
    pub m: CMat,
    pub md: CMat,
    pub mdd: CMat,
    pub a0: C64,
    pub a0d: C64,
    pub a0dd: C64,
}

struct FirstOrder {
    xd: Vec<f64>,
    xid: Vec<f64>,
    m: CMat,
    md: CMat,
    ad: C64,
}

fn first_order(ode: &mut JointOde, s: &JointState, frozen: bool) -> FirstOrder {
    let e = ode.eval(s);
    let md = if frozen { CMat::zeros(e.m.nrows(), e.m.ncols()) } else { riccati_rhs(&e.m, &e.a_mat, &e.b_mat, &e.c_mat) };
    FirstOrder { xd: e.deriv.x, xid: e.deriv.xi, m: e.m, md, ad: e.deriv.a }
}

fn spatial(m: &CMat) -> CMat {
    let d = m.nrows();
    m.view((1, 1), (d - 1, d - 1)).into_owned()
}

fn diff(p: &[f64], m: &[f64], h: f64) -> Vec<f64> {
    p.iter().zip(m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

impl BeamSlice {
    /// Propagates the stored sample below `t` by one joint RK4 sub-step; second time
    /// derivatives come from centred differences of the exact first derivatives.
    pub fn new(beam: &GaussianBeam, t: f64) -> Result<Self> {
        let st = &beam.trajectory;
        let (t0, t1) = (st.times[0], *st.times.last().unwrap());
        if !(t >= t0 - 1e-12 && t <= t1 + 1e-12) {
            return Err(Error::InvalidParameter(format!("time {t} outside [{t0}, {t1}]")));
        }
        let i = match st.times.partition_point(|&s| s <= t) {
            0 => 0,
            p => (p - 1).min(st.len() - 1),
        };
        let frozen = beam.phase.frozen;
        let mode = if frozen { PhaseMode::Frozen(beam.phase.m0.clone()) } else { PhaseMode::Riccati };
        let mut ode = JointOde::new(st.frame(), mode);
        let base = JointState {
            x: st.states[i].x.clone(),
            xi: st.states[i].xi.clone(),
            y: beam.phase.y[i].clone(),
            nm: beam.phase.n[i].clone(),
            a: beam.amplitude[i],
        };
        let h0 = t - st.times[i];
        let s = if h0 != 0.0 { ode.step(&base, h0) } else { base };
        let h = 1e-5;
        let sp = ode.step(&s, h);
        let sm = ode.step(&s, -h);
        let f0 = first_order(&mut ode, &s, frozen);
        let fp = first_order(&mut ode, &sp, frozen);
        let fm = first_order(&mut ode, &sm, frozen);
        let scale = C64::new(1.0 / (2.0 * h), 0.0);
        let zero = C64::new(0.0, 0.0);
        let (a0, a0d, a0dd) =
            if beam.amplitude_frozen { (beam.amplitude[0], zero, zero) } else { (s.a, f0.ad, (fp.ad - fm.ad) * scale) };
        Ok(BeamSlice {
            t,
            k: beam.k,
            cutoff: beam.cutoff,
            prefactor: beam.prefactor(),
            xdd: diff(&fp.xd, &fm.xd, h),
            xidd: diff(&fp.xid, &fm.xid, h),
            mdd: spatial(&((&fp.md - &fm.md) * scale)),
            a0dd,
            x: s.x,
            xi: s.xi,
            xd: f0.xd,
            xid: f0.xid,
            m: spatial(&f0.m),
            md: spatial(&f0.md),
            a0,
            a0d,
        })
    }

    /// Phase, amplitude and their derivatives at the increment `delta = x' − x'(t)`.
    pub fn local(&self, delta: &[f64]) -> LocalJet {
        let n = delta.len();
        let mv = |m: &CMat, v: &[f64]| -> Vec<C64> { (0..n).map(|r| (0..n).map(|c| m[(r, c)] * v[c]).sum()).collect() };
        let dot_r = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let dot_c = |a: &[f64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| y * *x).sum() };
        let m_d = mv(&self.m, delta);
        let md_d = mv(&self.md, delta);
        let mdd_d = mv(&self.mdd, delta);
        let m_xd = mv(&self.m, &self.xd);
        let psi = dot_r(&self.xi, delta) + 0.5 * dot_c(delta, &m_d);
        let psi_t = dot_r(&self.xid, delta) - dot_r(&self.xi, &self.xd) + 0.5 * dot_c(delta, &md_d) - dot_c(&self.xd, &m_d);
        let psi_tt = dot_r(&self.xidd, delta) - 2.0 * dot_r(&self.xid, &self.xd) - dot_r(&self.xi, &self.xdd)
            + 0.5 * dot_c(delta, &mdd_d)
            - 2.0 * dot_c(&self.xd, &md_d)
            - dot_c(&self.xdd, &m_d)
            + dot_c(&self.xd, &m_xd);
        let grad_psi: Vec<C64> = (0..n).map(|j| m_d[j] + self.xi[j]).collect();

        let r2 = self.cutoff * self.cutoff;
        let q = dot_r(delta, delta) / r2;
        let (c, c1, c2) = cutoff_profile(q);
        let q_t = -2.0 * dot_r(delta, &self.xd) / r2;
        let q_tt = (2.0 * dot_r(&self.xd, &self.xd) - 2.0 * dot_r(delta, &self.xdd)) / r2;
        let a = self.a0 * c;
        let a_t = self.a0d * c + self.a0 * (c1 * q_t);
        let a_tt = self.a0dd * c + self.a0d * (2.0 * c1 * q_t) + self.a0 * (c2 * q_t * q_t + c1 * q_tt);
        let grad_q: Vec<f64> = delta.iter().map(|d| 2.0 * d / r2).collect();
        let grad_a: Vec<C64> = grad_q.iter().map(|g| self.a0 * (c1 * g)).collect();
        let mut hess_a = CMat::zeros(n, n);
        for r in 0..n {
            for s in 0..n {
                let mut v = c2 * grad_q[r] * grad_q[s];
                if r == s {
                    v += 2.0 * c1 / r2;
                }
                hess_a[(r, s)] = self.a0 * v;
            }
        }
        LocalJet { q, psi, psi_t, psi_tt, grad_psi, a, a_t, a_tt, grad_a, hess_a }
    }

    /// Beam value, time derivative and spatial gradient at `delta`.
    pub fn value(&self, delta: &[f64]) -> BeamValue {
        let l = self.local(delta);
        let ik = C64::new(0.0, self.k);
        let e = (ik * l.psi).exp() * self.prefactor;
        BeamValue {
            v: e * l.a,
            dv_dt: e * (l.a_t + ik * l.psi_t * l.a),
            grad: (0..delta.len()).map(|j| e * (l.grad_a[j] + ik * l.grad_psi[j] * l.a)).collect(),
        }
    }

    /// Point densities at `delta`; `jet` must hold the frame at `x'(t) + delta`.
    pub fn terms(&self, jet: &FrameJet, delta: &[f64]) -> SliceTerms {
        let n = delta.len();
        let l = self.local(delta);
        let k = self.k;
        let ik = C64::new(0.0, k);
        let w = self.prefactor * self.prefactor * (-2.0 * k * l.psi.im).exp();
        let mut sum_xpsi2 = C64::new(0.0, 0.0);
        let mut sum_cross = C64::new(0.0, 0.0);
        let mut sum_lpsi = C64::new(0.0, 0.0);
        let mut sum_la = C64::new(0.0, 0.0);
        let mut grad_energy = 0.0;
        for i in 0..jet.m {
            let mut xpsi = C64::new(0.0, 0.0);
            let mut xa = C64::new(0.0, 0.0);
            let mut lpsi = C64::new(0.0, 0.0);
            let mut la = C64::new(0.0, 0.0);
            let mut div = 0.0;
            for lx in 0..n {
                let xil = jet.x(i, lx);
                xpsi += l.grad_psi[lx] * xil;
                xa += l.grad_a[lx] * xil;
                div += jet.dx(i, lx, lx);
                // drift (X_i X_il) ∂_l
                let drift: f64 = (0..n).map(|mx| jet.x(i, mx) * jet.dx(i, lx, mx)).sum();
                lpsi += l.grad_psi[lx] * drift;
                la += l.grad_a[lx] * drift;
                for mx in 0..n {
                    let cc = xil * jet.x(i, mx);
                    lpsi += self.m[(lx, mx)] * cc;
                    la += l.hess_a[(lx, mx)] * cc;
                }
            }
            lpsi += xpsi * div;
            la += xa * div;
            sum_xpsi2 += xpsi * xpsi;
            sum_cross += xpsi * xa;
            sum_lpsi += lpsi;
            sum_la += la;
            grad_energy += (xa + ik * xpsi * l.a).norm_sqr();
        }
        let bracket = -(k * k) * (l.psi_t * l.psi_t - sum_xpsi2) * l.a
            + ik * (2.0 * l.psi_t * l.a_t + l.psi_tt * l.a - 2.0 * sum_cross - sum_lpsi * l.a)
            + (l.a_tt - sum_la);
        let time_energy = (l.a_t + ik * l.psi_t * l.a).norm_sqr();
        SliceTerms {
            radius: (l.q.sqrt()) * self.cutoff,
            mass: w * l.a.norm_sqr(),
            energy: 0.25 * w * (time_energy + grad_energy),
            residual_sq: w * bracket.norm_sqr(),
        }
    }
}

/// Phase and amplitude jets at one point of a slice.
#[derive(Clone, Debug)]
pub struct LocalJet {
    /// `|δ|²/cutoff²`.
    pub q: f64,
    pub psi: C64,
    pub psi_t: C64,
    pub psi_tt: C64,
    pub grad_psi: Vec<C64>,
    pub a: C64,
    pub a_t: C64,
    pub a_tt: C64,
    pub grad_a: Vec<C64>,
    pub hess_a: CMat,
}

#[derive(Clone, Debug)]
pub struct BeamValue {
    pub v: C64,
    pub dv_dt: C64,
    pub grad: Vec<C64>,
}

/// Densities at one quadrature node.
///
/// `energy` is the energy density of `Re v_k` (half the complex-field density, up to
/// an exponentially small oscillatory term); `residual_sq = |(∂_tt − Δ) v_k|²`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SliceTerms {
    pub radius: f64,
    pub mass: f64,
    pub energy: f64,
    pub residual_sq: f64,
}

/// Field value at time `t` and spatial point `x'` (periodic axes use the nearest image).
pub fn eval_beam(beam: &GaussianBeam, t: f64, x: &[f64]) -> Result<BeamValue> {
    crate::error::check_dim(beam.trajectory.spatial_dim(), x.len())?;
    let slice = BeamSlice::new(beam, t)?;
    let delta = beam.frame().domain().displacement(&slice.x, x);
    Ok(slice.value(&delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::{default_initial_phase, propagate_phase, spacetime_lift, transport_amplitude};
    use crate::flow::{heisenberg_closed_form, integrate_bicharacteristic};
    use crate::frames::builtin_frame;

    pub(crate) fn spiral_beam(eps: f64, t: f64, k: f64, cutoff: f64) -> GaussianBeam {
        let f = builtin_frame("heisenberg").unwrap();
        let p = heisenberg_closed_form(eps, 0.0);
        let tr = integrate_bicharacteristic(&f, &p.x, &p.xi, t, 1e-3 * eps).unwrap();
        let st = spacetime_lift(&tr).unwrap();
        let m0 = default_initial_phase(&st);
        let ph = propagate_phase(&st, &m0).unwrap();
        let a = transport_amplitude(&st, &ph, C64::new(1.0, 0.0)).unwrap();
        assemble_beam(st, ph, a, k, cutoff).unwrap()
    }

    #[test]
    fn cutoff_profile_is_smooth() {
        assert_eq!(cutoff_profile(0.2), (1.0, 0.0, 0.0));
        assert_eq!(cutoff_profile(1.2), (0.0, 0.0, 0.0));
        let (c, c1, _) = cutoff_profile(0.625);
        assert!((c - 0.5).abs() < 1e-14);
        let h = 1e-6;
        for q in [0.3, 0.5, 0.8, 0.99] {
            let (_, d1, d2) = cutoff_profile(q);
            let fd1 = (cutoff_profile(q + h).0 - cutoff_profile(q - h).0) / (2.0 * h);
            let fd2 = (cutoff_profile(q + h).1 - cutoff_profile(q - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-7 && (d2 - fd2).abs() < 1e-6);
        }
        assert!(c1 < 0.0);
    }

    #[test]
    fn on_curve_value() {
        let beam = spiral_beam(0.2, 0.5, 50.0, 0.5);
        for t in [0.0, 0.137, 0.5] {
            let s = BeamSlice::new(&beam, t).unwrap();
            let v = eval_beam(&beam, t, &s.x).unwrap();
            assert!((v.v.norm() - 50f64.powf(-0.25) * s.a0.norm()).abs() < 1e-12);
            let l = s.local(&[0.0; 3]);
            assert_eq!(l.psi, C64::new(0.0, 0.0));
            // ψ_t on the curve equals τ
            assert!((l.psi_t - C64::new(-0.5, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn time_derivative_matches_finite_difference() {
        let beam = spiral_beam(0.2, 0.5, 30.0, 0.5);
        let s0 = BeamSlice::new(&beam, 0.25).unwrap();
        let x: Vec<f64> = s0.x.iter().enumerate().map(|(j, v)| v + 0.02 * (j as f64 + 1.0)).collect();
        let h = 1e-5;
        let vp = eval_beam(&beam, 0.25 + h, &x).unwrap().v;
        let vm = eval_beam(&beam, 0.25 - h, &x).unwrap().v;
        let v0 = eval_beam(&beam, 0.25, &x).unwrap();
        let fd = (vp - vm) / (2.0 * h);
        assert!((fd - v0.dv_dt).norm() < 1e-5 * v0.dv_dt.norm().max(1.0), "{fd} {}", v0.dv_dt);
        let mut xp = x.clone();
        xp[1] += h;
        let mut xm = x.clone();
        xm[1] -= h;
        let g = (eval_beam(&beam, 0.25, &xp).unwrap().v - eval_beam(&beam, 0.25, &xm).unwrap().v) / (2.0 * h);
        assert!((g - v0.grad[1]).norm() < 1e-5 * g.norm().max(1.0));
    }

    #[test]
    fn doubling_k_narrows_profile() {
        let b1 = spiral_beam(0.2, 0.2, 100.0, 0.7);
        let b2 = spiral_beam(0.2, 0.2, 200.0, 0.7);
        let s = BeamSlice::new(&b1, 0.1).unwrap();
        // e^{-1} radius along a fixed direction
        let dir = [0.6, 0.8, 0.0];
        let radius = |b: &GaussianBeam| {
            let sl = BeamSlice::new(b, 0.1).unwrap();
            let im: f64 = (0..3).map(|r| (0..3).map(|c| dir[r] * sl.m[(r, c)].im * dir[c]).sum::<f64>()).sum();
            (2.0 / (b.k * im)).sqrt()
        };
        assert!((radius(&b1) / radius(&b2) - 2f64.sqrt()).abs() < 1e-12);
        let r = radius(&b1);
        let x: Vec<f64> = (0..3).map(|j| s.x[j] + r * dir[j]).collect();
        let ratio = eval_beam(&b1, 0.1, &x).unwrap().v.norm() / eval_beam(&b1, 0.1, &s.x).unwrap().v.norm();
        assert!((ratio - (-1f64).exp()).abs() < 2e-2);
    }

    #[test]
    fn tube_collision_detected() {
        let f = builtin_frame("heisenberg").unwrap();
        let p = heisenberg_closed_form(0.2, 0.0);
        let tr = integrate_bicharacteristic(&f, &p.x, &p.xi, 0.2, 1e-3).unwrap();
        let st = spacetime_lift(&tr).unwrap();
        let m0 = default_initial_phase(&st);
        let ph = propagate_phase(&st, &m0).unwrap();
        let a = transport_amplitude(&st, &ph, C64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            assemble_beam(st, ph, a, 10.0, 1.0),
            Err(Error::TubeCollision { axis: 0, .. })
        ));
    }

    #[test]
    fn residual_density_matches_finite_differences() {
        let beam = spiral_beam(0.5, 0.4, 20.0, 0.6);
        let frame = beam.frame().clone();
        let t = 0.23;
        let s = BeamSlice::new(&beam, t).unwrap();
        let delta = [0.05, -0.04, 0.03];
        let x: Vec<f64> = (0..3).map(|j| s.x[j] + delta[j]).collect();
        let v = |tt: f64, y: &[f64]| eval_beam(&beam, tt, y).unwrap().v;
        let h = 1e-4;
        let v0 = v(t, &x);
        let v_tt = (v(t + h, &x) - 2.0 * v0 + v(t - h, &x)) / (h * h);
        let grad = s.value(&delta).grad;
        let mut hess = [[C64::new(0.0, 0.0); 3]; 3];
        for l in 0..3 {
            for m in 0..3 {
                let shifted = |dl: f64, dm: f64| {
                    let mut y = x.clone();
                    y[l] += dl;
                    y[m] += dm;
                    v(t, &y)
                };
                hess[l][m] = (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4.0 * h * h);
            }
        }
        let jet = frame.jet(&x, false);
        let mut lap = C64::new(0.0, 0.0);
        for i in 0..jet.m {
            for l in 0..3 {
                let drift: f64 = (0..3).map(|m| jet.x(i, m) * jet.dx(i, l, m)).sum();
                lap += grad[l] * drift;
                for m in 0..3 {
                    lap += hess[l][m] * (jet.x(i, l) * jet.x(i, m));
                }
            }
        }
        let pv = v_tt - lap;
        let terms = s.terms(&jet, &delta);
        let rel = (pv.norm_sqr() - terms.residual_sq).abs() / terms.residual_sq;
        assert!(rel < 1e-3, "{} vs {}", pv.norm_sqr(), terms.residual_sq);
    }
}
