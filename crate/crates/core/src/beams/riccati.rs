use super::{embed_hessian, CMat, SpaceTimeTrajectory, C64};
use crate::error::{Error, Result};
use crate::frames::{FrameJet, Identification, SubRiemannianFrame};
use nalgebra::{DMatrix, SymmetricEigen};

/// Samples of `Y(s)`, `N(s)` and `M(s) = N(s) Y(s)⁻¹` along a lifted trajectory.
///
/// A frozen path keeps `M ≡ M0` (a deliberately wrong phase used as a control).
#[derive(Clone, Debug)]
pub struct PhaseMatrixPath {
    pub times: Vec<f64>,
    pub y: Vec<CMat>,
    pub n: Vec<CMat>,
    pub m: Vec<CMat>,
    pub m0: CMat,
    pub frozen: bool,
}

impl PhaseMatrixPath {
    /// `M ≡ M0`, `Y ≡ I`, `N ≡ M0` at every sample.
    pub fn frozen(st: &SpaceTimeTrajectory, m0: CMat) -> Self {
        let d = m0.nrows();
        let len = st.len();
        PhaseMatrixPath {
            times: st.times.clone(),
            y: vec![CMat::identity(d, d); len],
            n: vec![m0.clone(); len],
            m: vec![m0.clone(); len],
            m0,
            frozen: true,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `(YᵀN − NᵀY, YᵀN̄ − NᵀȲ)`: the real and complexified symplectic pairings of the columns.
    pub fn symplectic_forms(&self, i: usize) -> (CMat, CMat) {
        let (y, n) = (&self.y[i], &self.n[i]);
        let real = y.transpose() * n - n.transpose() * y;
        let cplx = y.transpose() * n.map(|z| z.conj()) - n.transpose() * y.map(|z| z.conj());
        (real, cplx)
    }
}

/// State of the joint system: trajectory, linearised flow and amplitude.
#[derive(Clone, Debug)]
pub(crate) struct JointState {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub y: CMat,
    pub nm: CMat,
    pub a: C64,
}

impl JointState {
    fn axpy(&self, h: f64, d: &JointState) -> JointState {
        JointState {
            x: self.x.iter().zip(&d.x).map(|(a, b)| a + h * b).collect(),
            xi: self.xi.iter().zip(&d.xi).map(|(a, b)| a + h * b).collect(),
            y: &self.y + &d.y * C64::new(h, 0.0),
            nm: &self.nm + &d.nm * C64::new(h, 0.0),
            a: self.a + d.a * h,
        }
    }
}

/// Local data at a point of the joint system.
#[derive(Clone, Debug)]
pub(crate) struct JointEval {
    pub deriv: JointState,
    pub a_mat: DMatrix<f64>,
    pub b_mat: DMatrix<f64>,
    pub c_mat: DMatrix<f64>,
    pub m: CMat,
}

pub(crate) enum PhaseMode {
    Riccati,
    Frozen(CMat),
}

pub(crate) struct JointOde<'a> {
    frame: &'a SubRiemannianFrame,
    jet: FrameJet,
    mode: PhaseMode,
    gx: Vec<f64>,
    gxi: Vec<f64>,
}

fn to_c(m: &DMatrix<f64>) -> CMat {
    m.map(|v| C64::new(v, 0.0))
}

pub(crate) fn invert(y: &CMat) -> Option<CMat> {
    y.clone().try_inverse()
}

/// `−(MCM + BᵀM + MB + A)`.
pub(crate) fn riccati_rhs(m: &CMat, a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> CMat {
    let (ac, bc, cc) = (to_c(a), to_c(b), to_c(c));
    -(m * &cc * m + bc.transpose() * m + m * &bc + ac)
}

impl<'a> JointOde<'a> {
    pub fn new(frame: &'a SubRiemannianFrame, mode: PhaseMode) -> Self {
        let n = frame.dim();
        JointOde { frame, jet: frame.new_jet(true), mode, gx: vec![0.0; n], gxi: vec![0.0; n] }
    }

    pub fn eval(&mut self, s: &JointState) -> JointEval {
        let n = self.frame.dim();
        self.frame.jet_into(&s.x, &mut self.jet);
        self.frame.hamilton_into(&self.jet, &s.xi, &mut self.gx, &mut self.gxi);
        let h = self.frame.g_star_hessian(&self.jet, &s.xi);
        let (a_mat, b_mat, c_mat) = embed_hessian(n, &h);
        let (dy, dn, m) = match &self.mode {
            PhaseMode::Riccati => {
                let (ac, bc, cc) = (to_c(&a_mat), to_c(&b_mat), to_c(&c_mat));
                let dy = &bc * &s.y + &cc * &s.nm;
                let dn = -(&ac * &s.y) - bc.transpose() * &s.nm;
                let m = &s.nm * invert(&s.y).unwrap_or_else(|| CMat::from_element(n + 1, n + 1, C64::new(f64::NAN, 0.0)));
                (dy, dn, m)
            }
            PhaseMode::Frozen(m0) => (CMat::zeros(n + 1, n + 1), CMat::zeros(n + 1, n + 1), m0.clone()),
        };
        let tr: C64 = (0..=n).map(|i| (0..=n).map(|j| m[(i, j)] * c_mat[(j, i)]).sum::<C64>()).sum();
        let da = -0.5 * tr * s.a;
        let deriv = JointState { x: self.gxi.clone(), xi: self.gx.iter().map(|v| -v).collect(), y: dy, nm: dn, a: da };
        JointEval { deriv, a_mat, b_mat, c_mat, m }
    }

    pub fn step(&mut self, s: &JointState, h: f64) -> JointState {
        let k1 = self.eval(s).deriv;
        let k2 = self.eval(&s.axpy(0.5 * h, &k1)).deriv;
        let k3 = self.eval(&s.axpy(0.5 * h, &k2)).deriv;
        let k4 = self.eval(&s.axpy(h, &k3)).deriv;
        let mut out = s.axpy(h / 6.0, &k1);
        out = out.axpy(h / 3.0, &k2);
        out = out.axpy(h / 3.0, &k3);
        out.axpy(h / 6.0, &k4)
    }
}

fn check_initial_phase(st: &SpaceTimeTrajectory, m0: &CMat) -> Result<()> {
    let d = st.spatial_dim() + 1;
    if m0.nrows() != d || m0.ncols() != d {
        return Err(Error::InvalidInitialPhase(format!("expected a {d}×{d} matrix")));
    }
    let scale = m0.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let asym = (m0 - m0.transpose()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if asym > 1e-10 * scale {
        return Err(Error::InvalidInitialPhase(format!("not symmetric (‖M0 − M0ᵀ‖ = {asym:e})")));
    }
    let (xd, xid) = st.velocities(0);
    let xid_norm = xid.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        let r: C64 = (0..d).map(|j| m0[(i, j)] * xd[j]).sum::<C64>() - xid[i];
        worst = worst.max(r.norm());
    }
    if worst > 1e-10 * (1.0 + xid_norm) {
        return Err(Error::InvalidInitialPhase(format!("M0 ẋ(0) ≠ ξ̇(0) (defect {worst:e})")));
    }
    let lam = min_eig_transverse(&m0.map(|z| z.im), &xd);
    if !(lam > 1e-12) {
        return Err(Error::InvalidInitialPhase(format!("Im M0 is not positive on ẋ(0)^⊥ (min eigenvalue {lam:e})")));
    }
    Ok(())
}

/// Smallest eigenvalue of the symmetric part of `p` restricted to `v^⊥`.
pub fn min_eig_transverse(p: &DMatrix<f64>, v: &[f64]) -> f64 {
    let d = v.len();
    // orthonormal basis of v^⊥ by Gram–Schmidt on the identity
    let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let u: Vec<f64> = v.iter().map(|a| a / vn).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for e in 0..d {
        let mut w: Vec<f64> = (0..d).map(|i| if i == e { 1.0 } else { 0.0 }).collect();
        for b in std::iter::once(&u).chain(basis.iter()) {
            let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let nw = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nw > 1e-8 {
            basis.push(w.iter().map(|a| a / nw).collect());
        }
        if basis.len() == d - 1 {
            break;
        }
    }
    let q = DMatrix::from_fn(d, basis.len(), |i, j| basis[j][i]);
    let sym = (p + p.transpose()) * 0.5;
    let r = q.transpose() * sym * &q;
    SymmetricEigen::new(r).eigenvalues.min()
}

fn require_straight(st: &SpaceTimeTrajectory) -> Result<()> {
    if st.frame().domain().identification() != Identification::Straight {
        return Err(Error::InvalidParameter("beams need straight periodic gluing".into()));
    }
    Ok(())
}

fn sample_state(st: &SpaceTimeTrajectory, i: usize, y: CMat, nm: CMat, a: C64) -> JointState {
    JointState { x: st.states[i].x.clone(), xi: st.states[i].xi.clone(), y, nm, a }
}

/// Integrates `Ẏ = BY + CN`, `Ṅ = −AY − BᵀN` from `(I, M0)` jointly with the trajectory.
pub fn propagate_phase(st: &SpaceTimeTrajectory, m0: &CMat) -> Result<PhaseMatrixPath> {
    if st.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    require_straight(st)?;
    check_initial_phase(st, m0)?;
    let d = m0.nrows();
    let mut ode = JointOde::new(st.frame(), PhaseMode::Riccati);
    let mut ys = vec![CMat::identity(d, d)];
    let mut ns = vec![m0.clone()];
    let mut ms = vec![m0.clone()];
    for i in 0..st.len() - 1 {
        let s = sample_state(st, i, ys[i].clone(), ns[i].clone(), C64::new(0.0, 0.0));
        let next = ode.step(&s, st.times[i + 1] - st.times[i]);
        let det = next.y.determinant().norm();
        if !(det >= 1e-12) {
            return Err(Error::SingularY { s: st.times[i + 1], det });
        }
        let m = &next.nm * invert(&next.y).ok_or(Error::SingularY { s: st.times[i + 1], det })?;
        ys.push(next.y);
        ns.push(next.nm);
        ms.push(m);
    }
    Ok(PhaseMatrixPath { times: st.times.clone(), y: ys, n: ns, m: ms, m0: m0.clone(), frozen: false })
}

/// Integrates `a₀' = −½ tr(C M) a₀` along the samples.
pub fn transport_amplitude(st: &SpaceTimeTrajectory, phase: &PhaseMatrixPath, a_init: C64) -> Result<Vec<C64>> {
    if a_init == C64::new(0.0, 0.0) {
        return Err(Error::ZeroAmplitude);
    }
    if phase.len() != st.len() {
        return Err(Error::InvalidParameter("phase path and trajectory have different sample grids".into()));
    }
    require_straight(st)?;
    let mode = if phase.frozen { PhaseMode::Frozen(phase.m0.clone()) } else { PhaseMode::Riccati };
    let mut ode = JointOde::new(st.frame(), mode);
    let mut out = vec![a_init];
    for i in 0..st.len() - 1 {
        let s = sample_state(st, i, phase.y[i].clone(), phase.n[i].clone(), out[i]);
        let next = ode.step(&s, st.times[i + 1] - st.times[i]);
        out.push(next.a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::{default_initial_phase, spacetime_lift};
    use crate::flow::{heisenberg_closed_form, integrate_bicharacteristic};
    use crate::frames::{builtin_frame, AxisSpec, Domain, PolyVectorField};

    fn flat2() -> SubRiemannianFrame {
        SubRiemannianFrame::new(
            vec![PolyVectorField::coordinate(2, 0), PolyVectorField::coordinate(2, 1)],
            Domain::new(vec![AxisSpec::periodic(-1.0, 1.0), AxisSpec::periodic(-1.0, 1.0)]),
        )
        .unwrap()
    }

    fn spiral(eps: f64, t: f64) -> SpaceTimeTrajectory {
        let f = builtin_frame("heisenberg").unwrap();
        let p = heisenberg_closed_form(eps, 0.0);
        spacetime_lift(&integrate_bicharacteristic(&f, &p.x, &p.xi, t, 1e-4 * eps.min(1.0)).unwrap()).unwrap()
    }

    #[test]
    fn flat_wave_matches_closed_form() {
        let f = flat2();
        let tr = integrate_bicharacteristic(&f, &[0.0, 0.0], &[0.3, 0.4], 1.0, 1e-2).unwrap();
        let st = spacetime_lift(&tr).unwrap();
        let m0 = default_initial_phase(&st);
        let path = propagate_phase(&st, &m0).unwrap();
        let c = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-2.0, 2.0, 2.0])).map(|v| C64::new(v, 0.0));
        let a = transport_amplitude(&st, &path, C64::new(1.0, 0.0)).unwrap();
        let id = CMat::identity(3, 3);
        for (i, &s) in st.times.iter().enumerate() {
            let y = &id + &c * &m0 * C64::new(s, 0.0);
            let m = &m0 * y.clone().try_inverse().unwrap();
            let err = (&path.m[i] - &m).iter().fold(0.0f64, |e, z| e.max(z.norm()));
            assert!(err < 1e-8, "s={s} err={err}");
            let expect = y.determinant().powf(-0.5);
            assert!((a[i] - expect).norm() < 1e-8);
        }
    }

    #[test]
    fn invalid_m0_rejected() {
        let st = spiral(0.2, 0.1);
        let m0 = default_initial_phase(&st);
        let mut asym = m0.clone();
        asym[(1, 2)] += C64::new(0.1, 0.0);
        assert!(matches!(propagate_phase(&st, &asym), Err(Error::InvalidInitialPhase(_))));
        let real = m0.map(|z| C64::new(z.re, 0.0));
        assert!(matches!(propagate_phase(&st, &real), Err(Error::InvalidInitialPhase(_))));
        let shifted = &m0 + CMat::identity(4, 4);
        assert!(matches!(propagate_phase(&st, &shifted), Err(Error::InvalidInitialPhase(_))));
    }

    #[test]
    fn explicit_solutions_and_forms() {
        let st = spiral(0.2, 1.0);
        let m0 = default_initial_phase(&st);
        let path = propagate_phase(&st, &m0).unwrap();
        let (x0, _) = st.velocities(0);
        let (s0, c0) = path.symplectic_forms(0);
        for i in (0..st.len()).step_by(997) {
            let (xd, xid) = st.velocities(i);
            for r in 0..4 {
                let yv: C64 = (0..4).map(|j| path.y[i][(r, j)] * x0[j]).sum();
                let nv: C64 = (0..4).map(|j| path.n[i][(r, j)] * x0[j]).sum();
                assert!((yv - xd[r]).norm() < 1e-6);
                assert!((nv - xid[r]).norm() < 1e-6);
            }
            let (s, c) = path.symplectic_forms(i);
            assert!((&s - &s0).iter().all(|z| z.norm() < 1e-8));
            assert!((&c - &c0).iter().all(|z| z.norm() < 1e-8));
        }
    }

    #[test]
    fn frozen_amplitude_zero_trace_is_constant() {
        let f = flat2();
        let tr = integrate_bicharacteristic(&f, &[0.0, 0.0], &[0.5, 0.0], 0.5, 1e-2).unwrap();
        let st = spacetime_lift(&tr).unwrap();
        // tr(C M0) = 0 for this M0
        let mut m0 = CMat::zeros(3, 3);
        m0[(2, 2)] = C64::new(0.0, 0.0);
        m0[(0, 0)] = C64::new(0.0, 1.0);
        m0[(0, 1)] = C64::new(0.0, -1.0);
        m0[(1, 0)] = C64::new(0.0, -1.0);
        m0[(1, 1)] = C64::new(0.0, 1.0);
        let path = PhaseMatrixPath::frozen(&st, m0);
        let a = transport_amplitude(&st, &path, C64::new(0.7, 0.2)).unwrap();
        assert!(a.iter().all(|z| (z - C64::new(0.7, 0.2)).norm() < 1e-14));
        assert!(matches!(transport_amplitude(&st, &path, C64::new(0.0, 0.0)), Err(Error::ZeroAmplitude)));
    }
}
