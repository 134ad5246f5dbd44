//! Polynomial vector fields, sub-Riemannian frames and the Hamiltonian `g*`.

mod parse;
mod poly;

pub use parse::{format_frame, parse_frame, parse_poly};
pub use poly::{Exponent, Poly, PolyBank};

use crate::error::{check_dim, Error, Result};
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::sync::Arc;

/// A vector field `Σ_j X_j(x) ∂_j` with polynomial components.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVectorField {
    comps: Vec<Poly>,
}

impl PolyVectorField {
    pub fn new(comps: Vec<Poly>) -> Self {
        let n = comps.len();
        assert!(n > 0, "vector field needs at least one component");
        assert!(comps.iter().all(|c| c.dim() == n), "component polynomials must live in R^{n}");
        PolyVectorField { comps }
    }

    pub fn zero(dim: usize) -> Self {
        PolyVectorField { comps: vec![Poly::zero(dim); dim] }
    }

    /// The coordinate field `∂_j` (0-based).
    pub fn coordinate(dim: usize, j: usize) -> Self {
        let mut f = PolyVectorField::zero(dim);
        f.comps[j] = Poly::constant(dim, 1.0);
        f
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[Poly] {
        &self.comps
    }

    pub fn component(&self, j: usize) -> &Poly {
        &self.comps[j]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Poly::is_zero)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    /// The derivation `f -> Σ_j X_j ∂_j f`.
    pub fn apply(&self, f: &Poly) -> Poly {
        let mut out = Poly::zero(self.dim());
        for (j, c) in self.comps.iter().enumerate() {
            if !c.is_zero() {
                out += &(c * &f.derivative(j));
            }
        }
        out
    }

    /// Lie bracket `[self, other]`.
    pub fn bracket(&self, other: &PolyVectorField) -> PolyVectorField {
        assert_eq!(self.dim(), other.dim());
        PolyVectorField {
            comps: (0..self.dim()).map(|j| self.apply(&other.comps[j]) - other.apply(&self.comps[j])).collect(),
        }
    }

    pub fn divergence(&self) -> Poly {
        let mut d = Poly::zero(self.dim());
        for (j, c) in self.comps.iter().enumerate() {
            d += &c.derivative(j);
        }
        d
    }

    pub fn scale(&self, c: f64) -> PolyVectorField {
        PolyVectorField { comps: self.comps.iter().map(|p| p.scale(c)).collect() }
    }

    pub fn add(&self, other: &PolyVectorField) -> PolyVectorField {
        PolyVectorField { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &PolyVectorField) -> PolyVectorField {
        PolyVectorField { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect() }
    }

    /// Pull-back by the translation `x -> x + shift` (components are re-expanded about the new origin).
    pub fn translate(&self, shift: &[f64]) -> PolyVectorField {
        PolyVectorField { comps: self.comps.iter().map(|p| p.translate(shift)).collect() }
    }

    /// Largest absolute coefficient over all components.
    pub fn max_abs_coeff(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs_coeff()))
    }
}

/// Evaluates a field at `x`.
pub fn evaluate_vf(vf: &PolyVectorField, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(vf.dim(), x.len())?;
    Ok(vf.eval(x))
}

/// Exact Lie bracket `[a, b] = (a·∇)b − (b·∇)a`.
pub fn lie_bracket(a: &PolyVectorField, b: &PolyVectorField) -> Result<PolyVectorField> {
    check_dim(a.dim(), b.dim())?;
    Ok(a.bracket(b))
}

/// A point `(x, ξ)` of the cotangent bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Self {
        PhasePoint { x, xi }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// `h_X(x, ξ) = ξ · X(x)`.
pub fn momentum_map(vf: &PolyVectorField, p: &PhasePoint) -> Result<f64> {
    check_dim(vf.dim(), p.x.len())?;
    check_dim(vf.dim(), p.xi.len())?;
    Ok(vf.eval(&p.x).iter().zip(&p.xi).map(|(a, b)| a * b).sum())
}

/// Gradients `(∇_x h_X, ∇_ξ h_X)`.
pub fn momentum_gradients(vf: &PolyVectorField, p: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim(vf.dim(), p.x.len())?;
    check_dim(vf.dim(), p.xi.len())?;
    let n = vf.dim();
    let gx = (0..n)
        .map(|k| vf.components().iter().zip(&p.xi).map(|(c, xi)| xi * c.derivative(k).eval(&p.x)).sum())
        .collect();
    Ok((gx, vf.eval(&p.x)))
}

/// Poisson bracket `{f, g} = ∂_ξ f · ∂_x g − ∂_x f · ∂_ξ g` from precomputed gradients.
pub fn poisson_bracket(f: &(Vec<f64>, Vec<f64>), g: &(Vec<f64>, Vec<f64>)) -> f64 {
    let a: f64 = f.1.iter().zip(&g.0).map(|(u, v)| u * v).sum();
    let b: f64 = f.0.iter().zip(&g.1).map(|(u, v)| u * v).sum();
    a - b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

/// One axis of the domain box. Periodic axes identify `lo` with `hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub boundary: Boundary,
}

impl AxisSpec {
    pub fn dirichlet(lo: f64, hi: f64) -> Self {
        AxisSpec { lo, hi, boundary: Boundary::Dirichlet }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        AxisSpec { lo, hi, boundary: Boundary::Periodic }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }
}

/// How periodic faces are glued.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Identification {
    /// Each periodic axis wraps independently.
    Straight,
    /// Left translations by the lattice `aZ × bZ × cZ` of the Heisenberg group:
    /// crossing the first axis by `a` maps `(x, ξ)` to `(x1+a, x2, x3−a·x2; ξ1, ξ2+a·ξ3, ξ3)`.
    HeisenbergLattice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    axes: Vec<AxisSpec>,
    identification: Identification,
}

impl Domain {
    pub fn new(axes: Vec<AxisSpec>) -> Self {
        Domain { axes, identification: Identification::Straight }
    }

    pub fn with_identification(mut self, id: Identification) -> Self {
        self.identification = id;
        self
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }

    pub fn axis(&self, j: usize) -> &AxisSpec {
        &self.axes[j]
    }

    pub fn identification(&self) -> Identification {
        self.identification
    }

    /// Maps a phase point back into the fundamental box along periodic axes.
    pub fn wrap(&self, x: &mut [f64], xi: &mut [f64]) {
        match self.identification {
            Identification::Straight => {
                for (j, a) in self.axes.iter().enumerate() {
                    if a.is_periodic() {
                        x[j] = wrap_scalar(x[j], a.lo, a.length());
                    }
                }
            }
            Identification::HeisenbergLattice => {
                let a0 = &self.axes[0];
                let shift = -a0.length() * ((x[0] - a0.lo) / a0.length()).floor();
                if shift != 0.0 {
                    x[0] += shift;
                    x[2] -= shift * x[1];
                    xi[1] += shift * xi[2];
                }
                for j in 1..3 {
                    let a = &self.axes[j];
                    x[j] = wrap_scalar(x[j], a.lo, a.length());
                }
            }
        }
    }

    /// First Dirichlet axis along which `x` is outside the open interval.
    pub fn exit_axis(&self, x: &[f64]) -> Option<usize> {
        self.axes
            .iter()
            .enumerate()
            .find(|(j, a)| a.boundary == Boundary::Dirichlet && !(x[*j] > a.lo && x[*j] < a.hi))
            .map(|(j, _)| j)
    }

    /// `to − from`, using the shortest representative along periodic axes.
    pub fn displacement(&self, from: &[f64], to: &[f64]) -> Vec<f64> {
        self.axes
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let d = to[j] - from[j];
                if a.is_periodic() {
                    let l = a.length();
                    d - l * (d / l).round()
                } else {
                    d
                }
            })
            .collect()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.displacement(a, b).iter().map(|d| d * d).sum::<f64>().sqrt()
    }
}

fn wrap_scalar(v: f64, lo: f64, len: f64) -> f64 {
    let mut w = v - len * ((v - lo) / len).floor();
    if w >= lo + len {
        w -= len;
    }
    w
}

/// Field values and derivatives at one point.
///
/// Layout: `val[i*n + j] = X_ij`, `d1[(i*n + j)*n + k] = ∂_k X_ij`,
/// `d2[((i*n + j)*n + k)*n + l] = ∂_k ∂_l X_ij`.
#[derive(Clone, Debug, Default)]
pub struct FrameJet {
    pub m: usize,
    pub n: usize,
    pub val: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl FrameJet {
    #[inline]
    pub fn x(&self, i: usize, j: usize) -> f64 {
        self.val[i * self.n + j]
    }
    #[inline]
    pub fn dx(&self, i: usize, j: usize, k: usize) -> f64 {
        self.d1[(i * self.n + j) * self.n + k]
    }
    #[inline]
    pub fn ddx(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.d2[((i * self.n + j) * self.n + k) * self.n + l]
    }
}

#[derive(Debug)]
struct JetBanks {
    first: PolyBank,
    second: PolyBank,
}

/// Second derivatives of `g*` at a phase point (row-major `n × n`).
#[derive(Clone, Debug)]
pub struct GStarHessian {
    pub xx: Vec<f64>,
    /// `xi_x[a*n + k] = ∂²g*/∂ξ_a∂x_k`.
    pub xi_x: Vec<f64>,
    pub xi_xi: Vec<f64>,
}

/// The frame `X_1, …, X_m` on a coordinate box.
#[derive(Clone, Debug)]
pub struct SubRiemannianFrame {
    fields: Vec<PolyVectorField>,
    domain: Domain,
    banks: Arc<JetBanks>,
}

impl PartialEq for SubRiemannianFrame {
    fn eq(&self, other: &Self) -> bool {
        self.fields == other.fields && self.domain == other.domain
    }
}

impl SubRiemannianFrame {
    pub fn new(fields: Vec<PolyVectorField>, domain: Domain) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidParameter("a frame needs at least one field".into()));
        }
        let n = fields[0].dim();
        for f in &fields {
            check_dim(n, f.dim())?;
        }
        check_dim(n, domain.dim())?;
        if domain.identification == Identification::HeisenbergLattice
            && (n != 3 || !domain.axes.iter().all(AxisSpec::is_periodic))
        {
            return Err(Error::InvalidParameter("Heisenberg lattice gluing needs three periodic axes".into()));
        }
        let mut order1: Vec<Poly> = Vec::new();
        let mut order2: Vec<Poly> = Vec::new();
        for f in &fields {
            for c in f.components() {
                order1.push(c.clone());
            }
        }
        for f in &fields {
            for c in f.components() {
                for k in 0..n {
                    order1.push(c.derivative(k));
                }
            }
        }
        for f in &fields {
            for c in f.components() {
                for k in 0..n {
                    let dk = c.derivative(k);
                    for l in 0..n {
                        order2.push(dk.derivative(l));
                    }
                }
            }
        }
        let r1: Vec<&Poly> = order1.iter().collect();
        let r2: Vec<&Poly> = order2.iter().collect();
        let banks = JetBanks { first: PolyBank::new(n, &r1), second: PolyBank::new(n, &r2) };
        Ok(SubRiemannianFrame { fields, domain, banks: Arc::new(banks) })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn rank(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[PolyVectorField] {
        &self.fields
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        SubRiemannianFrame::new(self.fields.clone(), domain)
    }

    /// True when every field is divergence free for Lebesgue measure, so `Δ = Σ X_i²`.
    pub fn is_divergence_free(&self) -> bool {
        self.fields.iter().all(|f| f.divergence().is_zero())
    }

    pub fn new_jet(&self, second: bool) -> FrameJet {
        let (m, n) = (self.rank(), self.dim());
        FrameJet {
            m,
            n,
            val: vec![0.0; m * n],
            d1: vec![0.0; m * n * n],
            d2: if second { vec![0.0; m * n * n * n] } else { Vec::new() },
        }
    }

    /// Fills `jet` at `x`; second derivatives only if `jet.d2` is allocated.
    pub fn jet_into(&self, x: &[f64], jet: &mut FrameJet) {
        let mn = jet.m * jet.n;
        let mut buf = [0.0f64; 256];
        let total = self.banks.first.len();
        if total <= buf.len() {
            self.banks.first.eval_into(x, &mut buf[..total]);
            jet.val.copy_from_slice(&buf[..mn]);
            jet.d1.copy_from_slice(&buf[mn..total]);
        } else {
            let mut v = vec![0.0; total];
            self.banks.first.eval_into(x, &mut v);
            jet.val.copy_from_slice(&v[..mn]);
            jet.d1.copy_from_slice(&v[mn..]);
        }
        if !jet.d2.is_empty() {
            self.banks.second.eval_into(x, &mut jet.d2);
        }
    }

    pub fn jet(&self, x: &[f64], second: bool) -> FrameJet {
        let mut j = self.new_jet(second);
        self.jet_into(x, &mut j);
        j
    }

    fn check_point(&self, p: &PhasePoint) -> Result<()> {
        check_dim(self.dim(), p.x.len())?;
        check_dim(self.dim(), p.xi.len())
    }

    /// Momenta `h_i = ξ · X_i(x)`.
    pub fn momenta(&self, jet: &FrameJet, xi: &[f64]) -> Vec<f64> {
        (0..jet.m).map(|i| (0..jet.n).map(|j| xi[j] * jet.x(i, j)).sum()).collect()
    }

    /// `g* = Σ h_i²`.
    pub fn g_star(&self, p: &PhasePoint) -> Result<f64> {
        self.check_point(p)?;
        let jet = self.jet(&p.x, false);
        Ok(self.momenta(&jet, &p.xi).iter().map(|h| h * h).sum())
    }

    /// `(∇_x g*, ∇_ξ g*)` written into the output slices, returns `g*`.
    pub fn hamilton_into(&self, jet: &FrameJet, xi: &[f64], gx: &mut [f64], gxi: &mut [f64]) -> f64 {
        let (m, n) = (jet.m, jet.n);
        gx.iter_mut().for_each(|v| *v = 0.0);
        gxi.iter_mut().for_each(|v| *v = 0.0);
        let mut g = 0.0;
        for i in 0..m {
            let mut h = 0.0;
            for j in 0..n {
                h += xi[j] * jet.x(i, j);
            }
            g += h * h;
            for a in 0..n {
                gxi[a] += 2.0 * h * jet.x(i, a);
            }
            for k in 0..n {
                let mut dh = 0.0;
                for j in 0..n {
                    dh += xi[j] * jet.dx(i, j, k);
                }
                gx[k] += 2.0 * h * dh;
            }
        }
        g
    }

    pub fn g_star_gradients(&self, p: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_point(p)?;
        let n = self.dim();
        let jet = self.jet(&p.x, false);
        let (mut gx, mut gxi) = (vec![0.0; n], vec![0.0; n]);
        self.hamilton_into(&jet, &p.xi, &mut gx, &mut gxi);
        Ok((gx, gxi))
    }

    /// Exact Hessian of `g*` from a jet with second derivatives.
    pub fn g_star_hessian(&self, jet: &FrameJet, xi: &[f64]) -> GStarHessian {
        let (m, n) = (jet.m, jet.n);
        assert!(!jet.d2.is_empty(), "Hessian needs a second-order jet");
        let mut xx = vec![0.0; n * n];
        let mut xi_x = vec![0.0; n * n];
        let mut xi_xi = vec![0.0; n * n];
        let mut dh = vec![0.0; n];
        for i in 0..m {
            let h: f64 = (0..n).map(|j| xi[j] * jet.x(i, j)).sum();
            for k in 0..n {
                dh[k] = (0..n).map(|j| xi[j] * jet.dx(i, j, k)).sum();
            }
            for a in 0..n {
                for b in 0..n {
                    xi_xi[a * n + b] += 2.0 * jet.x(i, a) * jet.x(i, b);
                }
                for k in 0..n {
                    xi_x[a * n + k] += 2.0 * (jet.dx(i, a, k) * h + jet.x(i, a) * dh[k]);
                }
            }
            for k in 0..n {
                for l in 0..n {
                    let ddh: f64 = (0..n).map(|j| xi[j] * jet.ddx(i, j, k, l)).sum();
                    xx[k * n + l] += 2.0 * (dh[k] * dh[l] + h * ddh);
                }
            }
        }
        GStarHessian { xx, xi_x, xi_xi }
    }

    /// Right-normed brackets `[X_{i1}, [X_{i2}, … X_{ik}]]` grouped by length `1..=depth`.
    pub fn bracket_words(&self, depth: usize) -> Vec<Vec<PolyVectorField>> {
        let mut levels: Vec<Vec<PolyVectorField>> = Vec::new();
        if depth == 0 {
            return levels;
        }
        levels.push(self.fields.clone());
        for _ in 1..depth {
            let prev = levels.last().unwrap();
            let mut next = Vec::new();
            for x in &self.fields {
                for w in prev {
                    next.push(x.bracket(w));
                }
            }
            levels.push(next);
        }
        levels
    }
}

/// Numerical rank with threshold `1e-10 × σ_max`.
pub(crate) fn numerical_rank(rows: &[Vec<f64>], n: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mat = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let sv = mat.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-10 * smax).count()
}

/// Growth vector `dim D^1_q, …, dim D^depth_q` and whether it reaches `n`.
pub fn check_hormander(frame: &SubRiemannianFrame, q: &[f64], max_depth: usize) -> Result<(bool, Vec<usize>)> {
    check_dim(frame.dim(), q.len())?;
    if max_depth == 0 {
        return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
    }
    let n = frame.dim();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut growth = Vec::with_capacity(max_depth);
    for level in frame.bracket_words(max_depth) {
        rows.extend(level.iter().map(|f| f.eval(q)));
        growth.push(numerical_rank(&rows, n));
    }
    Ok((growth.last().copied() == Some(n), growth))
}

/// Goh matrix `G_ij = 2 h_{[X_j, X_i]}(p)`.
pub fn goh_matrix(frame: &SubRiemannianFrame, p: &PhasePoint) -> Result<DMatrix<f64>> {
    frame.check_point(p)?;
    let m = frame.rank();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let b = frame.fields[j].bracket(&frame.fields[i]);
            let v = 2.0 * momentum_map(&b, p)?;
            g[(i, j)] = v;
            g[(j, i)] = -v;
        }
    }
    Ok(g)
}

/// Names accepted by [`builtin_frame`].
pub const BUILTIN_FRAMES: [&str; 4] = ["heisenberg", "heisenberg_quotient", "baouendi_grushin", "martinet"];

/// The standard examples. Circles `T` are represented as `[-1, 1)` with period 2.
pub fn builtin_frame(name: &str) -> Result<SubRiemannianFrame> {
    let v = |n: usize, k: usize| Poly::var(n, k);
    let one = |n: usize| Poly::constant(n, 1.0);
    match name {
        "heisenberg" | "heisenberg_quotient" => {
            let x1 = PolyVectorField::coordinate(3, 0);
            let x2 = PolyVectorField::new(vec![Poly::zero(3), one(3), -v(3, 0)]);
            let domain = if name == "heisenberg" {
                Domain::new(vec![AxisSpec::dirichlet(-1.0, 1.0), AxisSpec::periodic(-1.0, 1.0), AxisSpec::periodic(-1.0, 1.0)])
            } else {
                let a = (2.0 * PI).sqrt();
                Domain::new(vec![AxisSpec::periodic(0.0, a), AxisSpec::periodic(0.0, a), AxisSpec::periodic(0.0, 2.0 * PI)])
                    .with_identification(Identification::HeisenbergLattice)
            };
            SubRiemannianFrame::new(vec![x1, x2], domain)
        }
        "baouendi_grushin" => {
            let x1 = PolyVectorField::coordinate(2, 0);
            let x2 = PolyVectorField::new(vec![Poly::zero(2), v(2, 0)]);
            SubRiemannianFrame::new(
                vec![x1, x2],
                Domain::new(vec![AxisSpec::dirichlet(-1.0, 1.0), AxisSpec::periodic(-1.0, 1.0)]),
            )
        }
        "martinet" => {
            let x1 = PolyVectorField::coordinate(3, 0);
            let x2 = PolyVectorField::new(vec![Poly::zero(3), one(3), v(3, 0).pow(2)]);
            SubRiemannianFrame::new(
                vec![x1, x2],
                Domain::new(vec![AxisSpec::dirichlet(-1.0, 1.0), AxisSpec::periodic(-1.0, 1.0), AxisSpec::periodic(-1.0, 1.0)]),
            )
        }
        other => Err(Error::UnknownFrame(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heis() -> SubRiemannianFrame {
        builtin_frame("heisenberg").unwrap()
    }

    #[test]
    fn heisenberg_x2_evaluation() {
        let f = heis();
        assert_eq!(evaluate_vf(&f.fields()[1], &[2.0, 0.0, 0.0]).unwrap(), vec![0.0, 1.0, -2.0]);
    }

    #[test]
    fn martinet_x2_evaluation() {
        let f = builtin_frame("martinet").unwrap();
        assert_eq!(evaluate_vf(&f.fields()[1], &[3.0, 0.0, 0.0]).unwrap(), vec![0.0, 1.0, 9.0]);
    }

    #[test]
    fn zero_field_evaluates_to_zero() {
        let z = PolyVectorField::zero(3);
        assert_eq!(evaluate_vf(&z, &[0.3, -2.0, 5.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn evaluation_dimension_mismatch() {
        let f = heis();
        assert!(matches!(evaluate_vf(&f.fields()[0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn heisenberg_bracket_is_minus_d3() {
        let f = heis();
        let b = lie_bracket(&f.fields()[0], &f.fields()[1]).unwrap();
        assert_eq!(b, PolyVectorField::coordinate(3, 2).scale(-1.0));
    }

    #[test]
    fn martinet_bracket() {
        let f = builtin_frame("martinet").unwrap();
        let b = lie_bracket(&f.fields()[0], &f.fields()[1]).unwrap();
        let expect = PolyVectorField::new(vec![Poly::zero(3), Poly::zero(3), Poly::var(3, 0).scale(2.0)]);
        assert_eq!(b, expect);
    }

    #[test]
    fn self_bracket_vanishes() {
        let f = builtin_frame("martinet").unwrap();
        assert!(f.fields()[1].bracket(&f.fields()[1]).is_zero());
    }

    #[test]
    fn momentum_map_examples() {
        let f = heis();
        let p = PhasePoint::new(vec![0.7, 0.1, -0.2], vec![1.5, 2.0, 3.0]);
        assert!((momentum_map(&f.fields()[1], &p).unwrap() - (2.0 - 0.7 * 3.0)).abs() < 1e-15);
        let z = PhasePoint::new(vec![0.7, 0.1, -0.2], vec![0.0; 3]);
        assert_eq!(momentum_map(&f.fields()[1], &z).unwrap(), 0.0);
        let p5 = PhasePoint::new(vec![0.0; 3], vec![5.0, 0.0, 0.0]);
        assert_eq!(momentum_map(&f.fields()[0], &p5).unwrap(), 5.0);
    }

    #[test]
    fn g_star_heisenberg_origin() {
        let p = PhasePoint::new(vec![0.0; 3], vec![1.0, 2.0, 3.0]);
        assert_eq!(heis().g_star(&p).unwrap(), 5.0);
    }

    #[test]
    fn hormander_examples() {
        assert_eq!(check_hormander(&heis(), &[0.0; 3], 2).unwrap(), (true, vec![2, 3]));
        let g = builtin_frame("baouendi_grushin").unwrap();
        assert_eq!(check_hormander(&g, &[0.0, 0.3], 2).unwrap(), (true, vec![1, 2]));
        let single = SubRiemannianFrame::new(
            vec![PolyVectorField::coordinate(2, 0)],
            Domain::new(vec![AxisSpec::dirichlet(-1.0, 1.0); 2]),
        )
        .unwrap();
        assert_eq!(check_hormander(&single, &[0.2, 0.1], 4).unwrap(), (false, vec![1, 1, 1, 1]));
    }

    #[test]
    fn goh_heisenberg_and_martinet() {
        let p = PhasePoint::new(vec![0.3, -0.1, 0.5], vec![0.2, 0.7, 1.25]);
        let g = goh_matrix(&heis(), &p).unwrap();
        assert_eq!(g[(0, 1)], 2.5);
        assert_eq!(g[(1, 0)], -2.5);
        let m = builtin_frame("martinet").unwrap();
        let p0 = PhasePoint::new(vec![0.0, 0.4, 0.1], vec![0.2, 0.7, 1.25]);
        assert_eq!(goh_matrix(&m, &p0).unwrap(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn builtin_frames_shapes() {
        let h = heis();
        assert_eq!((h.rank(), h.dim()), (2, 3));
        assert_eq!(h.domain().axis(0).boundary, Boundary::Dirichlet);
        assert_eq!((h.domain().axis(0).lo, h.domain().axis(0).hi), (-1.0, 1.0));
        let g = builtin_frame("baouendi_grushin").unwrap();
        assert_eq!(g.fields()[1].component(1), &Poly::var(2, 0));
        assert!(matches!(builtin_frame("nope"), Err(Error::UnknownFrame(_))));
        for name in BUILTIN_FRAMES {
            assert!(builtin_frame(name).unwrap().is_divergence_free());
        }
    }

    #[test]
    fn lattice_wrap_preserves_g_star() {
        let f = builtin_frame("heisenberg_quotient").unwrap();
        let mut x = vec![-0.4, 1.0, 2.0];
        let mut xi = vec![0.3, -0.2, 0.9];
        let before = f.g_star(&PhasePoint::new(x.clone(), xi.clone())).unwrap();
        f.domain().wrap(&mut x, &mut xi);
        assert!(x[0] >= 0.0 && x[0] < (2.0 * PI).sqrt());
        let after = f.g_star(&PhasePoint::new(x, xi)).unwrap();
        assert!((before - after).abs() < 1e-13);
    }

    #[test]
    fn hessian_matches_formula_on_heisenberg() {
        let f = heis();
        let xi3 = 1.7;
        let jet = f.jet(&[0.0; 3], true);
        let h = f.g_star_hessian(&jet, &[0.5, 0.0, xi3]);
        assert!((h.xx[0] - 2.0 * xi3 * xi3).abs() < 1e-14);
    }
}
