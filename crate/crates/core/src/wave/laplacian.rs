use super::grid::Grid;
use crate::error::{Error, Result};
use crate::frames::{Boundary, Identification, SubRiemannianFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Accuracy of the centred first differences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StencilOrder {
    Second,
    Fourth,
    Sixth,
    Eighth,
}

impl StencilOrder {
    /// Weights `w_r` of `D u_j = Σ_r w_r (u_{j+r} − u_{j−r}) / h`.
    pub fn weights(self) -> &'static [f64] {
        match self {
            StencilOrder::Second => &[0.5],
            StencilOrder::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
            StencilOrder::Sixth => &[0.75, -0.15, 1.0 / 60.0],
            StencilOrder::Eighth => &[0.8, -0.2, 4.0 / 105.0, -1.0 / 280.0],
        }
    }

    pub fn reach(self) -> usize {
        self.weights().len()
    }

    pub fn accuracy(self) -> u32 {
        2 * self.reach() as u32
    }

    pub fn from_accuracy(p: u32) -> Option<Self> {
        match p {
            2 => Some(StencilOrder::Second),
            4 => Some(StencilOrder::Fourth),
            6 => Some(StencilOrder::Sixth),
            8 => Some(StencilOrder::Eighth),
            _ => None,
        }
    }

    /// Leapfrog is corrected to fourth order in time (`Δ̃ = Δ_h + dt²/12 Δ_h²`) above second order.
    pub fn modified_equation(self) -> bool {
        self != StencilOrder::Second
    }
}

#[derive(Clone, Debug)]
enum Coef {
    Const(f64),
    Nodal(Vec<f64>),
}

#[derive(Clone, Debug)]
struct Term {
    axis: usize,
    coef: Coef,
}

/// `Δ_h = −Σ_i X_{i,h}ᵀ X_{i,h}` with `X_{i,h} u = Σ_j c_ij D_j u`.
///
/// Each `D_j` is skew-symmetric, so `Δ_h` is symmetric and negative semidefinite by construction.
#[derive(Clone, Debug)]
pub struct DiscreteSubLaplacian {
    grid: Grid,
    order: StencilOrder,
    fields: Vec<Vec<Term>>,
    /// Per axis and coordinate: neighbours at `−r, +r` for `r = 1..=4` (`usize::MAX` = outside).
    neighbours: Vec<Vec<[usize; 8]>>,
    /// Per axis: stencil weights divided by `h`.
    weights: Vec<Vec<f64>>,
    lambda_max: f64,
}

/// Scratch buffers reused across operator applications.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    w: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    pub fn new(len: usize) -> Self {
        Workspace { w: vec![0.0; len], tmp: vec![0.0; len] }
    }
}

const NONE: usize = usize::MAX;

fn check_boundaries(frame: &SubRiemannianFrame, grid: &Grid) -> Result<()> {
    crate::error::check_dim(frame.dim(), grid.dim())?;
    let dom = frame.domain();
    for (j, ga) in grid.axes().iter().enumerate() {
        let fa = dom.axis(j);
        match ga.boundary {
            Boundary::Periodic => {
                if fa.boundary != Boundary::Periodic {
                    return Err(Error::BoundaryMismatch { axis: j, msg: "periodic grid axis on a Dirichlet frame axis".into() });
                }
                if (ga.lo - fa.lo).abs() > 1e-12 || (ga.hi - fa.hi).abs() > 1e-12 {
                    return Err(Error::BoundaryMismatch {
                        axis: j,
                        msg: format!("periodic grid axis [{}, {}) differs from the frame period [{}, {})", ga.lo, ga.hi, fa.lo, fa.hi),
                    });
                }
                if dom.identification() != Identification::Straight {
                    return Err(Error::BoundaryMismatch { axis: j, msg: "twisted gluing cannot be gridded periodically".into() });
                }
            }
            Boundary::Dirichlet => {
                if ga.lo < fa.lo - 1e-12 || ga.hi > fa.hi + 1e-12 {
                    return Err(Error::BoundaryMismatch {
                        axis: j,
                        msg: format!("window [{}, {}] leaves the frame box [{}, {}]", ga.lo, ga.hi, fa.lo, fa.hi),
                    });
                }
            }
        }
    }
    Ok(())
}

fn neighbour_table(count: usize, periodic: bool) -> Vec<[usize; 8]> {
    (0..count as i64)
        .map(|c| {
            let mut row = [NONE; 8];
            for r in 1..=4i64 {
                for (slot, p) in [(2 * (r - 1), c - r), (2 * (r - 1) + 1, c + r)] {
                    row[slot as usize] = if periodic {
                        p.rem_euclid(count as i64) as usize
                    } else if (0..count as i64).contains(&p) {
                        p as usize
                    } else {
                        NONE
                    };
                }
            }
            row
        })
        .collect()
}

pub fn build_sublaplacian(frame: &SubRiemannianFrame, grid: &Grid, order: StencilOrder) -> Result<DiscreteSubLaplacian> {
    check_boundaries(frame, grid)?;
    let n = grid.dim();
    let mut fields = Vec::with_capacity(frame.rank());
    for f in frame.fields() {
        let mut terms = Vec::new();
        for (j, p) in f.components().iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let coef = if p.is_constant() { Coef::Const(p.coeff(&vec![0u32; n])) } else { Coef::Nodal(grid.sample(|x| p.eval(x))) };
            terms.push(Term { axis: j, coef });
        }
        fields.push(terms);
    }
    let neighbours = grid.axes().iter().map(|a| neighbour_table(a.count, a.boundary == Boundary::Periodic)).collect();
    let weights = grid.axes().iter().map(|a| order.weights().iter().map(|w| w / a.spacing()).collect()).collect();
    let mut op = DiscreteSubLaplacian { grid: grid.clone(), order, fields, neighbours, weights, lambda_max: 0.0 };
    op.lambda_max = op.power_iteration(50);
    Ok(op)
}

impl DiscreteSubLaplacian {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn order(&self) -> StencilOrder {
        self.order
    }

    pub fn rank(&self) -> usize {
        self.fields.len()
    }

    /// Power-method estimate of the largest eigenvalue of `−Δ_h`.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `dst += scale · coef ⊙ D_axis src`.
    fn diff_add(&self, axis: usize, src: &[f64], coef: Option<&[f64]>, scale: f64, dst: &mut [f64]) {
        let shape = self.grid.shape();
        let stride = self.grid.strides()[axis];
        let nb = &self.neighbours[axis];
        let w = &self.weights[axis];
        let plane = shape[1] * shape[2];
        let n2 = shape[2];
        dst.par_chunks_mut(plane).enumerate().for_each(|(c0, dplane)| {
            for c1 in 0..shape[1] {
                let row = c0 * plane + c1 * n2;
                let drow = &mut dplane[c1 * n2..(c1 + 1) * n2];
                let crow = coef.map(|c| &c[row..row + n2]);
                if axis < 2 {
                    let c = if axis == 0 { c0 } else { c1 };
                    let base = row - c * stride;
                    let t = nb[c];
                    for (r, &wr) in w.iter().enumerate() {
                        let (m, p) = (t[2 * r], t[2 * r + 1]);
                        let s = scale * wr;
                        let prow = (p != NONE).then(|| &src[base + p * stride..base + p * stride + n2]);
                        let mrow = (m != NONE).then(|| &src[base + m * stride..base + m * stride + n2]);
                        match (prow, mrow, crow) {
                            (Some(pr), Some(mr), None) => {
                                for c2 in 0..n2 {
                                    drow[c2] += s * (pr[c2] - mr[c2]);
                                }
                            }
                            (Some(pr), Some(mr), Some(cr)) => {
                                for c2 in 0..n2 {
                                    drow[c2] += s * cr[c2] * (pr[c2] - mr[c2]);
                                }
                            }
                            _ => {
                                for c2 in 0..n2 {
                                    let d = prow.map_or(0.0, |x| x[c2]) - mrow.map_or(0.0, |x| x[c2]);
                                    drow[c2] += s * crow.map_or(1.0, |x| x[c2]) * d;
                                }
                            }
                        }
                    }
                } else {
                    let srow = &src[row..row + n2];
                    let at = |i: usize| if i == NONE { 0.0 } else { srow[i] };
                    for c2 in 0..n2 {
                        let t = &nb[c2];
                        let mut d = 0.0;
                        for (r, &wr) in w.iter().enumerate() {
                            d += wr * (at(t[2 * r + 1]) - at(t[2 * r]));
                        }
                        drow[c2] += scale * crow.map_or(1.0, |x| x[c2]) * d;
                    }
                }
            }
        });
    }

    /// `out = X_{i,h} u`.
    pub fn apply_field(&self, i: usize, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for term in &self.fields[i] {
            match &term.coef {
                Coef::Const(c) => self.diff_add(term.axis, u, None, *c, out),
                Coef::Nodal(c) => self.diff_add(term.axis, u, Some(c), 1.0, out),
            }
        }
    }

    /// `out = Δ_h u`.
    pub fn apply_with(&self, u: &[f64], out: &mut [f64], ws: &mut Workspace) {
        let len = self.grid.len();
        if ws.w.len() != len {
            *ws = Workspace::new(len);
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.fields.len() {
            self.apply_field(i, u, &mut ws.w);
            for term in &self.fields[i] {
                match &term.coef {
                    Coef::Const(c) => self.diff_add(term.axis, &ws.w, None, *c, out),
                    Coef::Nodal(c) => {
                        ws.tmp.iter_mut().zip(c.iter().zip(&ws.w)).for_each(|(t, (a, b))| *t = a * b);
                        self.diff_add(term.axis, &ws.tmp, None, 1.0, out);
                    }
                }
            }
        }
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let mut ws = Workspace::new(self.grid.len());
        self.apply_with(u, out, &mut ws);
    }

    /// `Σ_i ⟨X_{i,h} u, X_{i,h} v⟩ = −⟨Δ_h u, v⟩`.
    pub fn dirichlet_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let len = self.grid.len();
        let (mut a, mut b) = (vec![0.0; len], vec![0.0; len]);
        (0..self.fields.len())
            .map(|i| {
                self.apply_field(i, u, &mut a);
                self.apply_field(i, v, &mut b);
                self.grid.inner(&a, &b)
            })
            .sum()
    }

    fn power_iteration(&self, iterations: usize) -> f64 {
        let len = self.grid.len();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut w = vec![0.0; len];
        let mut ws = Workspace::new(len);
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if nv == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|a| *a /= nv);
            self.apply_with(&v, &mut w, &mut ws);
            lambda = -v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            v.iter_mut().zip(&w).for_each(|(a, b)| *a = -b);
        }
        lambda
    }

    /// Largest stable leapfrog step `√c/√λ_max`: `c = 4` for plain leapfrog, `12` with the modified equation.
    pub fn cfl_limit(&self) -> f64 {
        let c: f64 = if self.order.modified_equation() { 12.0 } else { 4.0 };
        if self.lambda_max > 0.0 {
            c.sqrt() / self.lambda_max.sqrt()
        } else {
            f64::INFINITY
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{builtin_frame, AxisSpec, Domain, PolyVectorField};

    fn random(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn periodic_derivative_is_skew_and_gives_wide_second_difference() {
        let f = SubRiemannianFrame::new(
            vec![PolyVectorField::coordinate(2, 0)],
            Domain::new(vec![AxisSpec::periodic(0.0, 1.0), AxisSpec::periodic(0.0, 1.0)]),
        )
        .unwrap();
        let g = Grid::for_frame(&f, &[16, 8]).unwrap();
        let op = build_sublaplacian(&f, &g, StencilOrder::Second).unwrap();
        let u = random(g.len(), 1);
        let v = random(g.len(), 2);
        let (mut xu, mut xv) = (vec![0.0; g.len()], vec![0.0; g.len()]);
        op.apply_field(0, &u, &mut xu);
        op.apply_field(0, &v, &mut xv);
        assert!((g.inner(&xu, &v) + g.inner(&u, &xv)).abs() < 1e-12);
        let mut lu = vec![0.0; g.len()];
        op.apply(&u, &mut lu);
        let h = g.spacing(0);
        for idx in [0usize, 37, 100] {
            let c = g.coords(idx);
            let at = |d: i64| u[((c[0] as i64 + d).rem_euclid(16) as usize) * 8 + c[1]];
            let expect = (at(2) - 2.0 * at(0) + at(-2)) / (4.0 * h * h);
            assert!((lu[idx] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_and_negative() {
        for order in [StencilOrder::Second, StencilOrder::Fourth, StencilOrder::Eighth] {
            for (name, counts) in [("heisenberg", vec![9, 10, 12]), ("martinet", vec![9, 9, 9]), ("baouendi_grushin", vec![12, 10])] {
                let f = builtin_frame(name).unwrap();
                let g = Grid::for_frame(&f, &counts).unwrap();
                let op = build_sublaplacian(&f, &g, order).unwrap();
                let mut lu = vec![0.0; g.len()];
                let mut lv = vec![0.0; g.len()];
                for s in 0..100 {
                    let u = random(g.len(), 10 + s);
                    let v = random(g.len(), 500 + s);
                    op.apply(&u, &mut lu);
                    op.apply(&v, &mut lv);
                    let scale = g.inner(&lu, &lu).sqrt() * g.norm_sq(&v).sqrt();
                    assert!((g.inner(&lu, &v) - g.inner(&u, &lv)).abs() <= 1e-13 * scale, "{name}");
                    assert!(g.inner(&lu, &u) <= 0.0);
                    assert!((g.inner(&lu, &u) + op.dirichlet_form(&u, &u)).abs() <= 1e-12 * scale);
                }
                assert!(op.lambda_max() > 0.0);
            }
        }
    }

    #[test]
    fn constants_in_kernel_on_periodic_grid() {
        let h = builtin_frame("heisenberg").unwrap();
        let f = h.with_domain(Domain::new(vec![AxisSpec::periodic(-1.0, 1.0); 3])).unwrap();
        let g = Grid::for_frame(&f, &[10, 10, 10]).unwrap();
        let op = build_sublaplacian(&f, &g, StencilOrder::Fourth).unwrap();
        let mut out = vec![1.0; g.len()];
        op.apply(&vec![1.0; g.len()], &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn power_method_close_to_bound() {
        let f = builtin_frame("heisenberg").unwrap();
        let g = Grid::for_frame(&f, &[15, 16, 16]).unwrap();
        let op = build_sublaplacian(&f, &g, StencilOrder::Second).unwrap();
        // ‖X_1‖ ≤ 1/h1, ‖X_2‖ ≤ 1/h2 + max|x1|/h3
        let bound = (1.0 / g.spacing(0)).powi(2) + (1.0 / g.spacing(1) + 0.875 / g.spacing(2)).powi(2);
        assert!(op.lambda_max() <= bound * (1.0 + 1e-12));
        assert!(op.lambda_max() > 0.5 * bound);
    }

    #[test]
    fn mismatched_boundaries_rejected() {
        let f = builtin_frame("heisenberg").unwrap();
        let g = Grid::new(vec![
            super::super::GridAxis::periodic(-1.0, 1.0, 10),
            super::super::GridAxis::periodic(-1.0, 1.0, 10),
            super::super::GridAxis::periodic(-1.0, 1.0, 10),
        ])
        .unwrap();
        assert!(matches!(build_sublaplacian(&f, &g, StencilOrder::Second), Err(Error::BoundaryMismatch { axis: 0, .. })));
        let w = Grid::window(&[-0.5, -2.0, -0.5], &[0.5, 0.0, 0.5], &[8, 8, 8]).unwrap();
        assert!(matches!(build_sublaplacian(&f, &w, StencilOrder::Second), Err(Error::BoundaryMismatch { axis: 1, .. })));
        let q = builtin_frame("heisenberg_quotient").unwrap();
        let gq = Grid::for_frame(&q, &[8, 8, 8]).unwrap();
        assert!(matches!(build_sublaplacian(&q, &gq, StencilOrder::Second), Err(Error::BoundaryMismatch { .. })));
    }
}
