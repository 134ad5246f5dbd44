//! Flags, weights, weighted gradings and nilpotent approximations.

use crate::error::{check_dim, Error, Result};
use crate::frames::{check_hormander, AxisSpec, Domain, Poly, PolyVectorField, SubRiemannianFrame};
use std::collections::BTreeMap;

/// Flag of the distribution at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct FlagData {
    pub q: Vec<f64>,
    /// `n_1 ≤ … ≤ n_r = n`.
    pub growth_vector: Vec<usize>,
    pub step: usize,
    pub weights: Vec<u32>,
    /// `Q = Σ_j j (n_j − n_{j−1})`.
    pub homogeneous_dimension: usize,
}

/// Flag and weights at `q`. The growth vector is non-decreasing (it may stall, as for Martinet at the origin).
pub fn sr_flag(frame: &SubRiemannianFrame, q: &[f64]) -> Result<FlagData> {
    let n = frame.dim();
    check_dim(n, q.len())?;
    let (ok, growth) = check_hormander(frame, q, n)?;
    if !ok {
        return Err(Error::HormanderFailure { depth: n, rank: *growth.last().unwrap_or(&0), dim: n });
    }
    let r = growth.iter().position(|&g| g == n).unwrap() + 1;
    let growth: Vec<usize> = growth[..r].to_vec();
    let weights = (1..=n).map(|i| (growth.iter().position(|&g| g >= i).unwrap() + 1) as u32).collect();
    let mut prev = 0;
    let mut qdim = 0;
    for (j, &g) in growth.iter().enumerate() {
        qdim += (j + 1) * (g - prev);
        prev = g;
    }
    Ok(FlagData { q: q.to_vec(), growth_vector: growth, step: r, weights, homogeneous_dimension: qdim })
}

/// Weighted degree `w(α) − w_j` of the monomial field `x^α ∂_j`.
pub fn weighted_degree(alpha: &[u32], j: usize, weights: &[u32]) -> i64 {
    let w: i64 = alpha.iter().zip(weights).map(|(&a, &w)| a as i64 * w as i64).sum();
    w - weights[j] as i64
}

/// Homogeneous parts of a field, keyed by weighted degree.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedDecomposition {
    pub parts: BTreeMap<i64, PolyVectorField>,
}

impl GradedDecomposition {
    pub fn reassemble(&self, dim: usize) -> PolyVectorField {
        self.parts.values().fold(PolyVectorField::zero(dim), |acc, p| acc.add(p))
    }

    pub fn lowest_degree(&self) -> Option<i64> {
        self.parts.keys().next().copied()
    }
}

pub fn graded_parts(vf: &PolyVectorField, weights: &[u32]) -> GradedDecomposition {
    let n = vf.dim();
    let mut parts: BTreeMap<i64, Vec<Poly>> = BTreeMap::new();
    for (j, c) in vf.components().iter().enumerate() {
        for (e, coef) in c.terms() {
            let d = weighted_degree(e, j, weights);
            let entry = parts.entry(d).or_insert_with(|| vec![Poly::zero(n); n]);
            entry[j].add_term(e.to_vec(), coef);
        }
    }
    GradedDecomposition { parts: parts.into_iter().map(|(d, c)| (d, PolyVectorField::new(c))).collect() }
}

/// Pull-back by the dilation `δ_ε(x) = (ε^{w_1} x_1, …)`: `x^α ∂_j ↦ ε^{w(α) − w_j} x^α ∂_j`.
pub fn dilate_vf(vf: &PolyVectorField, eps: f64, weights: &[u32]) -> Result<PolyVectorField> {
    if eps == 0.0 || !eps.is_finite() {
        return Err(Error::InvalidParameter("dilation parameter must be finite and nonzero".into()));
    }
    check_dim(vf.dim(), weights.len())?;
    let comps = vf
        .components()
        .iter()
        .enumerate()
        .map(|(j, c)| c.map_coeffs(|e, v| v * eps.powi(weighted_degree(e, j, weights) as i32)))
        .collect();
    Ok(PolyVectorField::new(comps))
}

fn translated_fields(frame: &SubRiemannianFrame, q: &[f64]) -> Vec<PolyVectorField> {
    frame.fields().iter().map(|f| f.translate(q)).collect()
}

/// Frame of degree −1 parts in coordinates centred at `q`.
pub fn nilpotent_approx(frame: &SubRiemannianFrame, q: &[f64]) -> Result<SubRiemannianFrame> {
    let flag = sr_flag(frame, q)?;
    let n = frame.dim();
    let mut fields = Vec::with_capacity(frame.rank());
    for (i, f) in translated_fields(frame, q).iter().enumerate() {
        let g = graded_parts(f, &flag.weights);
        if let Some(d) = g.lowest_degree().filter(|&d| d < -1) {
            return Err(Error::NonPrivileged { field: i, degree: d });
        }
        fields.push(g.parts.get(&-1).cloned().unwrap_or_else(|| PolyVectorField::zero(n)));
    }
    let axes = frame
        .domain()
        .axes()
        .iter()
        .zip(q)
        .map(|(a, qj)| AxisSpec { lo: a.lo - qj, hi: a.hi - qj, boundary: a.boundary })
        .collect();
    let out = SubRiemannianFrame::new(fields, Domain::new(axes))?;
    let words = out.bracket_words(flag.step + 1);
    if let Some(last) = words.last() {
        if last.iter().any(|w| !w.is_zero()) {
            return Err(Error::NotNilpotent { length: flag.step + 1 });
        }
    }
    Ok(out)
}

/// Frame `ε δ_ε^* X_i` in coordinates centred at `q`, on the box `[-half_width, half_width]^n`.
pub fn rescaled_frame(frame: &SubRiemannianFrame, q: &[f64], eps: f64, half_width: f64) -> Result<SubRiemannianFrame> {
    let flag = sr_flag(frame, q)?;
    let fields = translated_fields(frame, q)
        .iter()
        .map(|f| dilate_vf(f, eps, &flag.weights).map(|d| d.scale(eps)))
        .collect::<Result<Vec<_>>>()?;
    let axes = vec![AxisSpec::dirichlet(-half_width, half_width); frame.dim()];
    SubRiemannianFrame::new(fields, Domain::new(axes))
}

/// One row of [`nilpotent_convergence`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// Per field: `sup_{[-1,1]^n} |ε δ_ε^* X_i − X̂_i|`.
    pub sup_norms: Vec<f64>,
}

/// Sup-norm distance between the rescaled frame and its nilpotent approximation on a grid of the unit box.
pub fn nilpotent_convergence(frame: &SubRiemannianFrame, q: &[f64], eps_list: &[f64]) -> Result<Vec<ConvergenceRow>> {
    const PTS: usize = 11;
    let n = frame.dim();
    let nil = nilpotent_approx(frame, q)?;
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let resc = rescaled_frame(frame, q, eps, 1.0)?;
        let diffs: Vec<PolyVectorField> = resc.fields().iter().zip(nil.fields()).map(|(a, b)| a.sub(b)).collect();
        let mut sup = vec![0.0f64; diffs.len()];
        let total = PTS.pow(n as u32);
        let mut x = vec![0.0; n];
        for idx in 0..total {
            let mut r = idx;
            for xk in x.iter_mut() {
                *xk = -1.0 + 2.0 * (r % PTS) as f64 / (PTS - 1) as f64;
                r /= PTS;
            }
            for (s, d) in sup.iter_mut().zip(&diffs) {
                let v: f64 = d.eval(&x).iter().map(|c| c * c).sum::<f64>().sqrt();
                *s = s.max(v);
            }
        }
        rows.push(ConvergenceRow { eps, sup_norms: sup });
    }
    Ok(rows)
}
