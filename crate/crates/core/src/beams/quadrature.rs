use super::beam::{BeamSlice, GaussianBeam, SliceTerms};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Tensor midpoint rule in the principal axes of the Gaussian envelope of each slice.
///
/// Node spacing along an axis is `min(σ / points_per_sigma, cutoff / 10)` and the box reaches
/// `min(box_sigmas·σ, cutoff)`, where `σ` is the envelope width along that axis. The
/// oscillation `e^{ik Re ψ}` is factored out analytically, so only the envelope is resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub points_per_sigma: f64,
    pub box_sigmas: f64,
    pub time_samples: usize,
    pub max_points_per_axis: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { points_per_sigma: 3.0, box_sigmas: 6.5, time_samples: 41, max_points_per_axis: 200 }
    }
}

/// Where the outside part of [`beam_energy`] is measured.
#[derive(Clone, Debug, PartialEq)]
pub enum EnergyRegion {
    Whole,
    /// Outside the Euclidean tube of this radius around `x'(t)`.
    Tube { radius: f64 },
}

struct SliceGrid {
    axes: DMatrix<f64>,
    nodes: Vec<Vec<f64>>,
    cell: f64,
}

fn slice_grid(slice: &BeamSlice, spec: &QuadratureSpec) -> Result<SliceGrid> {
    if !(spec.points_per_sigma >= 2.0) {
        return Err(Error::Resolution(format!(
            "{} points per envelope width; at least 2 are needed",
            spec.points_per_sigma
        )));
    }
    let n = slice.m.nrows();
    let im = slice.m.map(|z| z.im);
    let eig = SymmetricEigen::new((&im + im.transpose()) * 0.5);
    let mut counts = Vec::with_capacity(n);
    let mut cell = 1.0;
    let mut coords: Vec<Vec<f64>> = Vec::with_capacity(n);
    for e in 0..n {
        let lam = eig.eigenvalues[e];
        if !(lam > 0.0) {
            return Err(Error::Resolution(format!("Im M is not positive on the slice (eigenvalue {lam:e})")));
        }
        let sigma = 1.0 / (2.0 * slice.k * lam).sqrt();
        let half = (spec.box_sigmas * sigma).min(slice.cutoff);
        let step = (sigma / spec.points_per_sigma).min(slice.cutoff / 10.0);
        let count = (2.0 * half / step).ceil() as usize;
        if count > spec.max_points_per_axis {
            return Err(Error::Resolution(format!(
                "{count} nodes needed along an envelope axis (cap {})",
                spec.max_points_per_axis
            )));
        }
        let h = 2.0 * half / count as f64;
        cell *= h;
        coords.push((0..count).map(|j| -half + (j as f64 + 0.5) * h).collect());
        counts.push(count);
    }
    let total: usize = counts.iter().product();
    let mut nodes = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        nodes.push((0..n).map(|e| coords[e][idx[e]]).collect());
        for e in 0..n {
            idx[e] += 1;
            if idx[e] < counts[e] {
                break;
            }
            idx[e] = 0;
        }
    }
    Ok(SliceGrid { axes: eig.eigenvectors, nodes, cell })
}

/// Sums of `f(terms)` over a slice.
fn integrate_slice<const K: usize>(
    beam: &GaussianBeam,
    slice: &BeamSlice,
    spec: &QuadratureSpec,
    f: impl Fn(&SliceTerms) -> [f64; K] + Sync,
) -> Result<[f64; K]> {
    let grid = slice_grid(slice, spec)?;
    let frame = beam.frame();
    let dom = frame.domain();
    let n = frame.dim();
    let sums = grid
        .nodes
        .par_chunks(256)
        .map(|chunk| {
            let mut jet = frame.new_jet(false);
            let mut acc = [0.0; K];
            let mut delta = vec![0.0; n];
            let mut x = vec![0.0; n];
            let mut dummy = vec![0.0; n];
            for z in chunk {
                for r in 0..n {
                    delta[r] = (0..n).map(|e| grid.axes[(r, e)] * z[e]).sum();
                }
                if delta.iter().map(|d| d * d).sum::<f64>() >= slice.cutoff * slice.cutoff {
                    continue;
                }
                for r in 0..n {
                    x[r] = slice.x[r] + delta[r];
                }
                dom.wrap(&mut x, &mut dummy);
                frame.jet_into(&x, &mut jet);
                let v = f(&slice.terms(&jet, &delta));
                for j in 0..K {
                    acc[j] += v[j];
                }
            }
            acc
        })
        .reduce(
            || [0.0; K],
            |mut a, b| {
                for j in 0..K {
                    a[j] += b[j];
                }
                a
            },
        );
    Ok(sums.map(|s| s * grid.cell))
}

fn time_nodes(beam: &GaussianBeam, spec: &QuadratureSpec) -> Result<Vec<(f64, f64)>> {
    if spec.time_samples < 2 {
        return Err(Error::Resolution("at least two time samples are needed".into()));
    }
    let t0 = beam.trajectory.times[0];
    let dur = beam.duration();
    let m = spec.time_samples - 1;
    let h = dur / m as f64;
    Ok((0..=m).map(|j| (t0 + j as f64 * h, if j == 0 || j == m { 0.5 * h } else { h })).collect())
}

/// `‖(∂_tt − Δ) v_k‖_{L¹(0,T; L²)}` by the trapezoid rule in time.
pub fn beam_residual(beam: &GaussianBeam, spec: &QuadratureSpec) -> Result<f64> {
    let nodes = time_nodes(beam, spec)?;
    let parts: Result<Vec<f64>> = nodes
        .par_iter()
        .map(|&(t, w)| {
            let slice = BeamSlice::new(beam, t)?;
            let [r] = integrate_slice(beam, &slice, spec, |s| [s.residual_sq])?;
            Ok(w * r.sqrt())
        })
        .collect();
    Ok(parts?.iter().sum())
}

/// Energy of `Re v_k` at time `t`, with the part lying outside `region`.
pub fn beam_energy(beam: &GaussianBeam, t: f64, region: &EnergyRegion, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let slice = BeamSlice::new(beam, t)?;
    let r_out = match region {
        EnergyRegion::Whole => f64::INFINITY,
        EnergyRegion::Tube { radius } => *radius,
    };
    let [total, outside] =
        integrate_slice(beam, &slice, spec, |s| [s.energy, if s.radius > r_out { s.energy } else { 0.0 }])?;
    Ok((total, outside))
}

/// `∫ |v_k(t, ·)|²` over the slice.
pub fn slice_mass(beam: &GaussianBeam, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    let slice = BeamSlice::new(beam, t)?;
    let [m] = integrate_slice(beam, &slice, spec, |s| [s.mass])?;
    Ok(m)
}

/// Gaussian closed form `k^{n/2−2} π^{n/2} |a₀|² / √det(k Im M_spatial)` for the slice mass.
pub fn gaussian_mass_estimate(beam: &GaussianBeam, t: f64) -> Result<f64> {
    let slice = BeamSlice::new(beam, t)?;
    let n = slice.m.nrows() as f64;
    let det = (slice.m.map(|z| z.im) * beam.k).determinant();
    Ok(beam.prefactor().powi(2) * PI.powf(n / 2.0) * slice.a0.norm_sqr() / det.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::{
        assemble_beam, default_initial_phase, propagate_phase, spacetime_lift, transport_amplitude, PhaseMatrixPath, C64,
    };
    use crate::flow::{heisenberg_closed_form, integrate_bicharacteristic};
    use crate::frames::builtin_frame;

    fn beam(k: f64, frozen: bool) -> GaussianBeam {
        let f = builtin_frame("heisenberg").unwrap();
        let eps = 0.2;
        let p = heisenberg_closed_form(eps, 0.0);
        let tr = integrate_bicharacteristic(&f, &p.x, &p.xi, 0.5, 1e-3).unwrap();
        let st = spacetime_lift(&tr).unwrap();
        let m0 = default_initial_phase(&st);
        let ph = if frozen { PhaseMatrixPath::frozen(&st, m0) } else { propagate_phase(&st, &m0).unwrap() };
        let a = transport_amplitude(&st, &ph, C64::new(1.0, 0.0)).unwrap();
        assemble_beam(st, ph, a, k, 0.7).unwrap()
    }

    #[test]
    fn gaussian_mass_matches() {
        let b = beam(120.0, false);
        for t in [0.0, 0.3] {
            let m = slice_mass(&b, t, &QuadratureSpec::default()).unwrap();
            let g = gaussian_mass_estimate(&b, t).unwrap();
            assert!((m / g - 1.0).abs() < 0.02, "{m} {g}");
        }
    }

    #[test]
    fn whole_region_has_no_outside() {
        let b = beam(40.0, false);
        let (e, out) = beam_energy(&b, 0.2, &EnergyRegion::Whole, &QuadratureSpec::default()).unwrap();
        assert!(e > 0.0);
        assert_eq!(out, 0.0);
        let (_, out) = beam_energy(&b, 0.2, &EnergyRegion::Tube { radius: 0.1 }, &QuadratureSpec::default()).unwrap();
        assert!(out > 0.0 && out < e);
    }

    #[test]
    fn under_resolved_rejected() {
        let b = beam(40.0, false);
        let coarse = QuadratureSpec { points_per_sigma: 1.0, ..Default::default() };
        assert!(matches!(beam_residual(&b, &coarse), Err(Error::Resolution(_))));
        let capped = QuadratureSpec { max_points_per_axis: 5, ..Default::default() };
        assert!(matches!(slice_mass(&b, 0.0, &capped), Err(Error::Resolution(_))));
    }

    #[test]
    fn residual_decays_only_with_propagated_phase() {
        let spec = QuadratureSpec { time_samples: 6, ..Default::default() };
        let r = |k, frozen| beam_residual(&beam(k, frozen), &spec).unwrap();
        let slope = (r(160.0, false) / r(40.0, false)).ln() / 4f64.ln();
        let frozen = (r(160.0, true) / r(40.0, true)).ln() / 4f64.ln();
        assert!(slope < -0.3, "slope {slope}");
        assert!(frozen > slope + 0.3, "frozen {frozen}");
    }
}
