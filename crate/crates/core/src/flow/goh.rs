use crate::error::{check_dim, Error, Result};
use crate::frames::SubRiemannianFrame;
use nalgebra::{DMatrix, DVector};

/// A rescaled Goh matrix together with a compatible control vector.
#[derive(Clone, Debug)]
pub struct GohData {
    pub g: DMatrix<f64>,
    pub u0: DVector<f64>,
    /// Orthonormal columns spanning the range of `g` (a sum of invariant planes).
    pub invariant_plane_basis: DMatrix<f64>,
}

impl GohData {
    /// Validates `g` (antisymmetric) and `u0` (`Σ u0² = 1/4`, no kernel component).
    pub fn new(g: DMatrix<f64>, u0: &[f64]) -> Result<Self> {
        let m = u0.len();
        if g.nrows() != m || g.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, found: g.nrows() });
        }
        let scale = g.amax().max(1.0);
        if (&g + g.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidParameter("Goh matrix must be antisymmetric".into()));
        }
        if u0.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroControl);
        }
        let sum_sq: f64 = u0.iter().map(|v| v * v).sum();
        if (sum_sq - 0.25).abs() > 1e-12 {
            return Err(Error::ControlNormalization { sum_sq });
        }
        let svd = g.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let smax = svd.singular_values.max();
        let cols: Vec<usize> =
            (0..m).filter(|&i| smax > 0.0 && svd.singular_values[i] > 1e-10 * smax).collect();
        let basis = DMatrix::from_fn(m, cols.len(), |r, c| u[(r, cols[c])]);
        let uv = DVector::from_column_slice(u0);
        let proj = &basis * (basis.transpose() * &uv);
        let kernel = (&uv - proj).norm();
        if kernel > 1e-12 {
            return Err(Error::KernelComponent { norm: kernel });
        }
        Ok(GohData { g, u0: uv, invariant_plane_basis: basis })
    }
}

/// Covector `ξ0` at `q` with `X_i(q)·ξ0 = u0_i` and `2[X_j, X_i](q)·ξ0 = G0_ij / eps` for `i < j`.
///
/// Uses the minimum-norm least-squares solution and rejects inconsistent systems.
pub fn spiral_covector(
    frame: &SubRiemannianFrame,
    q: &[f64],
    eps: f64,
    u0: &[f64],
    g0: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let n = frame.dim();
    let m = frame.rank();
    check_dim(n, q.len())?;
    check_dim(m, u0.len())?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    GohData::new(g0.clone(), u0)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (i, f) in frame.fields().iter().enumerate() {
        rows.push(f.eval(q));
        rhs.push(u0[i]);
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let b = frame.fields()[j].bracket(&frame.fields()[i]);
            rows.push(b.eval(q).iter().map(|v| 2.0 * v).collect());
            rhs.push(g0[(i, j)] / eps);
        }
    }
    let a = DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]);
    let b = DVector::from_vec(rhs);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(f64::MIN_POSITIVE);
    let xi = svd.solve(&b, tol).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let residual = (&a * &xi - &b).norm();
    if residual > 1e-9 * (1.0 + b.norm()) {
        return Err(Error::InconsistentConstraints { residual });
    }
    Ok(xi.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::builtin_frame;

    fn g0() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
    }

    #[test]
    fn heisenberg_spiral_covector() {
        let f = builtin_frame("heisenberg").unwrap();
        for &eps in &[0.1, 0.05] {
            let xi = spiral_covector(&f, &[0.0; 3], eps, &[0.5, 0.0], &g0()).unwrap();
            assert!((xi[0] - 0.5).abs() < 1e-14);
            assert!(xi[1].abs() < 1e-14);
            assert!((xi[2] - 1.0 / (2.0 * eps)).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_controls_rejected() {
        let f = builtin_frame("heisenberg").unwrap();
        assert!(matches!(spiral_covector(&f, &[0.0; 3], 0.1, &[0.0, 0.0], &g0()), Err(Error::ZeroControl)));
        let zero_g = DMatrix::zeros(2, 2);
        assert!(matches!(
            spiral_covector(&f, &[0.0; 3], 0.1, &[0.5, 0.0], &zero_g),
            Err(Error::KernelComponent { .. })
        ));
        assert!(matches!(
            spiral_covector(&f, &[0.0; 3], 0.1, &[0.3, 0.0], &g0()),
            Err(Error::ControlNormalization { .. })
        ));
    }

    #[test]
    fn martinet_singular_point_is_inconsistent() {
        let f = builtin_frame("martinet").unwrap();
        assert!(matches!(
            spiral_covector(&f, &[0.0; 3], 0.1, &[0.5, 0.0], &g0()),
            Err(Error::InconsistentConstraints { .. })
        ));
    }

    #[test]
    fn goh_data_basis_spans_plane() {
        let d = GohData::new(g0(), &[0.3, 0.4]).unwrap();
        assert_eq!(d.invariant_plane_basis.ncols(), 2);
    }
}
