use crate::error::{Error, Result};
use crate::frames::{Boundary, SubRiemannianFrame};
use rayon::prelude::*;

/// One grid axis; Dirichlet axes store interior nodes only.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub boundary: Boundary,
}

impl GridAxis {
    pub fn dirichlet(lo: f64, hi: f64, count: usize) -> Self {
        GridAxis { lo, hi, count, boundary: Boundary::Dirichlet }
    }

    pub fn periodic(lo: f64, hi: f64, count: usize) -> Self {
        GridAxis { lo, hi, count, boundary: Boundary::Periodic }
    }

    pub fn extent(&self) -> f64 {
        self.hi - self.lo
    }

    /// `extent/(count+1)` on Dirichlet axes, `extent/count` on periodic ones.
    pub fn spacing(&self) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => self.extent() / (self.count + 1) as f64,
            Boundary::Periodic => self.extent() / self.count as f64,
        }
    }

    pub fn node(&self, c: usize) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => self.lo + (c + 1) as f64 * self.spacing(),
            Boundary::Periodic => self.lo + c as f64 * self.spacing(),
        }
    }
}

/// Tensor grid in two or three dimensions, stored row-major with the last axis contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<GridAxis>,
    shape: [usize; 3],
    strides: [usize; 3],
}

/// Fewest nodes accepted on one axis.
pub const MIN_AXIS_NODES: usize = 8;

impl Grid {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if !(2..=3).contains(&axes.len()) {
            return Err(Error::InvalidParameter(format!("grids have 2 or 3 axes, got {}", axes.len())));
        }
        for (j, a) in axes.iter().enumerate() {
            if a.count < MIN_AXIS_NODES {
                return Err(Error::InvalidParameter(format!(
                    "axis {j} has {} nodes; at least {MIN_AXIS_NODES} are needed",
                    a.count
                )));
            }
            if !(a.hi > a.lo) {
                return Err(Error::InvalidParameter(format!("axis {j} has an empty extent")));
            }
        }
        let mut shape = [1usize; 3];
        for (j, a) in axes.iter().enumerate() {
            shape[j] = a.count;
        }
        let strides = [shape[1] * shape[2], shape[2], 1];
        Ok(Grid { axes, shape, strides })
    }

    /// Grid on the frame's own coordinate box.
    pub fn for_frame(frame: &SubRiemannianFrame, counts: &[usize]) -> Result<Self> {
        crate::error::check_dim(frame.dim(), counts.len())?;
        Grid::new(
            frame
                .domain()
                .axes()
                .iter()
                .zip(counts)
                .map(|(a, &c)| GridAxis { lo: a.lo, hi: a.hi, count: c, boundary: a.boundary })
                .collect(),
        )
    }

    /// Homogeneous Dirichlet window `[lo, hi]` inside the frame's box.
    pub fn window(lo: &[f64], hi: &[f64], counts: &[usize]) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != counts.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: counts.len() });
        }
        Grid::new((0..lo.len()).map(|j| GridAxis::dirichlet(lo[j], hi[j], counts[j])).collect())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn axis(&self, j: usize) -> &GridAxis {
        &self.axes[j]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    /// Padded to three axes (trailing count 1 in 2D).
    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn strides(&self) -> [usize; 3] {
        self.strides
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, j: usize) -> f64 {
        self.axes[j].spacing()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing()).product()
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        [idx / self.strides[0], (idx / self.strides[1]) % self.shape[1], idx % self.shape[2]]
    }

    pub fn point_into(&self, idx: usize, x: &mut [f64]) {
        let c = self.coords(idx);
        for (j, a) in self.axes.iter().enumerate() {
            x[j] = a.node(c[j]);
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.point_into(idx, &mut x);
        x
    }

    /// `f` at every node.
    pub fn sample<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> Vec<f64> {
        let n = self.dim();
        (0..self.len())
            .into_par_iter()
            .map_init(|| vec![0.0; n], |x, idx| {
                self.point_into(idx, x);
                f(x)
            })
            .collect()
    }

    /// `f` at every node, for any sendable result.
    pub fn sample_map<T: Send, F: Fn(&[f64]) -> T + Sync>(&self, f: F) -> Vec<T> {
        let n = self.dim();
        (0..self.len())
            .into_par_iter()
            .map_init(|| vec![0.0; n], |x, idx| {
                self.point_into(idx, x);
                f(x)
            })
            .collect()
    }

    /// Discrete `L²` inner product (cell-volume weighted).
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.cell_volume() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm_sq(&self, u: &[f64]) -> f64 {
        self.inner(u, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::builtin_frame;

    #[test]
    fn spacing_and_nodes() {
        let d = GridAxis::dirichlet(-1.0, 1.0, 15);
        assert_eq!(d.spacing(), 0.125);
        assert_eq!(d.node(0), -0.875);
        assert_eq!(d.node(14), 0.875);
        let p = GridAxis::periodic(-1.0, 1.0, 16);
        assert_eq!(p.spacing(), 0.125);
        assert_eq!(p.node(0), -1.0);
    }

    #[test]
    fn indexing_round_trip() {
        let g = Grid::for_frame(&builtin_frame("heisenberg").unwrap(), &[9, 10, 11]).unwrap();
        assert_eq!(g.len(), 990);
        for idx in [0, 17, 500, 989] {
            let c = g.coords(idx);
            assert_eq!(c[0] * 110 + c[1] * 11 + c[2], idx);
        }
        assert!(matches!(Grid::for_frame(&builtin_frame("heisenberg").unwrap(), &[4, 10, 10]), Err(Error::InvalidParameter(_))));
        let g2 = Grid::for_frame(&builtin_frame("baouendi_grushin").unwrap(), &[8, 12]).unwrap();
        assert_eq!(g2.shape(), [8, 12, 1]);
    }
}
