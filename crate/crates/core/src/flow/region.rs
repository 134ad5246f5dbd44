use super::BicharTrajectory;

/// Axis-aligned box; infinite bounds are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Aabb { lo, hi }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Euclidean distance from `x` to the box (zero inside).
    pub fn distance_outside(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| {
                let d = (l - v).max(v - h).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Distance from an interior point to the finite faces.
    pub fn depth_inside(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.lo.iter().zip(&self.hi)).fold(f64::INFINITY, |m, (v, (l, h))| m.min(v - l).min(h - v))
    }
}

/// An observation region in the coordinate box.
#[derive(Clone, Debug, PartialEq)]
pub enum RegionSpec {
    Everything,
    Boxes(Vec<Aabb>),
    BoxComplement(Vec<Aabb>),
    /// The slab `lo ≤ x_axis ≤ hi`.
    Strip { axis: usize, lo: f64, hi: f64 },
    /// Everything outside the open slab `lo < x_axis < hi`.
    StripComplement { axis: usize, lo: f64, hi: f64 },
}

impl RegionSpec {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            RegionSpec::Everything => true,
            RegionSpec::Boxes(b) => b.iter().any(|bx| bx.contains(x)),
            RegionSpec::BoxComplement(b) => !b.iter().any(|bx| bx.contains(x)),
            RegionSpec::Strip { axis, lo, hi } => x[*axis] >= *lo && x[*axis] <= *hi,
            RegionSpec::StripComplement { axis, lo, hi } => !(x[*axis] > *lo && x[*axis] < *hi),
        }
    }

    /// Euclidean distance from `q` to the region (coordinates taken literally).
    pub fn distance_from(&self, q: &[f64]) -> f64 {
        match self {
            RegionSpec::Everything => 0.0,
            RegionSpec::Boxes(b) => b.iter().map(|bx| bx.distance_outside(q)).fold(f64::INFINITY, f64::min),
            RegionSpec::BoxComplement(b) => b.iter().filter(|bx| bx.contains(q)).map(|bx| bx.depth_inside(q)).fold(0.0, f64::max),
            RegionSpec::Strip { axis, lo, hi } => (lo - q[*axis]).max(q[*axis] - hi).max(0.0),
            RegionSpec::StripComplement { axis, lo, hi } => (q[*axis] - lo).min(hi - q[*axis]).max(0.0),
        }
    }
}

/// `max_i |x(t_i) − q|`, using wrapped differences along periodic axes.
pub fn confinement_radius(traj: &BicharTrajectory, q: &[f64]) -> f64 {
    let dom = traj.frame().domain();
    traj.states.iter().map(|s| dom.distance(q, &s.x)).fold(0.0, f64::max)
}

/// First sample time at which the trajectory lies in `omega`.
pub fn escape_time(traj: &BicharTrajectory, omega: &RegionSpec) -> Option<f64> {
    traj.times.iter().zip(&traj.states).find(|(_, s)| omega.contains(&s.x)).map(|(t, _)| *t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{heisenberg_closed_form, integrate_bicharacteristic};
    use crate::frames::{builtin_frame, PhasePoint};
    use std::f64::consts::PI;

    #[test]
    fn straight_line_radius_is_one() {
        let f = builtin_frame("heisenberg").unwrap();
        let tr = integrate_bicharacteristic(&f, &[0.0; 3], &[0.5, 0.0, 0.0], 1.0 - 1e-9, 1e-3).unwrap();
        assert!((confinement_radius(&tr, &[0.0; 3]) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn stationary_point_radius_is_zero() {
        let f = builtin_frame("heisenberg").unwrap();
        let p = PhasePoint::new(vec![0.2, 0.1, 0.0], vec![0.0, 0.2, 1.0]);
        let tr = BicharTrajectory::constant(&f, p, 1.0, 0.1).unwrap();
        assert_eq!(tr.hamiltonian_value, 0.0);
        assert_eq!(confinement_radius(&tr, &[0.2, 0.1, 0.0]), 0.0);
    }

    #[test]
    fn spiral_radius_bound() {
        let f = builtin_frame("heisenberg").unwrap();
        let eps = 0.05;
        let t_final = 1.0;
        let tr = integrate_bicharacteristic(&f, &[0.0; 3], &[0.5, 0.0, 1.0 / (2.0 * eps)], t_final, 1e-4 * eps).unwrap();
        let r = confinement_radius(&tr, &[0.0; 3]);
        assert!(r <= 2.0 * eps * 2f64.sqrt() + eps * t_final);
        let exact = heisenberg_closed_form(eps, t_final);
        assert!(f.domain().distance(&exact.x, &tr.states.last().unwrap().x) < 1e-6);
    }

    #[test]
    fn escape_from_inside_strip() {
        let f = builtin_frame("heisenberg_quotient").unwrap();
        let omega = RegionSpec::StripComplement { axis: 2, lo: PI / 2.0, hi: 1.5 * PI };
        let x0 = [1.0, 1.0, PI];
        // large xi3 keeps the trajectory spinning inside the strip
        let tr = integrate_bicharacteristic(&f, &x0, &[0.5, 1.0 * 20.0, 20.0], 1.0, 1e-4).unwrap();
        assert_eq!(escape_time(&tr, &omega), None);
        let omega_far = RegionSpec::BoxComplement(vec![Aabb::new(vec![0.5, 0.5, 0.0], vec![1.5, 1.5, 2.0 * PI])]);
        assert!(escape_time(&tr, &omega_far).is_none());
    }

    #[test]
    fn region_distances() {
        let omega = RegionSpec::BoxComplement(vec![Aabb::new(
            vec![-0.5, -0.5, f64::NEG_INFINITY],
            vec![0.5, 0.5, f64::INFINITY],
        )]);
        assert!((omega.distance_from(&[0.1, 0.0, 3.0]) - 0.4).abs() < 1e-15);
        assert!(omega.contains(&[0.6, 0.0, 0.0]));
        assert!(!omega.contains(&[0.4, -0.4, 9.0]));
        let strip = RegionSpec::StripComplement { axis: 2, lo: 1.0, hi: 2.0 };
        assert!((strip.distance_from(&[0.0, 0.0, 1.25]) - 0.25).abs() < 1e-15);
    }
}
