use crate::error::{Error, Result};
use crate::frames::PhasePoint;

/// The spiral of parameter `eps` through the origin, on the energy level `g* = 1/4`.
pub fn heisenberg_closed_form(eps: f64, t: f64) -> PhasePoint {
    let (s, c) = (t / eps).sin_cos();
    let x = vec![eps * s, eps * c - eps, eps * (t / 2.0 - eps * (2.0 * t / eps).sin() / 4.0)];
    let xi = vec![c / 2.0, 0.0, 1.0 / (2.0 * eps)];
    PhasePoint::new(x, xi)
}

/// Constants of the general Heisenberg geodesic with `g* = 1/4` and `ξ3 ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeisenbergParams {
    pub b: f64,
    pub c: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub phi: f64,
}

/// State at time `t` of the geodesic with phase `θ = 2ξ3 t + φ`:
/// `x1 = cos θ/(2ξ3) + ξ2/ξ3`, `x2 = B − sin θ/(2ξ3)`,
/// `x3 = C + t/(4ξ3) + sin 2θ/(16ξ3²) + ξ2 sin θ/(2ξ3²)`, `ξ1 = −sin θ / 2`.
pub fn heisenberg_general_closed_form(p: HeisenbergParams, t: f64) -> Result<PhasePoint> {
    if p.xi3 == 0.0 || !p.xi3.is_finite() {
        return Err(Error::InvalidParameter("xi3 must be nonzero (use the straight-line solution)".into()));
    }
    let th = 2.0 * p.xi3 * t + p.phi;
    let (s, c) = th.sin_cos();
    let q = p.xi3;
    let x1 = c / (2.0 * q) + p.xi2 / q;
    let x2 = p.b - s / (2.0 * q);
    let x3 = p.c + t / (4.0 * q) + (2.0 * th).sin() / (16.0 * q * q) + p.xi2 * s / (2.0 * q * q);
    Ok(PhasePoint::new(vec![x1, x2, x3], vec![-s / 2.0, p.xi2, q]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::builtin_frame;
    use std::f64::consts::PI;

    #[test]
    fn spiral_start_and_full_turn() {
        let eps = 0.1;
        let p0 = heisenberg_closed_form(eps, 0.0);
        assert_eq!(p0.x, vec![0.0, 0.0, 0.0]);
        assert_eq!(p0.xi, vec![0.5, 0.0, 5.0]);
        let p1 = heisenberg_closed_form(eps, 2.0 * PI * eps);
        assert!(p1.x[0].abs() < 1e-15 && p1.x[1].abs() < 1e-15);
        assert!((p1.x[2] - PI * eps * eps).abs() < 1e-15);
    }

    #[test]
    fn spiral_on_energy_level() {
        let f = builtin_frame("heisenberg").unwrap();
        for &eps in &[0.3, 0.05] {
            for i in 0..50 {
                let p = heisenberg_closed_form(eps, i as f64 * 0.037);
                assert!((f.g_star(&p).unwrap() - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn general_form_reduces_to_spiral() {
        let eps = 0.2;
        let p = HeisenbergParams { b: -eps, c: 0.0, xi2: 0.0, xi3: 1.0 / (2.0 * eps), phi: -PI / 2.0 };
        for i in 0..40 {
            let t = i as f64 * 0.031;
            let a = heisenberg_general_closed_form(p, t).unwrap();
            let b = heisenberg_closed_form(eps, t);
            for k in 0..3 {
                assert!((a.x[k] - b.x[k]).abs() < 1e-14);
                assert!((a.xi[k] - b.xi[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mean_vertical_speed() {
        let p = HeisenbergParams { b: 0.1, c: -0.2, xi2: 0.3, xi3: 1.7, phi: 0.4 };
        let period = PI / p.xi3;
        let a = heisenberg_general_closed_form(p, 0.0).unwrap();
        let b = heisenberg_general_closed_form(p, period).unwrap();
        assert!(((b.x[2] - a.x[2]) / period - 1.0 / (4.0 * p.xi3)).abs() < 1e-14);
    }

    #[test]
    fn general_form_on_energy_level_and_rejects_zero_xi3() {
        let f = builtin_frame("heisenberg").unwrap();
        let p = HeisenbergParams { b: 0.1, c: -0.2, xi2: -0.4, xi3: 2.3, phi: 1.1 };
        for i in 0..20 {
            let s = heisenberg_general_closed_form(p, 0.1 * i as f64).unwrap();
            assert!((f.g_star(&s).unwrap() - 0.25).abs() < 1e-13);
        }
        assert!(heisenberg_general_closed_form(HeisenbergParams { xi3: 0.0, ..p }, 0.0).is_err());
    }
}
