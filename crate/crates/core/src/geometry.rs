//! Stereographic projection of the southern band onto a planar annulus.
//!
//! A point at longitude `phi` and latitude `theta` maps to radius
//! `r = cos(theta) / (1 - sin(theta))` in the equatorial plane. The map is
//! conformal with factor `alpha = (1 + r^2)^2 / 4`, so the sphere area
//! element is `dx dy / alpha`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AnnulusGrid, ScalarField};

/// Parameters of one circumpolar scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    /// Southern boundary latitude in radians.
    pub theta1: f64,
    /// Northern boundary latitude in radians.
    pub theta2: f64,
    /// Stream function on the southern boundary.
    pub psi1: f64,
    /// Stream function on the northern boundary.
    pub psi2: f64,
    /// Nondimensional rotation rate.
    pub omega: f64,
    /// Slope of the affine vorticity relation.
    pub lambda: f64,
    /// Offset of the affine vorticity relation.
    pub upsilon: f64,
    /// Velocity scale in m/s used for dimensional output.
    pub u_scale: f64,
}

pub const DEFAULT_OMEGA: f64 = 4650.0;
pub const DEFAULT_U_SCALE: f64 = 0.1;
pub const DEFAULT_THETA1_DEG: f64 = -60.0;
pub const DEFAULT_THETA2_DEG: f64 = -50.0;

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            theta1: DEFAULT_THETA1_DEG.to_radians(),
            theta2: DEFAULT_THETA2_DEG.to_radians(),
            psi1: 0.0,
            psi2: 0.0,
            omega: DEFAULT_OMEGA,
            lambda: 0.0,
            upsilon: 0.0,
            u_scale: DEFAULT_U_SCALE,
        }
    }
}

impl BandConfig {
    /// Checks the band ordering and rotation invariants.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.theta1,
            self.theta2,
            self.psi1,
            self.psi2,
            self.omega,
            self.lambda,
            self.upsilon,
            self.u_scale,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("band parameters must be finite".into()));
        }
        if !(-PI / 2.0 < self.theta1 && self.theta1 < self.theta2 && self.theta2 < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need -pi/2 < theta1 < theta2 < 0, got theta1 = {}, theta2 = {}",
                self.theta1, self.theta2
            )));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    pub fn r1(&self) -> f64 {
        radius_of_latitude(self.theta1)
    }

    pub fn r2(&self) -> f64 {
        radius_of_latitude(self.theta2)
    }
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    /// Longitude in `[0, 2pi)`.
    pub phi: f64,
    /// Latitude in `(-pi/2, pi/2)`.
    pub theta: f64,
}

impl SpherePoint {
    /// Builds a point, wrapping `phi` into `[0, 2pi)`.
    pub fn new(phi: f64, theta: f64) -> Result<Self> {
        if !(theta.abs() < PI / 2.0) || !phi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "latitude must lie strictly inside (-pi/2, pi/2), got {theta}"
            )));
        }
        Ok(Self {
            phi: wrap_angle(phi),
            theta,
        })
    }
}

/// A point of the equatorial projection plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Maps an angle into `[0, 2pi)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Planar radius of the circle of latitude `theta`.
pub fn radius_of_latitude(theta: f64) -> f64 {
    theta.cos() / (1.0 - theta.sin())
}

/// Latitude of the circle of planar radius `r`.
pub fn latitude_of_radius(r: f64) -> f64 {
    (r * r - 1.0).atan2(2.0 * r)
}

pub fn project(p: SpherePoint) -> PlanePoint {
    let r = radius_of_latitude(p.theta);
    PlanePoint {
        x: r * p.phi.cos(),
        y: r * p.phi.sin(),
    }
}

pub fn unproject(q: PlanePoint) -> Result<SpherePoint> {
    if q.x == 0.0 && q.y == 0.0 {
        return Err(Error::OriginUndefined);
    }
    Ok(SpherePoint {
        phi: wrap_angle(q.y.atan2(q.x)),
        theta: latitude_of_radius(q.radius()),
    })
}

/// Conformal factor at planar radius `r`.
pub fn alpha_of_radius(r: f64) -> f64 {
    let s = 1.0 + r * r;
    0.25 * s * s
}

pub fn alpha(q: PlanePoint) -> f64 {
    alpha_of_radius(q.radius())
}

/// Planetary term at planar radius `r`; equals `-2 omega sin(theta)`.
pub fn beta_of_radius(r: f64, omega: f64) -> f64 {
    let r2 = r * r;
    2.0 * omega * (1.0 - r2) / (1.0 + r2)
}

pub fn beta(q: PlanePoint, omega: f64) -> f64 {
    beta_of_radius(q.radius(), omega)
}

/// Converts eastward `u` and northward `v` into planar Cartesian `(U, V)`.
pub fn vector_to_plane(u: f64, v: f64, p: SpherePoint) -> (f64, f64) {
    let k = 1.0 - p.theta.sin();
    let (s, c) = p.phi.sin_cos();
    (k * (v * c - u * s), k * (v * s + u * c))
}

/// Inverse of [`vector_to_plane`].
pub fn vector_to_sphere(big_u: f64, big_v: f64, q: PlanePoint) -> (f64, f64) {
    let r2 = q.x * q.x + q.y * q.y;
    // 1 - sin(theta) = 2 / (1 + r^2)
    let k = 2.0 / (1.0 + r2);
    let phi = q.y.atan2(q.x);
    let (s, c) = phi.sin_cos();
    ((-big_u * s + big_v * c) / k, (big_u * c + big_v * s) / k)
}

/// Integral of `f` over the band with respect to the sphere area element.
///
/// Trapezoidal in `rho = log r` with half-weight endpoints, periodic
/// trapezoid in `phi`.
pub fn band_integral(f: &ScalarField, grid: &AnnulusGrid) -> Result<f64> {
    grid.check(f)?;
    let mut total = 0.0;
    for i in 0..grid.n_rho {
        let row: f64 = f.row(i).iter().sum();
        total += grid.area_weight(i) * row;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn band() -> BandConfig {
        BandConfig::default()
    }

    #[test]
    fn project_known_points() {
        let q = project(SpherePoint::new(0.0, 0.0).unwrap());
        assert!((q.x - 1.0).abs() < 1e-15 && q.y.abs() < 1e-15);
        let q = project(SpherePoint::new(PI / 4.0, 0.0).unwrap());
        let h = 0.5f64.sqrt();
        assert!((q.x - h).abs() < 1e-15 && (q.y - h).abs() < 1e-15);
        let q = project(SpherePoint::new(0.0, -PI / 3.0).unwrap());
        assert!((q.x - 0.267_949_192_431_122_7).abs() < 1e-14);
        assert_eq!(q.y, 0.0);
    }

    #[test]
    fn unproject_known_points() {
        let p = unproject(PlanePoint { x: 1.0, y: 0.0 }).unwrap();
        assert!(p.phi.abs() < 1e-15 && p.theta.abs() < 1e-15);
        let p = unproject(PlanePoint { x: 0.5, y: 0.0 }).unwrap();
        assert!((p.theta - (-0.6f64).asin()).abs() < 1e-15);
        assert!(matches!(
            unproject(PlanePoint { x: 0.0, y: 0.0 }),
            Err(Error::OriginUndefined)
        ));
    }

    #[test]
    fn unproject_negative_angles_wrap() {
        let p = unproject(PlanePoint { x: 0.3, y: -0.1 }).unwrap();
        assert!((0.0..TAU).contains(&p.phi));
    }

    #[test]
    fn alpha_and_beta_values() {
        assert_eq!(alpha(PlanePoint { x: 0.0, y: 0.0 }), 0.25);
        assert_eq!(alpha(PlanePoint { x: 1.0, y: 0.0 }), 1.0);
        assert_eq!(beta(PlanePoint { x: 1.0, y: 0.0 }, 3.0), 0.0);
        assert_eq!(beta(PlanePoint { x: 0.0, y: 0.0 }, 3.0), 6.0);
    }

    #[test]
    fn eastward_unit_vector_at_zero_longitude() {
        let theta = -0.9;
        let (u, v) = vector_to_plane(1.0, 0.0, SpherePoint::new(0.0, theta).unwrap());
        assert!(u.abs() < 1e-15);
        assert!((v - (1.0 - theta.sin())).abs() < 1e-15);
        assert_eq!(
            vector_to_plane(0.0, 0.0, SpherePoint::new(1.0, theta).unwrap()),
            (0.0, 0.0)
        );
    }

    #[test]
    fn config_validation() {
        assert!(band().validate().is_ok());
        let mut c = band();
        c.theta1 = c.theta2;
        assert!(c.validate().is_err());
        let mut c = band();
        c.omega = 0.0;
        assert!(c.validate().is_err());
        let c = band();
        assert!(0.0 < c.r1() && c.r1() < c.r2() && c.r2() < 1.0);
    }

    #[test]
    fn band_area_and_moments_converge_at_second_order() {
        let c = band();
        let area = TAU * (c.theta2.sin() - c.theta1.sin());
        let moment = PI * (c.theta2.sin().powi(2) - c.theta1.sin().powi(2));
        let mut prev: Option<(f64, f64)> = None;
        for n in [64, 128, 256, 512] {
            let g = AnnulusGrid::new(c.theta1, c.theta2, n, 16).unwrap();
            let one = ScalarField::from_fn(&g, |_, _| 1.0);
            let s = ScalarField::from_fn(&g, |i, _| g.theta[i].sin());
            let e_area = (band_integral(&one, &g).unwrap() - area).abs();
            let e_mom = (band_integral(&s, &g).unwrap() - moment).abs();
            if let Some((pa, pm)) = prev {
                assert!((pa / e_area - 4.0).abs() < 0.1, "area ratio {}", pa / e_area);
                assert!((pm / e_mom - 4.0).abs() < 0.1, "moment ratio {}", pm / e_mom);
            }
            prev = Some((e_area, e_mom));
        }
    }

    #[test]
    fn odd_integrand_vanishes() {
        let c = band();
        let g = AnnulusGrid::new(c.theta1, c.theta2, 40, 64).unwrap();
        let f = ScalarField::from_fn(&g, |i, j| g.phi[j].sin() * g.theta[i].cos().powi(3));
        assert!(band_integral(&f, &g).unwrap().abs() < 1e-15);
    }

    #[test]
    fn band_integral_rejects_wrong_shape() {
        let c = band();
        let g = AnnulusGrid::new(c.theta1, c.theta2, 16, 16).unwrap();
        let h = AnnulusGrid::new(c.theta1, c.theta2, 16, 32).unwrap();
        let f = ScalarField::zeros(&h);
        assert!(matches!(band_integral(&f, &g), Err(Error::GridMismatch { .. })));
    }

    /// Laplace-Beltrami on the sphere against alpha times the planar Laplacian
    /// of the pulled-back function, both by finite differences.
    #[test]
    fn conformal_factor_relates_laplacians() {
        let f = |phi: f64, theta: f64| (2.0 * theta).sin() * (phi.cos() + 0.3 * (2.0 * phi).sin());
        let (phi0, theta0) = (0.7f64, -0.95f64);
        let sphere_lap = |h: f64| {
            let c = theta0.cos();
            let f_tt = (f(phi0, theta0 + h) - 2.0 * f(phi0, theta0) + f(phi0, theta0 - h)) / (h * h);
            let f_t = (f(phi0, theta0 + h) - f(phi0, theta0 - h)) / (2.0 * h);
            let f_pp = (f(phi0 + h, theta0) - 2.0 * f(phi0, theta0) + f(phi0 - h, theta0)) / (h * h);
            f_tt - theta0.tan() * f_t + f_pp / (c * c)
        };
        let g = |x: f64, y: f64| {
            let p = unproject(PlanePoint { x, y }).unwrap();
            f(p.phi, p.theta)
        };
        let q = project(SpherePoint::new(phi0, theta0).unwrap());
        let plane_lap = |h: f64| {
            (g(q.x + h, q.y) + g(q.x - h, q.y) + g(q.x, q.y + h) + g(q.x, q.y - h) - 4.0 * g(q.x, q.y)) / (h * h)
        };
        let a = alpha(q);
        let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&h| (sphere_lap(h) - a * plane_lap(h * q.radius())).abs())
            .collect();
        assert!(errs[2] < 1e-3, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
    }

    fn band_point() -> impl Strategy<Value = SpherePoint> {
        let c = BandConfig::default();
        (0.0..TAU, c.theta1..=c.theta2).prop_map(|(phi, theta)| SpherePoint { phi, theta })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn projection_roundtrip(p in band_point()) {
            let q = project(p);
            let back = project(unproject(q).unwrap());
            prop_assert!((back.x - q.x).abs() <= 1e-12 && (back.y - q.y).abs() <= 1e-12);
            let p2 = unproject(q).unwrap();
            prop_assert!((p2.theta - p.theta).abs() <= 1e-12);
        }

        #[test]
        fn beta_is_minus_planetary_vorticity(p in band_point(), omega in 0.1f64..5000.0) {
            let b = beta(project(p), omega);
            prop_assert!((b + 2.0 * omega * p.theta.sin()).abs() <= 1e-12 * omega.max(1.0));
        }

        #[test]
        fn alpha_is_inverse_area_factor(p in band_point()) {
            // d(sigma) = cos(theta) dtheta dphi and dx dy = r (dr/dtheta) dtheta dphi
            let r = radius_of_latitude(p.theta);
            let jac = r * r / p.theta.cos();
            prop_assert!((alpha_of_radius(r) * p.theta.cos() - jac).abs() <= 1e-12);
        }

        #[test]
        fn vector_roundtrip(p in band_point(), u in -50.0f64..50.0, v in -50.0f64..50.0) {
            let (bu, bv) = vector_to_plane(u, v, p);
            let (u2, v2) = vector_to_sphere(bu, bv, project(p));
            prop_assert!((u2 - u).abs() <= 1e-12 && (v2 - v).abs() <= 1e-12);
        }
    }
}
