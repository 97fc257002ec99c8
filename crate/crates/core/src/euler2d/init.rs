//! Initial data: zonal states and smooth stream-function perturbations.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{vector_to_plane, BandConfig, SpherePoint};
use crate::grid::{AnnulusGrid, ScalarField, VectorField};
use crate::zonal::ZonalProfile;

/// One term `amplitude sin(j pi s) cos(k phi + phase)` with `s` the normalized latitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationMode {
    pub amplitude: f64,
    pub radial: u32,
    pub azimuthal: u32,
    pub phase: f64,
}

/// Values of a perturbation stream function and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationValue {
    pub xi: f64,
    pub xi_theta: f64,
    pub xi_phi: f64,
    pub xi_theta_theta: f64,
    pub xi_phi_phi: f64,
}

impl PerturbationValue {
    /// Sphere Laplacian `xi_tt - tan(theta) xi_t + xi_pp / cos^2(theta)`.
    pub fn laplacian(&self, theta: f64) -> f64 {
        let c = theta.cos();
        self.xi_theta_theta - theta.tan() * self.xi_theta + self.xi_phi_phi / (c * c)
    }

    /// Eastward and northward velocity `(-xi_theta, xi_phi / cos(theta))`.
    pub fn velocity(&self, theta: f64) -> (f64, f64) {
        (-self.xi_theta, self.xi_phi / theta.cos())
    }
}

/// Smooth stream-function perturbation vanishing on both boundary circles.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPerturbation {
    pub theta1: f64,
    pub theta2: f64,
    pub modes: Vec<PerturbationMode>,
}

impl SmoothPerturbation {
    pub fn new(theta1: f64, theta2: f64, modes: Vec<PerturbationMode>) -> Result<Self> {
        if !(theta1 < theta2) {
            return Err(Error::InvalidParameter("theta1 must be below theta2".into()));
        }
        if modes.iter().any(|m| m.radial == 0 || !m.amplitude.is_finite()) {
            return Err(Error::InvalidParameter(
                "perturbation modes need radial index >= 1".into(),
            ));
        }
        Ok(Self { theta1, theta2, modes })
    }

    /// Single bump `sin(pi s) cos(k phi + phase)` scaled so its peak speed is `speed`.
    pub fn single(theta1: f64, theta2: f64, wavenumber: u32, phase: f64, speed: f64) -> Result<Self> {
        let unit = Self::new(
            theta1,
            theta2,
            vec![PerturbationMode {
                amplitude: 1.0,
                radial: 1,
                azimuthal: wavenumber,
                phase,
            }],
        )?;
        let peak = unit.max_speed();
        let amplitude = if peak > 0.0 { speed / peak } else { 0.0 };
        let mut p = unit;
        p.modes[0].amplitude = amplitude;
        Ok(p)
    }

    /// Random combination of `count` modes with azimuthal wavenumbers in `1..=max_k`.
    pub fn random<R: Rng>(theta1: f64, theta2: f64, count: usize, max_k: u32, rng: &mut R) -> Result<Self> {
        let modes = (0..count)
            .map(|_| PerturbationMode {
                amplitude: rng.gen_range(-1.0..1.0),
                radial: rng.gen_range(1..=4),
                azimuthal: rng.gen_range(1..=max_k.max(1)),
                phase: rng.gen_range(0.0..TAU),
            })
            .collect();
        Self::new(theta1, theta2, modes)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut p = self.clone();
        p.modes.iter_mut().for_each(|m| m.amplitude *= factor);
        p
    }

    pub fn eval(&self, theta: f64, phi: f64) -> PerturbationValue {
        let width = self.theta2 - self.theta1;
        let s = (theta - self.theta1) / width;
        let mut v = PerturbationValue {
            xi: 0.0,
            xi_theta: 0.0,
            xi_phi: 0.0,
            xi_theta_theta: 0.0,
            xi_phi_phi: 0.0,
        };
        for m in &self.modes {
            let kr = m.radial as f64 * PI;
            let (sr, cr) = (kr * s).sin_cos();
            let ka = m.azimuthal as f64;
            let (sa, ca) = (ka * phi + m.phase).sin_cos();
            let a = m.amplitude;
            v.xi += a * sr * ca;
            v.xi_theta += a * kr / width * cr * ca;
            v.xi_theta_theta -= a * (kr / width).powi(2) * sr * ca;
            v.xi_phi -= a * ka * sr * sa;
            v.xi_phi_phi -= a * ka * ka * sr * ca;
        }
        v
    }

    /// Peak speed over a dense latitude and longitude sample.
    pub fn max_speed(&self) -> f64 {
        let mut best: f64 = 0.0;
        for a in 0..=400 {
            let theta = self.theta1 + (self.theta2 - self.theta1) * a as f64 / 400.0;
            for b in 0..720 {
                let phi = TAU * b as f64 / 720.0;
                let (u, v) = self.eval(theta, phi).velocity(theta);
                best = best.max(u.hypot(v));
            }
        }
        best
    }
}

/// Zonal reference state sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalFields {
    /// Stream function per radial index.
    pub psi: Vec<f64>,
    /// Eastward velocity per radial index.
    pub u: Vec<f64>,
    /// Transported vorticity `lambda psi - upsilon` per radial index.
    pub zeta: Vec<f64>,
}

impl ZonalFields {
    pub fn sample(grid: &AnnulusGrid, config: &BandConfig, profile: &ZonalProfile) -> Self {
        let mut psi = Vec::with_capacity(grid.n_rho);
        let mut u = Vec::with_capacity(grid.n_rho);
        for &t in &grid.theta {
            let (p, v) = profile.eval(t);
            psi.push(p);
            u.push(v);
        }
        let zeta = psi.iter().map(|p| config.lambda * p - config.upsilon).collect();
        Self { psi, u, zeta }
    }

    pub fn zeta_field(&self, grid: &AnnulusGrid) -> ScalarField {
        ScalarField::from_fn(grid, |i, _| self.zeta[i])
    }
}

/// Transported vorticity of the zonal state plus a stream-function perturbation.
pub fn perturbed_zeta(grid: &AnnulusGrid, zonal: &ZonalFields, pert: Option<&SmoothPerturbation>) -> ScalarField {
    ScalarField::from_fn(grid, |i, j| {
        let base = zonal.zeta[i];
        match pert {
            Some(p) => base - p.eval(grid.theta[i], grid.phi[j]).laplacian(grid.theta[i]),
            None => base,
        }
    })
}

/// Planar velocity of the zonal state plus a perturbation, from analytic derivatives.
pub fn planar_velocity(grid: &AnnulusGrid, zonal: &ZonalFields, pert: Option<&SmoothPerturbation>) -> VectorField {
    let mut out = VectorField::zeros(grid);
    for i in 0..grid.n_rho {
        let theta = grid.theta[i];
        for j in 0..grid.n_phi {
            let phi = grid.phi[j];
            let (mut u, mut v) = (zonal.u[i], 0.0);
            if let Some(p) = pert {
                let (du, dv) = p.eval(theta, phi).velocity(theta);
                u += du;
                v += dv;
            }
            let (big_u, big_v) = vector_to_plane(u, v, SpherePoint { phi, theta });
            let (s, c) = phi.sin_cos();
            out.radial.set(i, j, big_u * c + big_v * s);
            out.azimuthal.set(i, j, -big_u * s + big_v * c);
        }
    }
    out
}
