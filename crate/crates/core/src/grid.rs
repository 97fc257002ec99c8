//! Structured grid on the projected annulus and fields sampled on it.
//!
//! Radial nodes are uniform in `rho = log r` and include both boundary
//! circles; azimuthal nodes are uniform and periodic. Fields are stored
//! row-major with `rho` as the slow index.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{alpha_of_radius, latitude_of_radius, radius_of_latitude};

#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusGrid {
    pub n_rho: usize,
    pub n_phi: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    pub d_rho: f64,
    pub d_phi: f64,
    /// Planar radius per radial index.
    pub r: Vec<f64>,
    /// Latitude per radial index.
    pub theta: Vec<f64>,
    /// Conformal factor per radial index.
    pub alpha: Vec<f64>,
}

impl AnnulusGrid {
    pub fn new(theta1: f64, theta2: f64, n_rho: usize, n_phi: usize) -> Result<Self> {
        if n_rho < 8 || n_phi < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 8 nodes per direction, got {n_rho} x {n_phi}"
            )));
        }
        if !(theta1 < theta2) {
            return Err(Error::InvalidParameter("theta1 must be below theta2".into()));
        }
        let rho1 = radius_of_latitude(theta1).ln();
        let rho2 = radius_of_latitude(theta2).ln();
        let d_rho = (rho2 - rho1) / (n_rho - 1) as f64;
        let rho: Vec<f64> = (0..n_rho)
            .map(|i| if i == n_rho - 1 { rho2 } else { rho1 + i as f64 * d_rho })
            .collect();
        let d_phi = TAU / n_phi as f64;
        let phi = (0..n_phi).map(|j| j as f64 * d_phi).collect();
        let r: Vec<f64> = rho.iter().map(|p| p.exp()).collect();
        let mut theta: Vec<f64> = r.iter().map(|&x| latitude_of_radius(x)).collect();
        theta[0] = theta1;
        theta[n_rho - 1] = theta2;
        let alpha = r.iter().map(|&x| alpha_of_radius(x)).collect();
        Ok(Self {
            n_rho,
            n_phi,
            theta1,
            theta2,
            rho,
            phi,
            d_rho,
            d_phi,
            r,
            theta,
            alpha,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rho, self.n_phi)
    }

    pub fn len(&self) -> usize {
        self.n_rho * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    pub fn rho1(&self) -> f64 {
        self.rho[0]
    }

    pub fn rho2(&self) -> f64 {
        self.rho[self.n_rho - 1]
    }

    /// `log(r2 / r1)`.
    pub fn log_ratio(&self) -> f64 {
        self.rho2() - self.rho1()
    }

    /// Trapezoid weight of radial node `i` in `rho`.
    pub fn rho_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n_rho - 1 {
            0.5 * self.d_rho
        } else {
            self.d_rho
        }
    }

    /// Sphere area carried by one node of radial index `i`.
    pub fn area_weight(&self, i: usize) -> f64 {
        self.rho_weight(i) * self.d_phi * (2.0 * self.rho[i]).exp() / self.alpha[i]
    }

    /// Planar area carried by one node of radial index `i`.
    pub fn plane_weight(&self, i: usize) -> f64 {
        self.rho_weight(i) * self.d_phi * (2.0 * self.rho[i]).exp()
    }

    pub fn check(&self, f: &ScalarField) -> Result<()> {
        if f.shape() != self.shape() {
            return Err(Error::GridMismatch {
                expected: self.shape(),
                got: f.shape(),
            });
        }
        Ok(())
    }
}

/// Scalar samples on an [`AnnulusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n_rho: usize,
    n_phi: usize,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &AnnulusGrid) -> Self {
        Self {
            n_rho: grid.n_rho,
            n_phi: grid.n_phi,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: &AnnulusGrid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.n_rho {
            for j in 0..grid.n_phi {
                data.push(f(i, j));
            }
        }
        Self {
            n_rho: grid.n_rho,
            n_phi: grid.n_phi,
            data,
        }
    }

    pub fn from_vec(n_rho: usize, n_phi: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rho * n_phi {
            return Err(Error::Format(format!(
                "expected {} values, got {}",
                n_rho * n_phi,
                data.len()
            )));
        }
        Ok(Self { n_rho, n_phi, data })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rho, self.n_phi)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_phi + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_phi + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_phi..(i + 1) * self.n_phi]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_phi..(i + 1) * self.n_phi]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Planar velocity in polar components on an [`AnnulusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    /// Component along increasing `r`.
    pub radial: ScalarField,
    /// Component along increasing `phi`.
    pub azimuthal: ScalarField,
}

impl VectorField {
    pub fn zeros(grid: &AnnulusGrid) -> Self {
        Self {
            radial: ScalarField::zeros(grid),
            azimuthal: ScalarField::zeros(grid),
        }
    }

    /// Cartesian components `(U, V)` at node `(i, j)`.
    pub fn cartesian(&self, grid: &AnnulusGrid, i: usize, j: usize) -> (f64, f64) {
        let (s, c) = grid.phi[j].sin_cos();
        let ur = self.radial.get(i, j);
        let up = self.azimuthal.get(i, j);
        (ur * c - up * s, ur * s + up * c)
    }

    /// Planar L2 inner product `iint U . W dx dy`.
    pub fn inner(&self, other: &VectorField, grid: &AnnulusGrid) -> Result<f64> {
        grid.check(&self.radial)?;
        grid.check(&other.radial)?;
        let mut total = 0.0;
        for i in 0..grid.n_rho {
            let mut row = 0.0;
            for j in 0..grid.n_phi {
                row += self.radial.get(i, j) * other.radial.get(i, j)
                    + self.azimuthal.get(i, j) * other.azimuthal.get(i, j);
            }
            total += grid.plane_weight(i) * row;
        }
        Ok(total)
    }
}
