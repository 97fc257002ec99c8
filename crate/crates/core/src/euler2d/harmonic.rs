//! Harmonic stream function of the annulus and its normalized velocity.
//!
//! `psi*(rho) = (rho2 - rho) / L` with `L = log(r2 / r1)` equals one on the
//! inner circle and zero on the outer one. Its velocity `grad_perp psi*` has
//! squared planar norm `N = 2 pi / L`, and `U* = grad_perp psi* / N`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::{AnnulusGrid, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub rho1: f64,
    pub rho2: f64,
    /// `log(r2 / r1)`.
    pub log_ratio: f64,
    /// `(grad_perp psi*, grad_perp psi*)`.
    pub norm_sq: f64,
}

impl Harmonic {
    pub fn new(grid: &AnnulusGrid) -> Result<Self> {
        let log_ratio = grid.log_ratio();
        let norm_sq = TAU / log_ratio;
        if !(norm_sq > 1e-14) || !norm_sq.is_finite() {
            return Err(Error::DegenerateNormalization(norm_sq));
        }
        Ok(Self {
            rho1: grid.rho1(),
            rho2: grid.rho2(),
            log_ratio,
            norm_sq,
        })
    }

    pub fn psi_star(&self, rho: f64) -> f64 {
        (self.rho2 - rho) / self.log_ratio
    }

    /// `d psi* / d rho`.
    pub fn psi_star_rho(&self) -> f64 {
        -1.0 / self.log_ratio
    }

    /// Samples of `psi*` on the grid.
    pub fn psi_star_field(&self, grid: &AnnulusGrid) -> ScalarField {
        let mut f = ScalarField::from_fn(grid, |i, _| self.psi_star(grid.rho[i]));
        // exact boundary values
        f.row_mut(0).iter_mut().for_each(|v| *v = 1.0);
        f.row_mut(grid.n_rho - 1).iter_mut().for_each(|v| *v = 0.0);
        f
    }

    /// Planar `U*`; purely azimuthal with magnitude `1 / (L r N)`.
    pub fn velocity(&self, grid: &AnnulusGrid) -> VectorField {
        let mut u = VectorField::zeros(grid);
        u.azimuthal = ScalarField::from_fn(grid, |i, _| 1.0 / (self.log_ratio * grid.r[i] * self.norm_sq));
        u
    }

    /// Harmonic coefficient `N (U0, U*)` of a planar velocity field.
    pub fn project(&self, u0: &VectorField, grid: &AnnulusGrid) -> Result<f64> {
        Ok(self.norm_sq * u0.inner(&self.velocity(grid), grid)?)
    }

    /// Stream function offset `psi1 - psi2` carried by coefficient `lambda_circ`.
    pub fn boundary_jump(&self, lambda_circ: f64) -> f64 {
        lambda_circ / self.norm_sq
    }
}
