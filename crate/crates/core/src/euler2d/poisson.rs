//! Dirichlet Poisson solver on the annulus.
//!
//! In `rho = log r` the planar Laplacian is `e^{-2 rho} (d_rho^2 + d_phi^2)`.
//! Rows are Fourier transformed in `phi`; each azimuthal mode then solves
//! `psi_rho_rho - m^2 psi = -e^{2 rho} f` with second-order differences and
//! zero boundary values.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{AnnulusGrid, ScalarField};
use crate::linalg::TridiagonalLu;

/// Solution of one Poisson problem with its spectral azimuthal derivative.
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub psi: ScalarField,
    pub psi_phi: ScalarField,
}

pub struct PoissonSolver {
    n_rho: usize,
    n_phi: usize,
    e2rho: Vec<f64>,
    /// Factorizations indexed by `|m|`.
    factors: Vec<TridiagonalLu>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver")
            .field("n_rho", &self.n_rho)
            .field("n_phi", &self.n_phi)
            .finish()
    }
}

/// Signed wavenumber of FFT bin `k`; the Nyquist bin is reported as `n / 2`.
pub(crate) fn wavenumber(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

impl PoissonSolver {
    pub fn new(grid: &AnnulusGrid) -> Result<Self> {
        let (n_rho, n_phi) = grid.shape();
        let interior = n_rho - 2;
        let h2 = grid.d_rho * grid.d_rho;
        let off = vec![1.0 / h2; interior];
        let mut factors = Vec::with_capacity(n_phi / 2 + 1);
        for m in 0..=n_phi / 2 {
            let diag = vec![-2.0 / h2 - (m * m) as f64; interior];
            let lu = TridiagonalLu::new(&off, &diag, &off).ok_or(Error::SingularMode(m))?;
            factors.push(lu);
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n_rho,
            n_phi,
            e2rho: grid.rho.iter().map(|p| (2.0 * p).exp()).collect(),
            factors,
            forward: planner.plan_fft_forward(n_phi),
            inverse: planner.plan_fft_inverse(n_phi),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rho, self.n_phi)
    }

    /// Returns `psi` with discrete `Laplacian psi = -f` and `psi = 0` on both circles.
    pub fn solve(&self, f: &ScalarField) -> Result<ScalarField> {
        Ok(self.solve_with_derivative(f)?.psi)
    }

    /// As [`Self::solve`], also returning the spectral `d psi / d phi`.
    pub fn solve_with_derivative(&self, f: &ScalarField) -> Result<PoissonSolution> {
        let (nr, np) = (self.n_rho, self.n_phi);
        if f.shape() != (nr, np) {
            return Err(Error::GridMismatch {
                expected: (nr, np),
                got: f.shape(),
            });
        }
        if !f.all_finite() {
            return Err(Error::NonFinite("poisson right-hand side"));
        }
        // spectral rows, boundary rows stay zero
        let mut spec = vec![Complex64::new(0.0, 0.0); nr * np];
        for i in 1..nr - 1 {
            let row = &mut spec[i * np..(i + 1) * np];
            for (c, &v) in row.iter_mut().zip(f.row(i)) {
                *c = Complex64::new(-self.e2rho[i] * v, 0.0);
            }
            self.forward.process(row);
        }
        let interior = nr - 2;
        let mut re = vec![0.0; interior];
        let mut im = vec![0.0; interior];
        for k in 0..np {
            let m = wavenumber(k, np).unsigned_abs() as usize;
            for i in 0..interior {
                let c = spec[(i + 1) * np + k];
                re[i] = c.re;
                im[i] = c.im;
            }
            self.factors[m].solve(&mut re);
            self.factors[m].solve(&mut im);
            for i in 0..interior {
                spec[(i + 1) * np + k] = Complex64::new(re[i], im[i]);
            }
        }
        let scale = 1.0 / np as f64;
        let mut psi = vec![0.0; nr * np];
        let mut psi_phi = vec![0.0; nr * np];
        let mut buf = vec![Complex64::new(0.0, 0.0); np];
        for i in 1..nr - 1 {
            let row = &spec[i * np..(i + 1) * np];
            buf.copy_from_slice(row);
            self.inverse.process(&mut buf);
            for (o, c) in psi[i * np..(i + 1) * np].iter_mut().zip(&buf) {
                *o = c.re * scale;
            }
            for (k, c) in buf.iter_mut().enumerate() {
                let m = wavenumber(k, np);
                *c = if 2 * m.unsigned_abs() as usize == np {
                    Complex64::new(0.0, 0.0)
                } else {
                    row[k] * Complex64::new(0.0, m as f64)
                };
            }
            self.inverse.process(&mut buf);
            for (o, c) in psi_phi[i * np..(i + 1) * np].iter_mut().zip(&buf) {
                *o = c.re * scale;
            }
        }
        Ok(PoissonSolution {
            psi: ScalarField::from_vec(nr, np, psi)?,
            psi_phi: ScalarField::from_vec(nr, np, psi_phi)?,
        })
    }
}

/// Second-order `d / d rho`: central inside, one-sided at the two circles.
pub fn rho_derivative(f: &ScalarField, d_rho: f64) -> ScalarField {
    let (nr, np) = f.shape();
    let mut out = ScalarField::from_vec(nr, np, vec![0.0; nr * np]).expect("shape");
    let inv = 1.0 / (2.0 * d_rho);
    for j in 0..np {
        out.set(0, j, (-3.0 * f.get(0, j) + 4.0 * f.get(1, j) - f.get(2, j)) * inv);
        out.set(
            nr - 1,
            j,
            (3.0 * f.get(nr - 1, j) - 4.0 * f.get(nr - 2, j) + f.get(nr - 3, j)) * inv,
        );
    }
    for i in 1..nr - 1 {
        for j in 0..np {
            out.set(i, j, (f.get(i + 1, j) - f.get(i - 1, j)) * inv);
        }
    }
    out
}
