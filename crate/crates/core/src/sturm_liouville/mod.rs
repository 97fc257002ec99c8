//! Regular Sturm–Liouville problems `(p y')' + q y = -mu w y + h` on `[a, b]`.
//!
//! Eigenpairs come from a symmetric second-order finite-difference matrix
//! (Sturm bisection plus inverse iteration), Richardson-extrapolated over
//! two grids and checked against Prüfer shooting.

pub mod prufer;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::BandConfig;
use crate::linalg::SymTridiagonal;

pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Separated boundary conditions `alpha y(a) + beta y'(a) = 0`,
/// `gamma y(b) + delta y'(b) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl BoundaryCondition {
    pub const DIRICHLET: Self = Self {
        alpha: 1.0,
        beta: 0.0,
        gamma: 1.0,
        delta: 0.0,
    };

    pub fn is_dirichlet(&self) -> bool {
        self.beta == 0.0 && self.delta == 0.0 && self.alpha != 0.0 && self.gamma != 0.0
    }
}

#[derive(Clone)]
pub struct SLProblem {
    pub a: f64,
    pub b: f64,
    pub p: Coefficient,
    pub q: Coefficient,
    pub w: Coefficient,
    pub h: Option<Coefficient>,
    pub boundary: BoundaryCondition,
}

impl fmt::Debug for SLProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SLProblem")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("forced", &self.h.is_some())
            .field("boundary", &self.boundary)
            .finish()
    }
}

impl SLProblem {
    pub fn new(
        a: f64,
        b: f64,
        p: impl Fn(f64) -> f64 + Send + Sync + 'static,
        q: impl Fn(f64) -> f64 + Send + Sync + 'static,
        w: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            a,
            b,
            p: Arc::new(p),
            q: Arc::new(q),
            w: Arc::new(w),
            h: None,
            boundary: BoundaryCondition::DIRICHLET,
        }
    }

    /// `y'' = -mu y` on `[a, b]` with Dirichlet ends.
    pub fn constant(a: f64, b: f64) -> Self {
        Self::new(a, b, |_| 1.0, |_| 0.0, |_| 1.0)
    }

    /// Homogeneous zonal operator `(y' cos)' = -mu y cos` on a latitude band.
    pub fn zonal(theta1: f64, theta2: f64) -> Self {
        Self::new(theta1, theta2, f64::cos, |_| 0.0, f64::cos)
    }

    pub fn with_forcing(mut self, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.h = Some(Arc::new(h));
        self
    }

    pub fn with_boundary(mut self, boundary: BoundaryCondition) -> Self {
        self.boundary = boundary;
        self
    }

    /// Checks `a < b` and positivity of `p`, `w` on a sample of points.
    pub fn validate(&self) -> Result<()> {
        if !(self.a < self.b) {
            return Err(Error::InvalidParameter(format!(
                "interval [{}, {}] is empty",
                self.a, self.b
            )));
        }
        let bc = self.boundary;
        if (bc.alpha == 0.0 && bc.beta == 0.0) || (bc.gamma == 0.0 && bc.delta == 0.0) {
            return Err(Error::InvalidParameter("degenerate boundary condition".into()));
        }
        for k in 0..=256 {
            let x = self.a + (self.b - self.a) * k as f64 / 256.0;
            if !((self.p)(x) > 0.0 && (self.w)(x) > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "p and w must be positive, failed at x = {x}"
                )));
            }
        }
        Ok(())
    }

    fn forcing_at(&self, x: f64) -> f64 {
        self.h.as_ref().map_or(0.0, |h| h(x))
    }
}

/// Uniform grid on `[a, b]` with `n` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Grid1d {
    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.b
        } else {
            self.a + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }
}

/// Leading eigenpairs of a homogeneous problem.
#[derive(Debug, Clone)]
pub struct SLSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Samples on `grid` including both endpoints, unit norm in the weighted
    /// trapezoid inner product, positive slope at `a`.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub grid: Grid1d,
    /// Weight samples on `grid`.
    pub weight: Vec<f64>,
    /// Largest relative gap between matrix and shooting eigenvalues.
    pub shooting_gap: f64,
}

impl SLSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Weighted trapezoid inner product on the spectrum grid.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        weighted_trapezoid(&self.grid, &self.weight, f, g)
    }
}

fn weighted_trapezoid(grid: &Grid1d, w: &[f64], f: &[f64], g: &[f64]) -> f64 {
    let n = grid.n;
    let mut s = 0.5 * (w[0] * f[0] * g[0] + w[n] * f[n] * g[n]);
    for i in 1..n {
        s += w[i] * f[i] * g[i];
    }
    s * grid.step()
}

/// Symmetrized finite-difference operator for Dirichlet data: interior
/// matrix `W^{-1/2} A W^{-1/2}` and `sqrt(w)` at the interior nodes.
fn fd_operator(prob: &SLProblem, n: usize) -> (SymTridiagonal, Vec<f64>) {
    let grid = Grid1d {
        a: prob.a,
        b: prob.b,
        n,
    };
    let h = grid.step();
    let m = n - 1;
    let p_half: Vec<f64> = (0..n).map(|i| (prob.p)(prob.a + (i as f64 + 0.5) * h)).collect();
    let sqrt_w: Vec<f64> = (1..n).map(|i| (prob.w)(grid.node(i)).sqrt()).collect();
    let mut d = Vec::with_capacity(m);
    let mut e = Vec::with_capacity(m.saturating_sub(1));
    for k in 0..m {
        let i = k + 1;
        let a_ii = (p_half[i - 1] + p_half[i]) / (h * h) - (prob.q)(grid.node(i));
        d.push(a_ii / (sqrt_w[k] * sqrt_w[k]));
        if k + 1 < m {
            e.push(-p_half[i] / (h * h) / (sqrt_w[k] * sqrt_w[k + 1]));
        }
    }
    (SymTridiagonal::new(d, e), sqrt_w)
}

fn require_dirichlet(prob: &SLProblem) -> Result<()> {
    if !prob.boundary.is_dirichlet() {
        return Err(Error::Unsupported(
            "the matrix method handles Dirichlet data only; use prufer for other conditions".into(),
        ));
    }
    Ok(())
}

/// Eigenvectors of `op` as normalized grid functions with boundary zeros.
fn eigenfunctions(op: &SymTridiagonal, sqrt_w: &[f64], grid: &Grid1d, weight: &[f64], mus: &[f64]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(mus.len());
    let mut out = Vec::with_capacity(mus.len());
    for &mu in mus {
        let mut v = op.eigenvector(mu);
        // neighbouring modes are the only ones inverse iteration can mix
        for prev in basis.iter().rev().take(4) {
            let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(prev).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        let mut y = Vec::with_capacity(grid.n + 1);
        y.push(0.0);
        y.extend(v.iter().zip(sqrt_w).map(|(a, s)| a / s));
        y.push(0.0);
        let scale = weighted_trapezoid(grid, weight, &y, &y).sqrt();
        let sign = if y[1] < 0.0 { -1.0 } else { 1.0 };
        y.iter_mut().for_each(|a| *a *= sign / scale);
        basis.push(v);
        out.push(y);
    }
    out
}

const SHOOTING_TOLERANCE: f64 = 1e-6;
const MAX_REFINEMENTS: usize = 3;

/// First `n_max` eigenpairs of a homogeneous Dirichlet problem.
///
/// Eigenvalues are Richardson-extrapolated from grids of `grid_size` and
/// `2 grid_size` intervals and must agree with Prüfer shooting to relative
/// `1e-6`; on disagreement the grid is doubled up to three times.
pub fn eigen_solve(prob: &SLProblem, n_max: usize, grid_size: usize) -> Result<SLSpectrum> {
    prob.validate()?;
    require_dirichlet(prob)?;
    if prob.h.is_some() {
        return Err(Error::InvalidParameter(
            "eigen_solve expects a homogeneous problem".into(),
        ));
    }
    if grid_size < 64 {
        return Err(Error::InvalidParameter(format!(
            "grid_size must be >= 64, got {grid_size}"
        )));
    }
    if n_max == 0 || n_max >= grid_size {
        return Err(Error::InvalidParameter(format!(
            "n_max must lie in 1..{grid_size}, got {n_max}"
        )));
    }
    let mut n = grid_size;
    let mut worst = (0usize, 0.0f64, 0.0f64);
    for _ in 0..=MAX_REFINEMENTS {
        let (coarse, sqrt_w) = fd_operator(prob, n);
        let (fine, _) = fd_operator(prob, 2 * n);
        let coarse_mu: Vec<f64> = (0..n_max).map(|k| coarse.eigenvalue(k)).collect();
        let mus: Vec<f64> = coarse_mu
            .iter()
            .enumerate()
            .map(|(k, mc)| (4.0 * fine.eigenvalue(k) - mc) / 3.0)
            .collect();
        let mut gap: f64 = 0.0;
        let mut ok = true;
        for (k, &mu) in mus.iter().enumerate() {
            let shot = prufer::shoot_eigenvalue(prob, k + 1, mu)?;
            let rel = (shot - mu).abs() / mu.abs().max(1e-300);
            if rel > gap {
                gap = rel;
                worst = (k + 1, mu, shot);
            }
            if rel > SHOOTING_TOLERANCE {
                ok = false;
            }
        }
        // index check: exactly k eigenvalues lie below the midpoint above mu_k
        if ok {
            for k in 0..n_max {
                let upper = if k + 1 < n_max {
                    0.5 * (mus[k] + mus[k + 1])
                } else if k > 0 {
                    mus[k] + 0.5 * (mus[k] - mus[k - 1])
                } else {
                    mus[k] * 1.5 + 1.0
                };
                if prufer::count_below(prob, upper) != k + 1 {
                    ok = false;
                    worst = (k + 1, mus[k], f64::NAN);
                }
            }
        }
        if ok {
            let grid = Grid1d {
                a: prob.a,
                b: prob.b,
                n,
            };
            let weight: Vec<f64> = grid.nodes().iter().map(|&x| (prob.w)(x)).collect();
            let eigenfunctions = eigenfunctions(&coarse, &sqrt_w, &grid, &weight, &coarse_mu);
            return Ok(SLSpectrum {
                eigenvalues: mus,
                eigenfunctions,
                grid,
                weight,
                shooting_gap: gap,
            });
        }
        n *= 2;
    }
    Err(Error::ConvergenceFailure {
        index: worst.0,
        matrix: worst.1,
        shooting: worst.2,
    })
}

/// Every eigenpair of the finite-difference operator on `n` intervals.
///
/// The eigenvalues are the raw discrete ones (no extrapolation), so the
/// expansion in [`solve_inhomogeneous`] reproduces the discrete boundary
/// value problem exactly when all terms are kept.
pub fn grid_spectrum(prob: &SLProblem, n: usize) -> Result<SLSpectrum> {
    prob.validate()?;
    require_dirichlet(prob)?;
    if n < 4 {
        return Err(Error::InvalidParameter("need at least 4 intervals".into()));
    }
    let (op, sqrt_w) = fd_operator(prob, n);
    let mus: Vec<f64> = (0..n - 1).map(|k| op.eigenvalue(k)).collect();
    let grid = Grid1d {
        a: prob.a,
        b: prob.b,
        n,
    };
    let weight: Vec<f64> = grid.nodes().iter().map(|&x| (prob.w)(x)).collect();
    let eigenfunctions = eigenfunctions(&op, &sqrt_w, &grid, &weight, &mus);
    Ok(SLSpectrum {
        eigenvalues: mus,
        eigenfunctions,
        grid,
        weight,
        shooting_gap: f64::NAN,
    })
}

/// Fourth-order derivative of grid samples (one-sided near the ends).
pub fn derivative4(y: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = y.len();
    if n < 5 {
        return Err(Error::TooFewSamples(n));
    }
    let mut d = vec![0.0; n];
    let c = 1.0 / (12.0 * h);
    d[0] = c * (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]);
    d[1] = c * (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]);
    for i in 2..n - 2 {
        d[i] = c * (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]);
    }
    let m = n - 1;
    d[m - 1] = -c * (-3.0 * y[m] - 10.0 * y[m - 1] + 18.0 * y[m - 2] - 6.0 * y[m - 3] + y[m - 4]);
    d[m] = -c * (-25.0 * y[m] + 48.0 * y[m - 1] - 36.0 * y[m - 2] + 16.0 * y[m - 3] - 3.0 * y[m - 4]);
    Ok(d)
}

/// Composite Simpson rule on uniform samples; the last three intervals use
/// the 3/8 rule when the interval count is odd.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    if n == 1 {
        return 0.5 * h * (f[0] + f[1]);
    }
    let simpson_span = |lo: usize, hi: usize| {
        let mut s = f[lo] + f[hi];
        for (k, v) in f[lo + 1..hi].iter().enumerate() {
            s += if k % 2 == 0 { 4.0 * v } else { 2.0 * v };
        }
        s * h / 3.0
    };
    if n % 2 == 0 {
        simpson_span(0, n)
    } else {
        let m = n - 3;
        let tail = 3.0 * h / 8.0 * (f[m] + 3.0 * f[m + 1] + 3.0 * f[m + 2] + f[m + 3]);
        if m == 0 {
            tail
        } else {
            simpson_span(0, m) + tail
        }
    }
}

/// Rayleigh quotient of grid samples `y` on `grid`.
///
/// `(p y y'|_a - p y y'|_b + int (p y'^2 - q y^2)) / int w y^2`, with
/// fourth-order derivatives and Simpson quadrature.
pub fn rayleigh_quotient(prob: &SLProblem, grid: &Grid1d, y: &[f64]) -> Result<f64> {
    if y.len() != grid.n + 1 {
        return Err(Error::InvalidParameter(format!(
            "expected {} samples, got {}",
            grid.n + 1,
            y.len()
        )));
    }
    let h = grid.step();
    let dy = derivative4(y, h)?;
    let x = grid.nodes();
    let den: Vec<f64> = x.iter().zip(y).map(|(&xi, yi)| (prob.w)(xi) * yi * yi).collect();
    let den = simpson(&den, h);
    if !(den >= 1e-14) {
        return Err(Error::ZeroFunction);
    }
    let num: Vec<f64> = (0..=grid.n)
        .map(|i| (prob.p)(x[i]) * dy[i] * dy[i] - (prob.q)(x[i]) * y[i] * y[i])
        .collect();
    let n = grid.n;
    let boundary = (prob.p)(x[0]) * y[0] * dy[0] - (prob.p)(x[n]) * y[n] * dy[n];
    Ok((boundary + simpson(&num, h)) / den)
}

/// Eigenfunction expansion `sum b_k y_k` with `b_k = <h/w, y_k> / (mu - mu_k)`
/// over the first `n_terms` eigenpairs.
pub fn solve_inhomogeneous(prob: &SLProblem, mu: f64, spectrum: &SLSpectrum, n_terms: usize) -> Result<Vec<f64>> {
    if n_terms > spectrum.len() {
        return Err(Error::InvalidParameter(format!(
            "n_terms = {n_terms} exceeds spectrum size {}",
            spectrum.len()
        )));
    }
    for (k, &mu_k) in spectrum.eigenvalues.iter().enumerate() {
        if (mu - mu_k).abs() <= 1e-8 * mu_k.abs().max(1e-300) {
            return Err(Error::ResonantEigenvalue {
                mu,
                index: k + 1,
                eigenvalue: mu_k,
            });
        }
    }
    let x = spectrum.grid.nodes();
    let mut y = vec![0.0; x.len()];
    let Some(h) = prob.h.as_ref() else {
        return Ok(y);
    };
    let h_over_w: Vec<f64> = x.iter().zip(&spectrum.weight).map(|(&xi, wi)| h(xi) / wi).collect();
    for k in 0..n_terms {
        let yk = &spectrum.eigenfunctions[k];
        let b = spectrum.inner(&h_over_w, yk) / (mu - spectrum.eigenvalues[k]);
        y.iter_mut().zip(yk).for_each(|(a, v)| *a += b * v);
    }
    Ok(y)
}

/// Weighted discrete residual of `(p y')' + q y + mu w y - h` at interior
/// nodes, `sqrt(sum dx r^2 / w)`.
pub fn discrete_residual(prob: &SLProblem, mu: f64, grid: &Grid1d, y: &[f64]) -> f64 {
    let dx = grid.step();
    let mut s = 0.0;
    for i in 1..grid.n {
        let x = grid.node(i);
        let pp = (prob.p)(x + 0.5 * dx);
        let pm = (prob.p)(x - 0.5 * dx);
        let w = (prob.w)(x);
        let r = (pp * (y[i + 1] - y[i]) - pm * (y[i] - y[i - 1])) / (dx * dx) + (prob.q)(x) * y[i] + mu * w * y[i]
            - prob.forcing_at(x);
        s += dx * r * r / w;
    }
    s.sqrt()
}

/// Linear function `slope * theta + offset` carrying the boundary values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineShift {
    pub slope: f64,
    pub offset: f64,
}

impl AffineShift {
    pub fn eval(&self, theta: f64) -> f64 {
        self.slope * theta + self.offset
    }
}

/// Zonal problem with homogeneous Dirichlet data.
///
/// Writing `Psi = y + a theta + b` turns the zonal equation into
/// `(y' cos)' + lambda y cos = a sin + [Upsilon - lambda (a theta + b)] cos - omega sin(2 theta)`.
pub fn homogenize_boundary(config: &BandConfig) -> (SLProblem, AffineShift) {
    let (t1, t2) = (config.theta1, config.theta2);
    let slope = (config.psi2 - config.psi1) / (t2 - t1);
    let offset = (t2 * config.psi1 - t1 * config.psi2) / (t2 - t1);
    let shift = AffineShift { slope, offset };
    let (lambda, upsilon, omega) = (config.lambda, config.upsilon, config.omega);
    let prob = SLProblem::zonal(t1, t2).with_forcing(move |t: f64| {
        slope * t.sin() + (upsilon - lambda * shift.eval(t)) * t.cos() - omega * (2.0 * t).sin()
    });
    (prob, shift)
}
