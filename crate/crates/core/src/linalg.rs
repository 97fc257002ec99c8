//! Tridiagonal kernels shared by the one-dimensional solvers.

use crate::error::{Error, Result};

/// Solves a tridiagonal system in place by the Thomas algorithm.
///
/// `lower[0]` and `upper[n-1]` are ignored. Returns the smallest pivot
/// magnitude relative to the largest diagonal entry, so callers can flag
/// ill-conditioned systems.
pub fn thomas_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<f64> {
    let n = diag.len();
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return Ok(1.0);
    }
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);
    let mut c = vec![0.0; n];
    let mut min_pivot = f64::INFINITY;
    let mut pivot = diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = diag[i] - lower[i] * c[i - 1];
            rhs[i] -= lower[i] * rhs[i - 1];
        }
        min_pivot = min_pivot.min(pivot.abs());
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::NonFinite("tridiagonal pivot"));
        }
        c[i] = upper[i] / pivot;
        rhs[i] /= pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(min_pivot / scale)
}

/// Precomputed LU factors of a constant tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    c: Vec<f64>,
}

impl TridiagonalLu {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Option<Self> {
        let n = diag.len();
        let mut c = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for i in 0..n {
            let pivot = if i == 0 { diag[0] } else { diag[i] - lower[i] * c[i - 1] };
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            inv_pivot[i] = 1.0 / pivot;
            c[i] = upper[i] * inv_pivot[i];
        }
        Some(Self {
            lower: lower.to_vec(),
            inv_pivot,
            c,
        })
    }

    pub fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        if n == 0 {
            return;
        }
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c[i] * rhs[i + 1];
        }
    }
}

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (`e[i]` couples rows `i` and `i+1`).
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert_eq!(e.len() + 1, d.len());
        Self { d, e }
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q.abs() < tiny {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.d.len() {
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / q;
            if q.abs() < tiny {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.e[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - left - right);
            hi = hi.max(self.d[i] + left + right);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.dim());
        let (mut lo, mut hi) = self.bounds();
        let span = hi - lo;
        lo -= 1e-12 * span.max(1.0);
        hi += 1e-12 * span.max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Unit eigenvector for an accurate eigenvalue `mu` by inverse iteration.
    pub fn eigenvector(&self, mu: f64) -> Vec<f64> {
        let n = self.dim();
        let scale = self.d.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let shift = mu + 1e-13 * scale;
        let lower: Vec<f64> = std::iter::once(0.0).chain(self.e.iter().copied()).collect();
        let upper: Vec<f64> = self.e.iter().copied().chain(std::iter::once(0.0)).collect();
        let diag: Vec<f64> = self.d.iter().map(|d| d - shift).collect();
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..3 {
            let mut x = v.clone();
            if thomas_solve(&lower, &diag, &upper, &mut x).is_err() {
                let perturbed: Vec<f64> = diag.iter().map(|d| d + 1e-10 * scale).collect();
                x = v.clone();
                let _ = thomas_solve(&lower, &perturbed, &upper, &mut x);
            }
            let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            v = x.iter().map(|a| a / norm).collect();
        }
        v
    }
}
