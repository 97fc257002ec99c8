//! Semi-Lagrangian transport in `(rho, phi)` coordinates.
//!
//! Characteristics `dX/ds = alpha U` become `rho' = rho_dot`, `phi' = phi_dot`
//! with the computational rates of [`Transport`]. Foot points are traced back
//! with the explicit midpoint rule and the transported field is sampled there
//! with bicubic Lagrange interpolation followed by a [`Limiter`].

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::{AnnulusGrid, ScalarField};

/// Range limiter applied to interpolated values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Limiter {
    /// Clip to the range of the 4x4 interpolation stencil.
    Local,
    /// Clip to a fixed range, normally that of the initial field.
    #[default]
    Global,
    /// No clipping.
    None,
}

impl std::fmt::Display for Limiter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Limiter::Local => "local",
            Limiter::Global => "global",
            Limiter::None => "none",
        })
    }
}

impl std::str::FromStr for Limiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Limiter::Local),
            "global" => Ok(Limiter::Global),
            "none" => Ok(Limiter::None),
            other => Err(Error::InvalidParameter(format!("unknown limiter {other:?}"))),
        }
    }
}

/// Coordinate rates `d rho / dt` and `d phi / dt` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Transport {
    pub rho_dot: ScalarField,
    pub phi_dot: ScalarField,
}

impl Transport {
    pub fn zeros(grid: &AnnulusGrid) -> Self {
        Self {
            rho_dot: ScalarField::zeros(grid),
            phi_dot: ScalarField::zeros(grid),
        }
    }

    /// Pointwise mean of two transports.
    pub fn average(&self, other: &Transport) -> Transport {
        let mix = |a: &ScalarField, b: &ScalarField| {
            let (nr, np) = a.shape();
            let data = a.data.iter().zip(&b.data).map(|(x, y)| 0.5 * (x + y)).collect();
            ScalarField::from_vec(nr, np, data).expect("shape")
        };
        Transport {
            rho_dot: mix(&self.rho_dot, &other.rho_dot),
            phi_dot: mix(&self.phi_dot, &other.phi_dot),
        }
    }

    /// Largest directional Courant number `max(|rho_dot| dt / d_rho, |phi_dot| dt / d_phi)`.
    pub fn courant(&self, grid: &AnnulusGrid, dt: f64) -> f64 {
        let cr = self.rho_dot.max_abs() * dt.abs() / grid.d_rho;
        let cp = self.phi_dot.max_abs() * dt.abs() / grid.d_phi;
        cr.max(cp)
    }

    /// Largest step keeping the Courant number at `target`.
    pub fn stable_dt(&self, grid: &AnnulusGrid, target: f64) -> f64 {
        let rate = (self.rho_dot.max_abs() / grid.d_rho).max(self.phi_dot.max_abs() / grid.d_phi);
        if rate > 0.0 {
            target / rate
        } else {
            f64::INFINITY
        }
    }
}

/// Cubic Lagrange weights on nodes 0..3 at offset `x`.
#[inline]
fn cubic_weights(x: f64) -> [f64; 4] {
    let (a, b, c, d) = (x, x - 1.0, x - 2.0, x - 3.0);
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

/// Stencil of a point on the grid: radial start row and weights, azimuthal
/// columns and weights.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    i0: usize,
    wr: [f64; 4],
    cols: [usize; 4],
    wp: [f64; 4],
}

/// Rounds fractional indices that sit on a node up to round-off, so node
/// samples are reproduced exactly.
#[inline]
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r
    } else {
        x
    }
}

impl Stencil {
    fn at(grid: &AnnulusGrid, rho: f64, phi: f64) -> Self {
        let p = snap((rho - grid.rho[0]) / grid.d_rho);
        let top = grid.n_rho - 4;
        let i0 = ((p.floor() as i64) - 1).clamp(0, top as i64) as usize;
        let wr = cubic_weights(p - i0 as f64);
        let q = snap(phi.rem_euclid(TAU) / grid.d_phi);
        let base = q.floor() as i64 - 1;
        let n = grid.n_phi as i64;
        let cols = [0, 1, 2, 3].map(|k| (base + k).rem_euclid(n) as usize);
        let wp = cubic_weights(q - base as f64);
        Self { i0, wr, cols, wp }
    }

    fn eval(&self, f: &ScalarField) -> f64 {
        let mut total = 0.0;
        for (a, &w) in self.wr.iter().enumerate() {
            let row = f.row(self.i0 + a);
            let s: f64 = self.cols.iter().zip(&self.wp).map(|(&c, &v)| v * row[c]).sum();
            total += w * s;
        }
        total
    }

    fn eval_clipped(&self, f: &ScalarField) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut total = 0.0;
        for (a, &w) in self.wr.iter().enumerate() {
            let row = f.row(self.i0 + a);
            let mut s = 0.0;
            for (&c, &v) in self.cols.iter().zip(&self.wp) {
                let x = row[c];
                lo = lo.min(x);
                hi = hi.max(x);
                s += v * x;
            }
            total += w * s;
        }
        total.clamp(lo, hi)
    }
}

/// Unclipped bicubic interpolation of `f` at `(rho, phi)`.
pub fn interpolate(grid: &AnnulusGrid, f: &ScalarField, rho: f64, phi: f64) -> f64 {
    Stencil::at(grid, rho, phi).eval(f)
}

/// Foot points of all nodes for one step of length `dt`.
#[derive(Debug, Clone)]
pub struct Feet {
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    /// Number of radial coordinates clamped back onto a boundary circle.
    pub clamped: u64,
}

/// Traces every node back over `dt` with the midpoint rule in `velocity`.
pub fn trace_feet(grid: &AnnulusGrid, velocity: &Transport, dt: f64) -> Feet {
    let (nr, np) = grid.shape();
    let (lo, hi) = (grid.rho[0], grid.rho[nr - 1]);
    let mut rho = Vec::with_capacity(nr * np);
    let mut phi = Vec::with_capacity(nr * np);
    let mut clamped = 0u64;
    let mut clamp = |x: f64| {
        if x < lo {
            clamped += 1;
            lo
        } else if x > hi {
            clamped += 1;
            hi
        } else {
            x
        }
    };
    for i in 0..nr {
        for j in 0..np {
            let (r0, p0) = (grid.rho[i], grid.phi[j]);
            let rm = clamp(r0 - 0.5 * dt * velocity.rho_dot.get(i, j));
            let pm = p0 - 0.5 * dt * velocity.phi_dot.get(i, j);
            let st = Stencil::at(grid, rm, pm);
            let rf = clamp(r0 - dt * st.eval(&velocity.rho_dot));
            let pf = (p0 - dt * st.eval(&velocity.phi_dot)).rem_euclid(TAU);
            rho.push(rf);
            phi.push(pf);
        }
    }
    Feet { rho, phi, clamped }
}

/// Midpoint-rule foot of an arbitrary point, without boundary clamping.
pub fn trace_point(grid: &AnnulusGrid, velocity: &Transport, rho: f64, phi: f64, dt: f64) -> (f64, f64) {
    let st = Stencil::at(grid, rho, phi);
    let rm = rho - 0.5 * dt * st.eval(&velocity.rho_dot);
    let pm = phi - 0.5 * dt * st.eval(&velocity.phi_dot);
    let st = Stencil::at(grid, rm, pm);
    (
        rho - dt * st.eval(&velocity.rho_dot),
        phi - dt * st.eval(&velocity.phi_dot),
    )
}

/// Samples `field` at the feet with bicubic interpolation and `limiter`;
/// `bounds` is the range used by [`Limiter::Global`].
pub fn sample_at_feet(
    grid: &AnnulusGrid,
    field: &ScalarField,
    feet: &Feet,
    limiter: Limiter,
    bounds: [f64; 2],
) -> ScalarField {
    let (nr, np) = grid.shape();
    let [lo, hi] = bounds;
    let data = feet
        .rho
        .iter()
        .zip(&feet.phi)
        .map(|(&r, &p)| {
            let st = Stencil::at(grid, r, p);
            match limiter {
                Limiter::Local => st.eval_clipped(field),
                Limiter::Global => st.eval(field).clamp(lo, hi),
                Limiter::None => st.eval(field),
            }
        })
        .collect();
    ScalarField::from_vec(nr, np, data).expect("shape")
}

/// One semi-Lagrangian step of `field` in `velocity`, with the Courant check.
/// `bounds` is the clipping range of [`Limiter::Global`].
///
/// Returns the advected field and the number of clamp events.
pub fn advect(
    grid: &AnnulusGrid,
    field: &ScalarField,
    velocity: &Transport,
    dt: f64,
    courant_limit: f64,
    limiter: Limiter,
    bounds: [f64; 2],
) -> Result<(ScalarField, u64)> {
    grid.check(field)?;
    let courant = velocity.courant(grid, dt);
    if !courant.is_finite() {
        return Err(Error::NonFinite("transport velocity"));
    }
    if courant > courant_limit {
        return Err(Error::CflViolation {
            courant,
            limit: courant_limit,
            suggested_dt: dt.abs() * courant_limit / courant,
        });
    }
    let feet = trace_feet(grid, velocity, dt);
    Ok((sample_at_feet(grid, field, &feet, limiter, bounds), feet.clamped))
}
