//! Zonal steady states `Psi(theta)` of
//! `(Psi' cos)' = -lambda Psi cos + Upsilon cos - omega sin(2 theta)`
//! with `Psi(theta1) = psi1`, `Psi(theta2) = psi2`.

mod export;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BandConfig;
use crate::linalg::{thomas_solve, SymTridiagonal};
use crate::sturm_liouville::{self, homogenize_boundary, SLProblem};

pub use export::{read_profile_csv, write_profile_csv, write_profile_svg, ProfileRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    FiniteDifference,
    Picard,
    SlExpansion,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ClosedForm => "closed_form",
            Method::FiniteDifference => "finite_difference",
            Method::Picard => "picard",
            Method::SlExpansion => "sl_expansion",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_form" => Ok(Method::ClosedForm),
            "finite_difference" | "fd" => Ok(Method::FiniteDifference),
            "picard" => Ok(Method::Picard),
            "sl_expansion" => Ok(Method::SlExpansion),
            other => Err(Error::InvalidParameter(format!("unknown zonal method `{other}`"))),
        }
    }
}

/// Samples of a zonal stream function and its velocity `u = -Psi'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalProfile {
    /// Ascending latitudes in radians, first and last on the boundaries.
    pub thetas: Vec<f64>,
    pub psi: Vec<f64>,
    pub u: Vec<f64>,
    /// `u * u_scale` in m/s.
    pub u_dimensional: Vec<f64>,
    pub method: Method,
    pub u_scale: f64,
}

impl ZonalProfile {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    fn bracket(&self, theta: f64) -> usize {
        let k = self.thetas.partition_point(|&t| t <= theta);
        k.clamp(1, self.thetas.len() - 1) - 1
    }

    /// Cubic Hermite interpolation of `(Psi, u)` at `theta`.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let k = self.bracket(theta);
        let (t0, t1) = (self.thetas[k], self.thetas[k + 1]);
        let h = t1 - t0;
        let s = (theta - t0) / h;
        let (p0, p1) = (self.psi[k], self.psi[k + 1]);
        let (d0, d1) = (-self.u[k] * h, -self.u[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let psi =
            (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * d1;
        let dpsi = ((6.0 * s2 - 6.0 * s) * p0
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (-6.0 * s2 + 6.0 * s) * p1
            + (3.0 * s2 - 2.0 * s) * d1)
            / h;
        (psi, -dpsi)
    }

    /// Largest `|u|` over the samples.
    pub fn max_speed(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn with_velocity(thetas: Vec<f64>, psi: Vec<f64>, u: Vec<f64>, method: Method, u_scale: f64) -> Self {
        let u_dimensional = u.iter().map(|v| v * u_scale).collect();
        Self {
            thetas,
            psi,
            u,
            u_dimensional,
            method,
            u_scale,
        }
    }
}

/// Homogeneous solution with `eta' cos = 1`, i.e. `artanh(sin theta)`.
pub fn eta(theta: f64) -> f64 {
    theta.sin().atanh()
}

/// Particular solution of the `lambda = 0` problem and its derivatives.
fn particular(config: &BandConfig, theta: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    let (y, w) = (config.upsilon, config.omega);
    let sec = 1.0 / c;
    let tan = s * sec;
    [
        -y * c.ln() + w * s - 0.5 * w * s.atanh(),
        y * tan + w * c - 0.5 * w * sec,
        y * sec * sec - w * s - 0.5 * w * sec * tan,
    ]
}

/// Closed-form `lambda = 0` zonal state.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm {
    config: BandConfig,
    zeta1: f64,
    zeta2: f64,
    eta1: f64,
    eta2: f64,
    /// Coefficient of `eta` in `Psi = zeta + c1 eta + c2`.
    pub c1: f64,
    pub c2: f64,
}

impl ClosedForm {
    pub fn new(config: &BandConfig) -> Result<Self> {
        config.validate()?;
        if config.lambda != 0.0 {
            return Err(Error::LambdaNotZero(config.lambda));
        }
        let zeta1 = particular(config, config.theta1)[0];
        let zeta2 = particular(config, config.theta2)[0];
        let (eta1, eta2) = (eta(config.theta1), eta(config.theta2));
        // psi(theta_i) = zeta_i + c1 eta_i + c2
        let c1 = (config.psi2 - config.psi1 - zeta2 + zeta1) / (eta2 - eta1);
        let c2 = config.psi1 - zeta1 - c1 * eta1;
        Ok(Self {
            config: *config,
            zeta1,
            zeta2,
            eta1,
            eta2,
            c1,
            c2,
        })
    }

    /// `(Psi, Psi', Psi'')` at `theta`.
    pub fn eval(&self, theta: f64) -> [f64; 3] {
        let [z, dz, d2z] = particular(&self.config, theta);
        let s = (eta(theta) - self.eta1) / (self.eta2 - self.eta1);
        let cfg = &self.config;
        // boundary-exact arrangement of zeta + c1 eta + c2
        let psi = cfg.psi1 * (1.0 - s) + cfg.psi2 * s + (z - self.zeta1 * (1.0 - s) - self.zeta2 * s);
        let c = theta.cos();
        let d_eta = 1.0 / c;
        let d2_eta = theta.tan() / c;
        [psi, dz + self.c1 * d_eta, d2z + self.c1 * d2_eta]
    }
}

/// Pointwise residual of the zonal equation given `(Psi, Psi', Psi'')`.
pub fn ode_residual(config: &BandConfig, theta: f64, psi: [f64; 3]) -> f64 {
    let (s, c) = theta.sin_cos();
    psi[2] * c - psi[1] * s + config.lambda * psi[0] * c - config.upsilon * c + config.omega * (2.0 * theta).sin()
}

fn uniform_thetas(config: &BandConfig, n: usize) -> Vec<f64> {
    let h = (config.theta2 - config.theta1) / n as f64;
    (0..=n)
        .map(|i| {
            if i == n {
                config.theta2
            } else {
                config.theta1 + i as f64 * h
            }
        })
        .collect()
}

fn check_common(config: &BandConfig, n: usize) -> Result<()> {
    config.validate()?;
    if n < 4 {
        return Err(Error::TooFewSamples(n + 1));
    }
    Ok(())
}

/// Closed-form profile on `n` uniform intervals; `u` is analytic.
pub fn solve_closed_form_lambda0(config: &BandConfig, n: usize) -> Result<ZonalProfile> {
    let form = ClosedForm::new(config)?;
    check_common(config, n)?;
    let thetas = uniform_thetas(config, n);
    let mut psi = Vec::with_capacity(n + 1);
    let mut u = Vec::with_capacity(n + 1);
    for &t in &thetas {
        let [p, dp, _] = form.eval(t);
        psi.push(p);
        u.push(-dp);
    }
    psi[0] = config.psi1;
    psi[n] = config.psi2;
    Ok(ZonalProfile::with_velocity(
        thetas,
        psi,
        u,
        Method::ClosedForm,
        config.u_scale,
    ))
}

/// Relative pivot below which the finite-difference system counts as singular.
const PIVOT_FLOOR: f64 = 1e-13;

/// Second-order finite-difference solution on `n` uniform intervals.
pub fn solve_fd(config: &BandConfig, n: usize) -> Result<ZonalProfile> {
    check_common(config, n)?;
    let thetas = uniform_thetas(config, n);
    let h = (config.theta2 - config.theta1) / n as f64;
    if config.lambda > 0.0 {
        check_spectral_distance(config, n)?;
    }
    let m = n - 1;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for k in 0..m {
        let t = thetas[k + 1];
        let pm = (t - 0.5 * h).cos() / (h * h);
        let pp = (t + 0.5 * h).cos() / (h * h);
        let c = t.cos();
        lower[k] = pm;
        upper[k] = pp;
        diag[k] = -(pm + pp) + config.lambda * c;
        rhs[k] = config.upsilon * c - config.omega * (2.0 * t).sin();
        if k == 0 {
            rhs[k] -= pm * config.psi1;
        }
        if k == m - 1 {
            rhs[k] -= pp * config.psi2;
        }
    }
    let min_pivot = thomas_solve(&lower, &diag, &upper, &mut rhs)?;
    if min_pivot < PIVOT_FLOOR {
        return Err(Error::NearEigenvalue {
            lambda: config.lambda,
            eigenvalue: f64::NAN,
        });
    }
    let mut psi = Vec::with_capacity(n + 1);
    psi.push(config.psi1);
    psi.extend(rhs);
    psi.push(config.psi2);
    let u = velocity(&thetas, &psi)?;
    Ok(ZonalProfile::with_velocity(
        thetas,
        psi,
        u,
        Method::FiniteDifference,
        config.u_scale,
    ))
}

fn check_spectral_distance(config: &BandConfig, n: usize) -> Result<()> {
    let h = (config.theta2 - config.theta1) / n as f64;
    let d: Vec<f64> = (1..n)
        .map(|i| {
            let t = config.theta1 + i as f64 * h;
            ((t - 0.5 * h).cos() + (t + 0.5 * h).cos()) / (h * h * t.cos())
        })
        .collect();
    let e: Vec<f64> = (1..n - 1)
        .map(|i| {
            let t = config.theta1 + i as f64 * h;
            -(t + 0.5 * h).cos() / (h * h * (t.cos() * (t + h).cos()).sqrt())
        })
        .collect();
    let op = SymTridiagonal::new(d, e);
    let k = op.count_below(config.lambda);
    for idx in [k.checked_sub(1), Some(k)].into_iter().flatten() {
        if idx < op.dim() {
            let ev = op.eigenvalue(idx);
            if (ev - config.lambda).abs() <= 1e-8 * ev.abs() {
                return Err(Error::NearEigenvalue {
                    lambda: config.lambda,
                    eigenvalue: ev,
                });
            }
        }
    }
    Ok(())
}

/// Backward error of a profile on a uniform grid: discrete residual of the
/// zonal equation relative to the size of the terms that produce it.
pub fn fd_backward_error(config: &BandConfig, profile: &ZonalProfile) -> f64 {
    let n = profile.len() - 1;
    let h = (config.theta2 - config.theta1) / n as f64;
    let mut worst: f64 = 0.0;
    for i in 1..n {
        let t = profile.thetas[i];
        let pm = (t - 0.5 * h).cos() / (h * h);
        let pp = (t + 0.5 * h).cos() / (h * h);
        let c = t.cos();
        let (a, b, d) = (profile.psi[i - 1], profile.psi[i], profile.psi[i + 1]);
        let f = config.upsilon * c - config.omega * (2.0 * t).sin();
        let r = pm * a - (pm + pp) * b + pp * d + config.lambda * c * b - f;
        let scale = pm * a.abs() + (pm + pp) * b.abs() + pp * d.abs() + (config.lambda * c * b).abs() + f.abs();
        worst = worst.max(r.abs() / scale.max(f64::MIN_POSITIVE));
    }
    worst
}

/// Convergence record of [`solve_picard`].
#[derive(Debug, Clone, PartialEq)]
pub struct PicardStats {
    pub iterations: usize,
    /// `2 |lambda| (t2 - t1)^2`.
    pub contraction_bound: f64,
    /// Sup-norm change produced by each application of the map.
    pub increments: Vec<f64>,
}

/// Picard iteration in `t = -log r`, where the problem reads
/// `u'' = (Upsilon - lambda u) / cosh^2 t + 2 omega sinh t / cosh^3 t`,
/// `u(t1) = psi2`, `u(t2) = psi1`.
///
/// The iterate is `u = psi2 + m (t - t1) + int_{t1}^{t} (t - s) g(s, u(s)) ds`
/// with `m` fixed by the right boundary value; both integrals use the
/// cumulative trapezoid rule on `n` uniform intervals.
pub fn solve_picard(config: &BandConfig, n: usize, tol: f64, max_iter: usize) -> Result<(ZonalProfile, PicardStats)> {
    check_common(config, n)?;
    let t1 = -config.r2().ln();
    let t2 = -config.r1().ln();
    let lambda = config.lambda;
    let ratio = config.r2() / config.r1();
    let limit = if lambda == 0.0 {
        f64::INFINITY
    } else {
        (1.0 / (2.0 * lambda.abs()).sqrt()).exp()
    };
    if ratio > limit {
        return Err(Error::ContractionViolated { ratio, limit });
    }
    let contraction_bound = 2.0 * lambda.abs() * (t2 - t1) * (t2 - t1);
    let h = (t2 - t1) / n as f64;
    let ts: Vec<f64> = (0..=n).map(|i| if i == n { t2 } else { t1 + i as f64 * h }).collect();
    let sech2: Vec<f64> = ts.iter().map(|t| 1.0 / t.cosh().powi(2)).collect();
    let forcing: Vec<f64> = ts
        .iter()
        .zip(&sech2)
        .map(|(t, s2)| config.upsilon * s2 + 2.0 * config.omega * t.tanh() * s2)
        .collect();

    // returns (u, u_t) for a given source g
    let apply = |g: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut i0 = vec![0.0; n + 1];
        let mut i1 = vec![0.0; n + 1];
        for k in 1..=n {
            i0[k] = i0[k - 1] + 0.5 * h * (g[k - 1] + g[k]);
            i1[k] = i1[k - 1] + 0.5 * h * (ts[k - 1] * g[k - 1] + ts[k] * g[k]);
        }
        let total = t2 * i0[n] - i1[n];
        let slope = (config.psi1 - config.psi2 - total) / (t2 - t1);
        let u: Vec<f64> = (0..=n)
            .map(|k| config.psi2 + slope * (ts[k] - t1) + ts[k] * i0[k] - i1[k])
            .collect();
        let ut: Vec<f64> = (0..=n).map(|k| slope + i0[k]).collect();
        (u, ut)
    };

    let mut u: Vec<f64> = ts
        .iter()
        .map(|t| config.psi2 + (config.psi1 - config.psi2) * (t - t1) / (t2 - t1))
        .collect();
    let mut ut = vec![0.0; n + 1];
    let mut increments = Vec::new();
    let mut iterations = 0;
    loop {
        let g: Vec<f64> = (0..=n).map(|k| forcing[k] - lambda * u[k] * sech2[k]).collect();
        let (next, next_t) = apply(&g);
        let inc = next.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        increments.push(inc);
        u = next;
        ut = next_t;
        iterations += 1;
        if lambda == 0.0 || inc <= tol {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::MaxIterExceeded {
                iterations,
                increment: inc,
            });
        }
    }
    // back to ascending latitude: theta = -asin(tanh t) decreases with t
    let mut thetas = Vec::with_capacity(n + 1);
    let mut psi = Vec::with_capacity(n + 1);
    let mut vel = Vec::with_capacity(n + 1);
    for k in (0..=n).rev() {
        let theta = (-ts[k].tanh()).asin();
        // u_t = -cos(theta) Psi', so -Psi' = u_t / cos(theta)
        thetas.push(theta);
        psi.push(u[k]);
        vel.push(ut[k] / theta.cos());
    }
    thetas[0] = config.theta1;
    thetas[n] = config.theta2;
    psi[0] = config.psi1;
    psi[n] = config.psi2;
    let profile = ZonalProfile::with_velocity(thetas, psi, vel, Method::Picard, config.u_scale);
    Ok((
        profile,
        PicardStats {
            iterations,
            contraction_bound,
            increments,
        },
    ))
}

/// Eigenfunction-expansion solution using the full discrete spectrum on
/// `n` intervals of the homogenized problem.
pub fn solve_sl_expansion(config: &BandConfig, n: usize) -> Result<ZonalProfile> {
    check_common(config, n)?;
    let (prob, shift) = homogenize_boundary(config);
    let spectrum = sturm_liouville::grid_spectrum(&SLProblem::zonal(config.theta1, config.theta2), n)?;
    let y = sturm_liouville::solve_inhomogeneous(&prob, config.lambda, &spectrum, spectrum.len())?;
    let thetas = spectrum.grid.nodes();
    let mut psi: Vec<f64> = thetas.iter().zip(&y).map(|(&t, v)| v + shift.eval(t)).collect();
    psi[0] = config.psi1;
    psi[n] = config.psi2;
    let u = velocity(&thetas, &psi)?;
    Ok(ZonalProfile::with_velocity(
        thetas,
        psi,
        u,
        Method::SlExpansion,
        config.u_scale,
    ))
}

/// Dispatches to the solver named by `method`.
pub fn solve(config: &BandConfig, method: Method, n: usize) -> Result<ZonalProfile> {
    match method {
        Method::ClosedForm => solve_closed_form_lambda0(config, n),
        Method::FiniteDifference => solve_fd(config, n),
        Method::Picard => solve_picard(config, n, 1e-12, 500).map(|(p, _)| p),
        Method::SlExpansion => solve_sl_expansion(config, n),
    }
}

/// Weights of the first derivative at `x0` for nodes `xs` (Fornberg).
fn fornberg_first(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// `-dPsi/dtheta` by five-point stencils (centred inside, one-sided at the ends).
fn velocity(thetas: &[f64], psi: &[f64]) -> Result<Vec<f64>> {
    let n = thetas.len();
    if n < 5 || psi.len() != n {
        return Err(Error::TooFewSamples(n.min(psi.len())));
    }
    Ok((0..n)
        .map(|i| {
            let start = i.saturating_sub(2).min(n - 5);
            let xs = &thetas[start..start + 5];
            let w = fornberg_first(thetas[i], xs);
            -w.iter().zip(&psi[start..start + 5]).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect())
}

/// Recomputes `u` and `u_dimensional` from `psi` by fourth-order differences.
pub fn velocity_profile(profile: &ZonalProfile) -> Result<ZonalProfile> {
    let u = velocity(&profile.thetas, &profile.psi)?;
    Ok(ZonalProfile::with_velocity(
        profile.thetas.clone(),
        profile.psi.clone(),
        u,
        profile.method,
        profile.u_scale,
    ))
}

/// Richardson extrapolation `(4 fine - coarse) / 3` on the coarse nodes,
/// for two profiles of a second-order method on nested grids.
pub fn richardson(coarse: &ZonalProfile, fine: &ZonalProfile) -> Result<ZonalProfile> {
    let n = coarse.len() - 1;
    if fine.len() != 2 * n + 1 {
        return Err(Error::InvalidParameter(
            "fine profile must have twice the intervals".into(),
        ));
    }
    let mut psi = Vec::with_capacity(n + 1);
    let mut u = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let tc = coarse.thetas[i];
        let tf = fine.thetas[2 * i];
        if (tc - tf).abs() > 1e-12 * tc.abs().max(1.0) {
            return Err(Error::InvalidParameter("profiles are not nested".into()));
        }
        psi.push((4.0 * fine.psi[2 * i] - coarse.psi[i]) / 3.0);
        u.push((4.0 * fine.u[2 * i] - coarse.u[i]) / 3.0);
    }
    Ok(ZonalProfile::with_velocity(
        coarse.thetas.clone(),
        psi,
        u,
        coarse.method,
        coarse.u_scale,
    ))
}

/// Largest `|a - b|` in `Psi` with `b` interpolated at the nodes of `a`.
pub fn sup_difference(a: &ZonalProfile, b: &ZonalProfile) -> f64 {
    a.thetas
        .iter()
        .zip(&a.psi)
        .fold(0.0f64, |m, (&t, &p)| m.max((p - b.eval(t).0).abs()))
}

#[cfg(test)]
mod tests;
