//! Scaled Prüfer-angle shooting for separated boundary conditions.
//!
//! With `y = R sin(t)` and `p y' = S R cos(t)` the angle obeys
//! `t' = S cos^2(t) / p + (q + mu w) sin^2(t) / S`. The scale `S` balances
//! the two terms so the angle advances at the oscillation frequency rather
//! than at rate `mu`. Zeros of `y` sit at multiples of `pi` for any `S`, so the
//! `n`-th eigenvalue is the `mu` at which the angle reaches the right-hand
//! boundary angle plus `(n - 1) pi`.

use std::f64::consts::PI;

use super::SLProblem;
use crate::error::{Error, Result};

/// Angle at `a` fixed by `alpha y(a) + beta y'(a) = 0`, in `[0, pi)`.
fn left_angle(prob: &SLProblem, scale: f64) -> f64 {
    let bc = prob.boundary;
    let t = (-bc.beta * scale).atan2(bc.alpha * (prob.p)(prob.a));
    t.rem_euclid(PI)
}

/// Angle at `b` fixed by `gamma y(b) + delta y'(b) = 0`, in `(0, pi]`.
fn right_angle(prob: &SLProblem, scale: f64) -> f64 {
    let bc = prob.boundary;
    let t = (-bc.delta * scale).atan2(bc.gamma * (prob.p)(prob.b)).rem_euclid(PI);
    if t == 0.0 {
        PI
    } else {
        t
    }
}

/// Largest local `sqrt(|q + mu w| / p)` and `sqrt(p |q + mu w|)` over a coarse sample.
fn frequency_and_scale(mu: f64, prob: &SLProblem) -> (f64, f64) {
    let len = prob.b - prob.a;
    let mut freq: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in 0..=32 {
        let x = prob.a + len * k as f64 / 32.0;
        let pot = (mu * (prob.w)(x) + (prob.q)(x)).abs();
        let p = (prob.p)(x);
        freq = freq.max((pot / p).sqrt());
        scale = scale.max((pot * p).sqrt());
    }
    if !(scale > 1e-8) {
        scale = 1.0;
    }
    (freq, scale)
}

fn steps_for(freq: f64, prob: &SLProblem) -> usize {
    let waves = freq * (prob.b - prob.a) / PI;
    (4000.0f64).max(1000.0 * waves).min(4.0e6) as usize
}

/// Integrator settings held fixed while a root is refined, so the angle is a
/// continuous function of `mu`.
#[derive(Debug, Clone, Copy)]
struct Shooter {
    scale: f64,
    steps: usize,
}

impl Shooter {
    fn for_mu(prob: &SLProblem, mu: f64) -> Self {
        let (freq, scale) = frequency_and_scale(mu, prob);
        Self {
            scale,
            steps: steps_for(freq, prob),
        }
    }

    fn angle(&self, prob: &SLProblem, mu: f64) -> f64 {
        let s0 = self.scale;
        let h = (prob.b - prob.a) / self.steps as f64;
        let rhs = |x: f64, t: f64| {
            let (s, c) = t.sin_cos();
            s0 * c * c / (prob.p)(x) + ((prob.q)(x) + mu * (prob.w)(x)) * s * s / s0
        };
        let mut t = left_angle(prob, s0);
        for k in 0..self.steps {
            let x = prob.a + k as f64 * h;
            let k1 = rhs(x, t);
            let k2 = rhs(x + 0.5 * h, t + 0.5 * h * k1);
            let k3 = rhs(x + 0.5 * h, t + 0.5 * h * k2);
            let k4 = rhs(x + h, t + h * k3);
            t += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        t
    }

    fn excess(&self, prob: &SLProblem, mu: f64) -> f64 {
        self.angle(prob, mu) - right_angle(prob, self.scale)
    }
}

/// Prüfer angle at `b` minus the right boundary angle, for spectral parameter `mu`.
pub fn angle_excess(prob: &SLProblem, mu: f64) -> f64 {
    Shooter::for_mu(prob, mu).excess(prob, mu)
}

/// Number of eigenvalues strictly below `mu`.
pub fn count_below(prob: &SLProblem, mu: f64) -> usize {
    let excess = angle_excess(prob, mu);
    if excess <= 0.0 {
        0
    } else {
        (excess / PI).ceil() as usize
    }
}

/// Refines the `index`-th eigenvalue (1-based) starting from `guess`.
pub fn shoot_eigenvalue(prob: &SLProblem, index: usize, guess: f64) -> Result<f64> {
    assert!(index >= 1);
    let shooter = Shooter::for_mu(prob, guess.abs() * 1.5 + 1.0);
    let target = (index - 1) as f64 * PI;
    let f = |mu: f64| shooter.excess(prob, mu) - target;
    let mut step = 1e-3 * guess.abs().max(1.0);
    let (mut lo, mut hi) = (guess - step, guess + step);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    let mut expansions = 0;
    while flo > 0.0 || fhi < 0.0 {
        step *= 2.0;
        if flo > 0.0 {
            lo -= step;
            flo = f(lo);
        }
        if fhi < 0.0 {
            hi += step;
            fhi = f(hi);
        }
        expansions += 1;
        if expansions > 200 {
            return Err(Error::ConvergenceFailure {
                index,
                matrix: guess,
                shooting: f64::NAN,
            });
        }
    }
    // regula falsi with Illinois modification; the angle is smooth and monotone in mu
    let mut side = 0i8;
    for _ in 0..200 {
        let mid = (lo * fhi - hi * flo) / (fhi - flo);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) <= 1e-14 * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            fhi = fm;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if fm.abs() < 1e-13 {
            return Ok(mid);
        }
    }
    Ok(0.5 * (lo + hi))
}
