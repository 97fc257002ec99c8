//! Vorticity transport on the projected annulus.
//!
//! The transported quantity is `zeta = alpha xi + beta`, where `xi` is the
//! planar vorticity and `beta = -2 omega sin(theta)`. On the sphere this is
//! `zeta = -(Laplacian psi + 2 omega sin(theta))`: the projection reverses
//! orientation, so `zeta` is minus the absolute vorticity. For a zonal state
//! `zeta = lambda Psi - upsilon`.
//!
//! The sphere stream function is `psi = G xi + (lambda_circ / N) psi* + psi2`,
//! with `G` the Dirichlet inverse of `-Laplacian` and `psi*` the harmonic
//! profile of [`harmonic`]. The coefficient `lambda_circ` is fixed each step
//! so that the circulation around the inner circle keeps its initial value.
//!
//! Each step is a semi-Lagrangian predictor-corrector: advect with the
//! current velocity, rebuild the velocity from the prediction, then trace
//! back in the average of the two and advect again.

pub mod advect;
pub mod checkpoint;
pub mod harmonic;
pub mod init;
pub mod poisson;

use crate::error::{Error, Result};
use crate::geometry::{beta_of_radius, BandConfig};
pub use crate::grid::{AnnulusGrid, ScalarField, VectorField};

pub use advect::{Limiter, Transport};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader};
pub use harmonic::Harmonic;
pub use init::{PerturbationMode, PerturbationValue, SmoothPerturbation, ZonalFields};
pub use poisson::PoissonSolver;

/// Default Courant limit for the transport step.
pub const DEFAULT_COURANT_LIMIT: f64 = 0.8;

/// Snapshot of the simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub zeta: ScalarField,
    pub lambda_circ: f64,
    pub config: BandConfig,
    pub grid: AnnulusGrid,
    /// Circulations `[inner, outer]` fixed at the initial time.
    pub circ_targets: [f64; 2],
    /// Range of the initial vorticity, used by [`Limiter::Global`].
    pub zeta_bounds: [f64; 2],
    pub steps: u64,
    /// Radial foot points clamped onto a boundary circle so far.
    pub clamp_events: u64,
}

impl SimState {
    /// Planar vorticity `xi = (zeta - beta) / alpha`.
    pub fn xi(&self) -> ScalarField {
        xi_of(&self.grid, &self.config, &self.zeta)
    }

    pub fn max_xi(&self) -> f64 {
        self.xi().max_abs()
    }

    pub fn checkpoint_header(&self) -> CheckpointHeader {
        CheckpointHeader {
            n_rho: self.grid.n_rho,
            n_phi: self.grid.n_phi,
            theta1: self.grid.theta1,
            theta2: self.grid.theta2,
            omega: self.config.omega,
            t: self.t,
            lambda_circ: self.lambda_circ,
        }
    }
}

fn xi_of(grid: &AnnulusGrid, config: &BandConfig, zeta: &ScalarField) -> ScalarField {
    ScalarField::from_fn(grid, |i, j| {
        let beta = beta_of_radius(grid.r[i], config.omega);
        (zeta.get(i, j) - beta) / grid.alpha[i]
    })
}

/// Constants `(A, B)` of the bound `|xi| <= A ||zeta0||_inf + B`.
pub fn transport_bound_constants(config: &BandConfig) -> (f64, f64) {
    let r1 = config.r1();
    let s = 1.0 + r1 * r1;
    (4.0 / (s * s), 8.0 * config.omega * (1.0 - r1 * r1) / (s * s * s))
}

/// Stream function and its derivatives reconstructed from a vorticity field.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    /// Total sphere stream function.
    pub psi: ScalarField,
    pub psi_rho: ScalarField,
    pub psi_phi: ScalarField,
    pub lambda_circ: f64,
    /// `psi` on the inner circle.
    pub psi1: f64,
    /// Circulations `int psi_theta dphi` on the inner and outer circles.
    pub circ: [f64; 2],
}

impl Flow {
    /// Planar velocity `grad_perp psi` in polar components.
    pub fn velocity(&self, grid: &AnnulusGrid) -> VectorField {
        VectorField {
            radial: ScalarField::from_fn(grid, |i, j| self.psi_phi.get(i, j) / grid.r[i]),
            azimuthal: ScalarField::from_fn(grid, |i, j| -self.psi_rho.get(i, j) / grid.r[i]),
        }
    }

    /// Eastward and northward sphere velocity `(-psi_theta, psi_phi / cos(theta))`.
    pub fn sphere_velocity(&self, grid: &AnnulusGrid) -> (ScalarField, ScalarField) {
        let u = ScalarField::from_fn(grid, |i, j| -self.psi_rho.get(i, j) / grid.theta[i].cos());
        let v = ScalarField::from_fn(grid, |i, j| self.psi_phi.get(i, j) / grid.theta[i].cos());
        (u, v)
    }

    /// Coordinate rates `rho' = alpha e^{-2 rho} psi_phi`, `phi' = -alpha e^{-2 rho} psi_rho`.
    pub fn transport(&self, grid: &AnnulusGrid) -> Transport {
        let k: Vec<f64> = (0..grid.n_rho)
            .map(|i| grid.alpha[i] * (-2.0 * grid.rho[i]).exp())
            .collect();
        Transport {
            rho_dot: ScalarField::from_fn(grid, |i, j| k[i] * self.psi_phi.get(i, j)),
            phi_dot: ScalarField::from_fn(grid, |i, j| -k[i] * self.psi_rho.get(i, j)),
        }
    }
}

/// Discrete divergence of a planar polar vector field by central differences
/// at interior nodes; boundary rows are left at zero.
pub fn divergence(grid: &AnnulusGrid, u: &VectorField) -> ScalarField {
    let (nr, np) = grid.shape();
    let mut out = ScalarField::zeros(grid);
    for i in 1..nr - 1 {
        for j in 0..np {
            let (jm, jp) = ((j + np - 1) % np, (j + 1) % np);
            // (1/r) d(r U^r)/dr = e^{-2 rho} d(r U^r)/d rho
            let flux =
                (grid.r[i + 1] * u.radial.get(i + 1, j) - grid.r[i - 1] * u.radial.get(i - 1, j)) / (2.0 * grid.d_rho);
            let az = (u.azimuthal.get(i, jp) - u.azimuthal.get(i, jm)) / (2.0 * grid.d_phi);
            out.set(i, j, flux / (grid.r[i] * grid.r[i]) + az / grid.r[i]);
        }
    }
    out
}

/// Solver for one band configuration and grid.
#[derive(Debug)]
pub struct Euler2d {
    pub grid: AnnulusGrid,
    pub config: BandConfig,
    pub harmonic: Harmonic,
    pub courant_limit: f64,
    pub limiter: Limiter,
    poisson: PoissonSolver,
}

impl Euler2d {
    pub fn new(config: BandConfig, grid: AnnulusGrid) -> Result<Self> {
        config.validate()?;
        if grid.theta1 != config.theta1 || grid.theta2 != config.theta2 {
            return Err(Error::InvalidParameter("grid latitudes differ from the band".into()));
        }
        Ok(Self {
            harmonic: Harmonic::new(&grid)?,
            poisson: PoissonSolver::new(&grid)?,
            grid,
            config,
            courant_limit: DEFAULT_COURANT_LIMIT,
            limiter: Limiter::default(),
        })
    }

    pub fn with_courant_limit(mut self, limit: f64) -> Self {
        self.courant_limit = limit;
        self
    }

    pub fn with_limiter(mut self, limiter: Limiter) -> Self {
        self.limiter = limiter;
        self
    }

    pub fn poisson(&self) -> &PoissonSolver {
        &self.poisson
    }

    /// `G phi` for a planar source.
    pub fn poisson_solve(&self, phi: &ScalarField) -> Result<ScalarField> {
        self.poisson.solve(phi)
    }

    /// Initial state; `lambda_circ` fixes the harmonic part and with it both
    /// circulation targets.
    pub fn initial_state(&self, zeta: ScalarField, lambda_circ: f64) -> Result<SimState> {
        self.grid.check(&zeta)?;
        if !zeta.all_finite() || !lambda_circ.is_finite() {
            return Err(Error::NonFinite("initial state"));
        }
        let flow = self.reconstruct(&zeta, lambda_circ)?;
        let (lo, hi) = zeta.min_max();
        Ok(SimState {
            t: 0.0,
            zeta_bounds: [lo, hi],
            zeta,
            lambda_circ,
            config: self.config,
            grid: self.grid.clone(),
            circ_targets: flow.circ,
            steps: 0,
            clamp_events: 0,
        })
    }

    /// Flow with a given harmonic coefficient.
    pub fn reconstruct(&self, zeta: &ScalarField, lambda_circ: f64) -> Result<Flow> {
        let (g_xi, g_phi) = self.solve_xi(zeta)?;
        Ok(self.assemble(g_xi, g_phi, lambda_circ))
    }

    /// Planar velocity of a state, `grad_perp G xi + lambda_circ U*`.
    pub fn reconstruct_velocity(&self, state: &SimState) -> Result<VectorField> {
        Ok(self.reconstruct(&state.zeta, state.lambda_circ)?.velocity(&self.grid))
    }

    /// Flow whose inner circulation equals `targets[0]`, and the mismatch of
    /// the outer circulation against `targets[1]`.
    pub fn fix_circulation(&self, zeta: &ScalarField, targets: [f64; 2]) -> Result<(Flow, f64)> {
        let (g_xi, g_phi) = self.solve_xi(zeta)?;
        let g_rho = poisson::rho_derivative(&g_xi, self.grid.d_rho);
        // inner circulation is (I_G - lambda) / cos(theta1) with I_G = int (G xi)_rho dphi
        let i_g: f64 = g_rho.row(0).iter().sum::<f64>() * self.grid.d_phi;
        let lambda_circ = i_g - targets[0] * self.grid.theta[0].cos();
        let flow = self.assemble(g_xi, g_phi, lambda_circ);
        let residual = flow.circ[1] - targets[1];
        Ok((flow, residual))
    }

    fn solve_xi(&self, zeta: &ScalarField) -> Result<(ScalarField, ScalarField)> {
        self.grid.check(zeta)?;
        let xi = xi_of(&self.grid, &self.config, zeta);
        let sol = self.poisson.solve_with_derivative(&xi)?;
        Ok((sol.psi, sol.psi_phi))
    }

    fn assemble(&self, g_xi: ScalarField, psi_phi: ScalarField, lambda_circ: f64) -> Flow {
        let g = &self.grid;
        let jump = self.harmonic.boundary_jump(lambda_circ);
        let psi2 = self.config.psi2;
        let mut psi_rho = poisson::rho_derivative(&g_xi, g.d_rho);
        let slope = jump * self.harmonic.psi_star_rho();
        psi_rho.data.iter_mut().for_each(|v| *v += slope);
        let star = self.harmonic.psi_star_field(g);
        let mut psi = g_xi;
        for (p, s) in psi.data.iter_mut().zip(&star.data) {
            *p += jump * s + psi2;
        }
        let circ = [0, g.n_rho - 1].map(|i| psi_rho.row(i).iter().sum::<f64>() * g.d_phi / g.theta[i].cos());
        Flow {
            psi,
            psi_rho,
            psi_phi,
            lambda_circ,
            psi1: psi2 + jump,
            circ,
        }
    }

    /// Flow of a state with its current harmonic coefficient.
    pub fn flow(&self, state: &SimState) -> Result<Flow> {
        self.reconstruct(&state.zeta, state.lambda_circ)
    }

    /// Step size giving Courant number `target` for the state's current flow.
    pub fn stable_dt(&self, state: &SimState, target: f64) -> Result<f64> {
        Ok(self.flow(state)?.transport(&self.grid).stable_dt(&self.grid, target))
    }

    /// One predictor-corrector step.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<SimState> {
        let flow = self.flow(state)?;
        Ok(self.advance(state, &flow, dt)?.0)
    }

    /// One step from a state whose flow is already known; returns the new
    /// state and its flow.
    pub fn advance(&self, state: &SimState, flow: &Flow, dt: f64) -> Result<(SimState, Flow)> {
        let g = &self.grid;
        if !dt.is_finite() || dt == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "time step must be finite and nonzero, got {dt}"
            )));
        }
        let v_now = flow.transport(g);
        let (predicted, _) = advect::advect(
            g,
            &state.zeta,
            &v_now,
            dt,
            self.courant_limit,
            self.limiter,
            state.zeta_bounds,
        )?;
        let (flow_pred, _) = self.fix_circulation(&predicted, state.circ_targets)?;
        let v_mid = v_now.average(&flow_pred.transport(g));
        let (zeta, clamped) = advect::advect(
            g,
            &state.zeta,
            &v_mid,
            dt,
            self.courant_limit,
            self.limiter,
            state.zeta_bounds,
        )?;
        let (flow_next, _) = self.fix_circulation(&zeta, state.circ_targets)?;
        if !zeta.all_finite() {
            return Err(Error::NonFinite("vorticity after step"));
        }
        let next = SimState {
            t: state.t + dt,
            zeta,
            lambda_circ: flow_next.lambda_circ,
            config: state.config,
            grid: state.grid.clone(),
            circ_targets: state.circ_targets,
            zeta_bounds: state.zeta_bounds,
            steps: state.steps + 1,
            clamp_events: state.clamp_events + clamped,
        };
        Ok((next, flow_next))
    }

    /// Advances to `t_end`, calling observers at the initial state, every
    /// `stride` steps and at the final state.
    ///
    /// The step count is `ceil(t_end / dt)` and steps are shortened evenly to
    /// land on `t_end`. Observers are finished even when a step fails.
    pub fn run(
        &self,
        initial: SimState,
        options: &RunOptions,
        observers: &mut [&mut dyn Observer],
    ) -> Result<Trajectory> {
        options.validate()?;
        let result = self.run_inner(initial, options, observers);
        let mut finish = Ok(());
        for obs in observers.iter_mut() {
            if let Err(e) = obs.finish() {
                if finish.is_ok() {
                    finish = Err(e);
                }
            }
        }
        let traj = result?;
        finish?;
        Ok(traj)
    }

    fn run_inner(
        &self,
        initial: SimState,
        options: &RunOptions,
        observers: &mut [&mut dyn Observer],
    ) -> Result<Trajectory> {
        let n_steps = options.step_count();
        let dt = if n_steps > 0 {
            options.t_end / n_steps as f64
        } else {
            0.0
        };
        let t0 = initial.t;
        let mut flow = self.flow(&initial)?;
        for obs in observers.iter_mut() {
            obs.observe(&initial, &flow)?;
        }
        let mut states = vec![initial.clone()];
        let mut state = initial;
        for k in 1..=n_steps {
            let (mut next, next_flow) = self.advance(&state, &flow, dt)?;
            // avoid accumulated round-off in the clock
            next.t = t0 + k as f64 * dt;
            state = next;
            flow = next_flow;
            if k % options.stride == 0 || k == n_steps {
                for obs in observers.iter_mut() {
                    obs.observe(&state, &flow)?;
                }
                states.push(state.clone());
            }
        }
        Ok(Trajectory {
            states,
            final_flow: flow,
            dt,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    /// Upper bound on the step size.
    pub dt: f64,
    /// Output every `stride` steps.
    pub stride: usize,
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_end must be >= 0, got {}",
                self.t_end
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("output stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        if self.t_end == 0.0 {
            0
        } else {
            (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
        }
    }
}

/// States kept at the output stride plus the flow of the last state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<SimState>,
    pub final_flow: Flow,
    /// Step size actually used.
    pub dt: f64,
}

impl Trajectory {
    pub fn last(&self) -> &SimState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Callback receiving output states during [`Euler2d::run`].
pub trait Observer {
    fn observe(&mut self, state: &SimState, flow: &Flow) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests;
