//! Conserved quantities, the Lyapunov functional and the stability identity.
//!
//! All functionals integrate over the band with [`band_integral`], the same
//! rule used by the geometry module. The absolute vorticity is
//! `q = Laplacian psi + 2 omega sin(theta)`; in terms of the transported field
//! of [`crate::euler2d`] it is `q = -zeta`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler2d::{transport_bound_constants, Euler2d, Flow, Observer, SimState, SmoothPerturbation, ZonalFields};
use crate::geometry::{band_integral, BandConfig};
use crate::grid::{AnnulusGrid, ScalarField};

/// Sphere velocity, absolute vorticity and boundary data of one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowFields {
    /// Eastward velocity.
    pub u: ScalarField,
    /// Northward velocity.
    pub v: ScalarField,
    /// Absolute vorticity `Laplacian psi + 2 omega sin(theta)`.
    pub q: ScalarField,
    /// `int psi_theta dphi` on the inner and outer circles.
    pub circ: [f64; 2],
    pub psi1: f64,
    pub psi2: f64,
}

impl FlowFields {
    pub fn from_flow(grid: &AnnulusGrid, state: &SimState, flow: &Flow) -> Self {
        let (u, v) = flow.sphere_velocity(grid);
        let q = ScalarField::from_fn(grid, |i, j| -state.zeta.get(i, j));
        Self {
            u,
            v,
            q,
            circ: flow.circ,
            psi1: flow.psi1,
            psi2: state.config.psi2,
        }
    }

    /// Reconstructs the flow of `state` and samples its fields.
    pub fn from_state(solver: &Euler2d, state: &SimState) -> Result<Self> {
        let flow = solver.flow(state)?;
        Ok(Self::from_flow(&solver.grid, state, &flow))
    }

    /// Zonal state with an optional perturbation `s xi`, from analytic
    /// derivatives; boundary circulations are `-2 pi u` on each circle plus the
    /// perturbation's line integrals.
    pub fn analytic(
        grid: &AnnulusGrid,
        config: &BandConfig,
        zonal: &ZonalFields,
        pert: Option<(&SmoothPerturbation, f64)>,
    ) -> Self {
        let (nr, _) = grid.shape();
        let mut u = ScalarField::from_fn(grid, |i, _| zonal.u[i]);
        let mut v = ScalarField::zeros(grid);
        let mut q = ScalarField::from_fn(grid, |i, _| -zonal.zeta[i]);
        let mut circ = [0, nr - 1].map(|i| {
            let row: f64 = u.row(i).iter().sum();
            -row * grid.d_phi
        });
        if let Some((p, s)) = pert {
            for i in 0..nr {
                let theta = grid.theta[i];
                for j in 0..grid.n_phi {
                    let val = p.eval(theta, grid.phi[j]);
                    let (du, dv) = val.velocity(theta);
                    u.set(i, j, u.get(i, j) + s * du);
                    v.set(i, j, s * dv);
                    q.set(i, j, q.get(i, j) + s * val.laplacian(theta));
                }
            }
            for (k, i) in [0, nr - 1].into_iter().enumerate() {
                let row: f64 = (0..grid.n_phi)
                    .map(|j| p.eval(grid.theta[i], grid.phi[j]).xi_theta)
                    .sum();
                circ[k] += s * row * grid.d_phi;
            }
        }
        Self {
            u,
            v,
            q,
            circ,
            psi1: config.psi1,
            psi2: config.psi2,
        }
    }

    fn check(&self, grid: &AnnulusGrid) -> Result<()> {
        grid.check(&self.u)?;
        grid.check(&self.v)?;
        grid.check(&self.q)
    }
}

fn integrate(grid: &AnnulusGrid, f: impl FnMut(usize, usize) -> f64) -> Result<f64> {
    band_integral(&ScalarField::from_fn(grid, f), grid)
}

/// Kinetic energy `1/2 iint (u^2 + v^2) dsigma`.
pub fn energy(fields: &FlowFields, grid: &AnnulusGrid) -> Result<f64> {
    fields.check(grid)?;
    Ok(0.5 * integrate(grid, |i, j| fields.u.get(i, j).powi(2) + fields.v.get(i, j).powi(2))?)
}

/// Boundary circulations `int psi_theta dphi = -int u dphi`, trapezoid in `phi`.
pub fn circulations(fields: &FlowFields) -> [f64; 2] {
    fields.circ
}

/// Sampled function for [`Casimir::Table`], evaluated by local cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct CasimirTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl CasimirTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 4 {
            return Err(Error::InvalidParameter(
                "casimir table needs at least 4 matching samples".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("casimir table abscissae must increase".into()));
        }
        Ok(Self { xs, ys })
    }

    /// Four-point Lagrange interpolation on the bracketing samples; the end
    /// stencils extrapolate outside the table.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = self.xs.partition_point(|&t| t <= x);
        let start = k.saturating_sub(2).min(n - 4);
        let nodes = &self.xs[start..start + 4];
        let mut total = 0.0;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (x - nodes[b]) / (nodes[a] - nodes[b]);
                }
            }
            total += w * self.ys[start + a];
        }
        total
    }
}

/// Function `f` of a Casimir `iint f(q) dsigma`.
#[derive(Debug, Clone, PartialEq)]
pub enum Casimir {
    /// `s^k` with `k <= 6`.
    Power(u32),
    Table(CasimirTable),
}

impl Casimir {
    pub fn power(k: u32) -> Result<Self> {
        if k > 6 {
            return Err(Error::InvalidParameter(format!("power moments go up to 6, got {k}")));
        }
        Ok(Casimir::Power(k))
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Casimir::Power(k) => s.powi(*k as i32),
            Casimir::Table(t) => t.eval(s),
        }
    }
}

/// `iint f(q) dsigma`.
pub fn casimir(fields: &FlowFields, grid: &AnnulusGrid, f: &Casimir) -> Result<f64> {
    fields.check(grid)?;
    integrate(grid, |i, j| f.eval(fields.q.get(i, j)))
}

/// Boundary weights `(a, b) = (psi2 cos(theta2), -psi1 cos(theta1))` of the
/// Lyapunov functional, with the configured boundary values.
pub fn boundary_weights(config: &BandConfig) -> (f64, f64) {
    (config.psi2 * config.theta2.cos(), -config.psi1 * config.theta1.cos())
}

/// `E = 1/2 iint [-lambda (u^2 + v^2) + (q - upsilon)^2] dsigma + lambda (a circ2 + b circ1)`.
pub fn lyapunov(fields: &FlowFields, grid: &AnnulusGrid, config: &BandConfig) -> Result<f64> {
    fields.check(grid)?;
    let (lam, ups) = (config.lambda, config.upsilon);
    let bulk = integrate(grid, |i, j| {
        let speed2 = fields.u.get(i, j).powi(2) + fields.v.get(i, j).powi(2);
        -lam * speed2 + (fields.q.get(i, j) - ups).powi(2)
    })?;
    let (a, b) = boundary_weights(config);
    Ok(0.5 * bulk + lam * (a * fields.circ[1] + b * fields.circ[0]))
}

/// Quadrature of the second variation `-lambda (xi_t^2 + xi_p^2 / cos^2) + (Laplacian xi)^2`.
pub fn second_variation(grid: &AnnulusGrid, lambda: f64, pert: &SmoothPerturbation) -> Result<f64> {
    integrate(grid, |i, j| {
        let theta = grid.theta[i];
        let val = pert.eval(theta, grid.phi[j]);
        let c = theta.cos();
        -lambda * (val.xi_theta.powi(2) + (val.xi_phi / c).powi(2)) + val.laplacian(theta).powi(2)
    })
}

/// `-lambda ||u - u*||^2 + ||q - q*||^2` against a reference flow.
pub fn stability_lhs(fields: &FlowFields, reference: &FlowFields, grid: &AnnulusGrid, lambda: f64) -> Result<f64> {
    fields.check(grid)?;
    reference.check(grid)?;
    integrate(grid, |i, j| {
        let du = fields.u.get(i, j) - reference.u.get(i, j);
        let dv = fields.v.get(i, j) - reference.v.get(i, j);
        let dq = fields.q.get(i, j) - reference.q.get(i, j);
        -lambda * (du * du + dv * dv) + dq * dq
    })
}

/// Left side now and right side frozen at the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityValues {
    pub lhs: f64,
    pub rhs: f64,
}

impl StabilityValues {
    pub fn defect(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Tracks the stability identity along a run.
#[derive(Debug, Clone)]
pub struct StabilityIdentity {
    pub reference: FlowFields,
    pub lambda: f64,
    pub rhs: f64,
}

impl StabilityIdentity {
    pub fn new(reference: FlowFields, initial: &FlowFields, grid: &AnnulusGrid, lambda: f64) -> Result<Self> {
        let rhs = stability_lhs(initial, &reference, grid, lambda)?;
        Ok(Self { reference, lambda, rhs })
    }

    pub fn evaluate(&self, fields: &FlowFields, grid: &AnnulusGrid) -> Result<StabilityValues> {
        Ok(StabilityValues {
            lhs: stability_lhs(fields, &self.reference, grid, self.lambda)?,
            rhs: self.rhs,
        })
    }
}

/// `2 (E(psi) - E(psi*))`, which equals the stability left side for smooth flows.
pub fn stability_via_lyapunov(
    fields: &FlowFields,
    reference: &FlowFields,
    grid: &AnnulusGrid,
    config: &BandConfig,
) -> Result<f64> {
    Ok(2.0 * (lyapunov(fields, grid, config)? - lyapunov(reference, grid, config)?))
}

/// `E_n = iint [-upsilon (n + 1) / n q^n + q^{n + 1}] dsigma`.
pub fn en_functional(fields: &FlowFields, grid: &AnnulusGrid, n: u32, upsilon: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("E_n needs n >= 1".into()));
    }
    fields.check(grid)?;
    let c = upsilon * (n + 1) as f64 / n as f64;
    integrate(grid, |i, j| {
        let q = fields.q.get(i, j);
        -c * q.powi(n as i32) + q.powi(n as i32 + 1)
    })
}

/// One row of the diagnostics CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub energy: f64,
    pub circ1: f64,
    pub circ2: f64,
    pub casimir2: f64,
    pub casimir3: f64,
    /// Left side of the stability identity, or NaN without a reference.
    pub stability_identity: f64,
    pub max_xi: f64,
    pub lambda_circ: f64,
}

/// CSV header of [`DiagnosticRecord`].
pub const CSV_HEADER: &str = "t,energy,circ1,circ2,casimir2,casimir3,stability_identity,max_xi,lambda_circ";

impl DiagnosticRecord {
    pub fn evaluate(
        grid: &AnnulusGrid,
        state: &SimState,
        fields: &FlowFields,
        stability: Option<&StabilityIdentity>,
    ) -> Result<Self> {
        let rec = Self {
            t: state.t,
            energy: energy(fields, grid)?,
            circ1: fields.circ[0],
            circ2: fields.circ[1],
            casimir2: casimir(fields, grid, &Casimir::Power(2))?,
            casimir3: casimir(fields, grid, &Casimir::Power(3))?,
            stability_identity: match stability {
                Some(s) => s.evaluate(fields, grid)?.lhs,
                None => f64::NAN,
            },
            max_xi: state.max_xi(),
            lambda_circ: state.lambda_circ,
        };
        let finite = [
            rec.energy,
            rec.circ1,
            rec.circ2,
            rec.casimir2,
            rec.casimir3,
            rec.max_xi,
            rec.lambda_circ,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("diagnostic record"));
        }
        Ok(rec)
    }

    fn fields(&self) -> [(&'static str, f64); 8] {
        [
            ("energy", self.energy),
            ("circ1", self.circ1),
            ("circ2", self.circ2),
            ("casimir2", self.casimir2),
            ("casimir3", self.casimir3),
            ("stability_identity", self.stability_identity),
            ("max_xi", self.max_xi),
            ("lambda_circ", self.lambda_circ),
        ]
    }
}

/// Relative change `|x - x0| / |x0|`, or the absolute change when `x0 = 0`.
pub fn relative_drift(x0: f64, x: f64) -> f64 {
    let d = (x - x0).abs();
    if x0 == 0.0 {
        d
    } else {
        d / x0.abs()
    }
}

/// Summary of a run for the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub records: usize,
    pub initial: DiagnosticRecord,
    pub last: DiagnosticRecord,
    /// Largest relative drift from the initial value per column.
    pub max_relative_drift: BTreeMap<String, f64>,
    /// `A ||zeta0||_inf + B`.
    pub max_xi_bound: f64,
    pub max_xi_peak: f64,
    pub clamp_events: u64,
}

/// Observer computing a [`DiagnosticRecord`] per output state and streaming
/// it to a CSV writer.
pub struct DiagnosticsObserver<'a, W: Write> {
    solver: &'a Euler2d,
    writer: Option<csv::Writer<W>>,
    stability: Option<StabilityIdentity>,
    pending: Option<FlowFields>,
    pub records: Vec<DiagnosticRecord>,
    xi_bound: Option<f64>,
    clamp_events: u64,
}

impl<'a, W: Write> DiagnosticsObserver<'a, W> {
    /// `reference`, when present, is the zonal flow of the stability identity;
    /// its right side is frozen at the first observed state.
    pub fn new(solver: &'a Euler2d, writer: Option<W>, reference: Option<FlowFields>) -> Self {
        Self {
            solver,
            writer: writer.map(csv::Writer::from_writer),
            stability: None,
            pending: reference,
            records: Vec::new(),
            xi_bound: None,
            clamp_events: 0,
        }
    }

    pub fn stability(&self) -> Option<&StabilityIdentity> {
        self.stability.as_ref()
    }

    pub fn report(&self) -> Option<RunReport> {
        let initial = *self.records.first()?;
        let last = *self.records.last()?;
        let mut drift = BTreeMap::new();
        for rec in &self.records {
            for ((name, x0), (_, x)) in initial.fields().iter().zip(rec.fields().iter()) {
                let entry = drift.entry(name.to_string()).or_insert(0.0f64);
                let d = relative_drift(*x0, *x);
                if d.is_finite() {
                    *entry = entry.max(d);
                }
            }
        }
        Some(RunReport {
            records: self.records.len(),
            initial,
            last,
            max_relative_drift: drift,
            max_xi_bound: self.xi_bound.unwrap_or(f64::NAN),
            max_xi_peak: self.records.iter().map(|r| r.max_xi).fold(0.0, f64::max),
            clamp_events: self.clamp_events,
        })
    }
}

impl<W: Write> Observer for DiagnosticsObserver<'_, W> {
    fn observe(&mut self, state: &SimState, flow: &Flow) -> Result<()> {
        let grid = &self.solver.grid;
        let fields = FlowFields::from_flow(grid, state, flow);
        if self.records.is_empty() {
            let (a, b) = transport_bound_constants(&state.config);
            self.xi_bound = Some(a * state.zeta.max_abs() + b);
            if let Some(reference) = self.pending.take() {
                self.stability = Some(StabilityIdentity::new(reference, &fields, grid, state.config.lambda)?);
            }
        }
        let rec = DiagnosticRecord::evaluate(grid, state, &fields, self.stability.as_ref())?;
        if let Some(w) = self.writer.as_mut() {
            w.serialize(rec)?;
        }
        self.records.push(rec);
        self.clamp_events = state.clamp_events;
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        if let Some(w) = self.writer.as_mut() {
            w.flush()?;
        }
        Ok(())
    }
}

/// Reads a diagnostics CSV written by [`DiagnosticsObserver`].
pub fn read_diagnostics_csv<R: std::io::Read>(input: R) -> Result<Vec<DiagnosticRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
