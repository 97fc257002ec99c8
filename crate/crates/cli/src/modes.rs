//! The four run modes and their artifacts.

use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use circumpolar_core::diagnostics::{DiagnosticsObserver, FlowFields, RunReport};
use circumpolar_core::euler2d::init::{perturbed_zeta, planar_velocity, SmoothPerturbation, ZonalFields};
use circumpolar_core::euler2d::{write_checkpoint, Euler2d, Flow, Observer, RunOptions, SimState};
use circumpolar_core::sturm_liouville::{eigen_solve, prufer, rayleigh_quotient, SLProblem};
use circumpolar_core::zonal::{self, sup_difference, write_profile_csv, write_profile_svg};
use circumpolar_core::{Method, ZonalProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, RunSpec};
use crate::error::{CliError, Result};

/// Number of eigenvalues in spectrum reports.
pub const SPECTRUM_COUNT: usize = 5;
/// Intervals of the eigenvalue grid.
pub const SPECTRUM_GRID: usize = 400;
/// Relative distance below which `lambda` is flagged as close to an eigenvalue.
pub const NEAR_EIGENVALUE_FRACTION: f64 = 0.05;
/// Latitude intervals of the zonal profile used to initialize evolution runs.
pub const ZONAL_INIT_POINTS: usize = 4000;

/// Files written by a run plus human-readable notes.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub summary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckRow {
    pub method_a: String,
    pub method_b: String,
    pub sup_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub eigenvalue: f64,
    pub shooting: f64,
    pub rayleigh: f64,
    pub sign_changes: usize,
    pub near_lambda: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
}

/// Runs `spec` and writes its artifacts under `spec.output_dir`.
pub fn run(spec: &RunSpec) -> Result<RunOutcome> {
    fs::create_dir_all(&spec.output_dir).map_err(|e| CliError::io(&spec.output_dir, e))?;
    match spec.mode {
        Mode::Zonal => run_zonal(spec),
        Mode::Spectrum => run_spectrum(spec),
        Mode::Evolve | Mode::Stability => run_evolve(spec),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads any CSV table written by this crate.
pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Ratio of the weaker boundary jet to the fastest interior speed, where the
/// interior is the middle half of the band.
pub fn jet_contrast(thetas: &[f64], speeds: &[f64]) -> f64 {
    let n = thetas.len();
    let (a, b) = (thetas[0], thetas[n - 1]);
    let interior = thetas
        .iter()
        .zip(speeds)
        .filter(|(&t, _)| (t - a) >= 0.25 * (b - a) && (b - t) >= 0.25 * (b - a))
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    speeds[0].abs().min(speeds[n - 1].abs()) / interior
}

fn sign_changes(y: &[f64]) -> usize {
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut last = 0.0;
    let mut count = 0;
    for &v in &y[1..y.len() - 1] {
        if v.abs() <= 1e-12 * scale {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

/// First eigenpairs of the homogeneous zonal operator with their checks.
pub fn spectrum_rows(spec: &RunSpec) -> Result<Vec<SpectrumRow>> {
    let prob = SLProblem::zonal(spec.config.theta1, spec.config.theta2);
    let sp = eigen_solve(&prob, SPECTRUM_COUNT, SPECTRUM_GRID)?;
    let mut rows = Vec::with_capacity(SPECTRUM_COUNT);
    for (k, (&mu, y)) in sp.eigenvalues.iter().zip(&sp.eigenfunctions).enumerate() {
        let lambda = spec.config.lambda;
        rows.push(SpectrumRow {
            index: k + 1,
            eigenvalue: mu,
            shooting: prufer::shoot_eigenvalue(&prob, k + 1, mu)?,
            rayleigh: rayleigh_quotient(&prob, &sp.grid, y)?,
            sign_changes: sign_changes(y),
            near_lambda: (lambda - mu).abs() <= NEAR_EIGENVALUE_FRACTION * mu.abs(),
        });
    }
    Ok(rows)
}

fn spectrum_report(spec: &RunSpec, out: &mut RunOutcome) -> Result<()> {
    let rows = spectrum_rows(spec)?;
    let path = spec.output_dir.join("spectrum.csv");
    write_rows(&path, &rows)?;
    out.files.push(path);
    for r in rows.iter().filter(|r| r.near_lambda) {
        out.warnings.push(format!(
            "lambda = {} lies within {}% of eigenvalue {} ({:.6})",
            spec.config.lambda,
            NEAR_EIGENVALUE_FRACTION * 100.0,
            r.index,
            r.eigenvalue
        ));
    }
    let list: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.eigenvalue)).collect();
    out.summary.push(format!("eigenvalues: {}", list.join(", ")));
    Ok(())
}

fn run_spectrum(spec: &RunSpec) -> Result<RunOutcome> {
    let mut out = RunOutcome::default();
    spectrum_report(spec, &mut out)?;
    Ok(out)
}

/// Pairwise sup differences of the closed form, finite differences and Picard
/// iteration for a `lambda = 0` configuration.
pub fn cross_check(spec: &RunSpec) -> Result<Vec<CrossCheckRow>> {
    let methods = [Method::ClosedForm, Method::FiniteDifference, Method::Picard];
    let mut profiles = Vec::with_capacity(methods.len());
    for m in methods {
        profiles.push(zonal::solve(&spec.config, m, spec.n_zonal)?);
    }
    let mut rows = Vec::new();
    for i in 0..profiles.len() {
        for j in i + 1..profiles.len() {
            rows.push(CrossCheckRow {
                method_a: methods[i].to_string(),
                method_b: methods[j].to_string(),
                sup_error: sup_difference(&profiles[i], &profiles[j]),
            });
        }
    }
    Ok(rows)
}

fn run_zonal(spec: &RunSpec) -> Result<RunOutcome> {
    let mut out = RunOutcome::default();
    let profile = zonal::solve(&spec.config, spec.method, spec.n_zonal)?;
    let csv_path = spec.output_dir.join("profile.csv");
    write_profile_csv(&profile, create(&csv_path)?)?;
    let svg_path = spec.output_dir.join("profile.svg");
    let title = format!(
        "Zonal velocity (m/s), lambda = {}, Upsilon = {}, psi1 = {}, psi2 = {}",
        spec.config.lambda, spec.config.upsilon, spec.config.psi1, spec.config.psi2
    );
    write_profile_svg(&profile, &title, create(&svg_path)?)?;
    out.files.extend([csv_path, svg_path]);
    out.summary.push(format!(
        "{}: peak speed {:.4} m/s, boundary jet contrast {:.3}",
        profile.method,
        profile.max_speed() * profile.u_scale,
        jet_contrast(&profile.thetas, &profile.u_dimensional)
    ));
    if spec.config.lambda == 0.0 {
        let rows = cross_check(spec)?;
        let path = spec.output_dir.join("crosscheck.csv");
        write_rows(&path, &rows)?;
        out.files.push(path);
        let worst = rows.iter().map(|r| r.sup_error).fold(0.0, f64::max);
        out.summary.push(format!("max pairwise sup error: {worst:e}"));
    }
    spectrum_report(spec, &mut out)?;
    Ok(out)
}

/// Writes a checkpoint every `every` observations and after the last one.
struct CheckpointObserver {
    dir: PathBuf,
    every: usize,
    count: usize,
    last: Option<(usize, SimState)>,
    written: Vec<PathBuf>,
}

impl CheckpointObserver {
    fn write(&mut self, index: usize, state: &SimState) -> circumpolar_core::Result<()> {
        let path = self.dir.join(format!("checkpoint_{index:05}.txt"));
        write_checkpoint(
            &state.checkpoint_header(),
            &state.zeta,
            BufWriter::new(File::create(&path)?),
        )?;
        self.written.push(path);
        Ok(())
    }
}

impl Observer for CheckpointObserver {
    fn observe(&mut self, state: &SimState, _flow: &Flow) -> circumpolar_core::Result<()> {
        let index = self.count;
        self.count += 1;
        if self.every > 0 && index % self.every == 0 {
            self.write(index, state)?;
            self.last = None;
        } else {
            self.last = Some((index, state.clone()));
        }
        Ok(())
    }

    fn finish(&mut self) -> circumpolar_core::Result<()> {
        if let Some((index, state)) = self.last.take() {
            self.write(index, &state)?;
        }
        Ok(())
    }
}

/// Zonal profile used as evolution reference.
pub fn reference_profile(spec: &RunSpec) -> Result<ZonalProfile> {
    let method = match spec.method {
        Method::ClosedForm | Method::FiniteDifference => spec.method,
        _ => Method::FiniteDifference,
    };
    Ok(zonal::solve(&spec.config, method, ZONAL_INIT_POINTS)?)
}

/// Single-mode perturbation with a seeded phase, peak speed
/// `amplitude * max |u*|`.
pub fn seeded_perturbation(spec: &RunSpec, profile: &ZonalProfile) -> Result<Option<SmoothPerturbation>> {
    if spec.amplitude == 0.0 {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phase = rng.gen::<f64>() * TAU;
    let speed = spec.amplitude * profile.max_speed();
    Ok(Some(SmoothPerturbation::single(
        spec.config.theta1,
        spec.config.theta2,
        spec.wavenumber,
        phase,
        speed,
    )?))
}

/// Builds the solver, the initial state and the zonal reference fields.
pub fn setup(spec: &RunSpec) -> Result<(Euler2d, SimState, FlowFields)> {
    let grid = spec.grid()?;
    let solver = Euler2d::new(spec.config, grid.clone())?.with_limiter(spec.limiter);
    let profile = reference_profile(spec)?;
    let zonal = ZonalFields::sample(&grid, &spec.config, &profile);
    let pert = seeded_perturbation(spec, &profile)?;
    let zeta = perturbed_zeta(&grid, &zonal, pert.as_ref());
    let lambda = solver
        .harmonic
        .project(&planar_velocity(&grid, &zonal, pert.as_ref()), &grid)?;
    let state = solver.initial_state(zeta, lambda)?;
    let reference = FlowFields::analytic(&grid, &spec.config, &zonal, None);
    Ok((solver, state, reference))
}

/// Drift columns held to `drift_tolerance`.
pub const CHECKED_DRIFTS: [&str; 5] = ["energy", "circ1", "circ2", "casimir2", "casimir3"];

/// Margin allowed above the vorticity bound.
pub const XI_BOUND_SLACK: f64 = 1e-10;

fn tolerance_breaches(report: &RunReport, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    for name in CHECKED_DRIFTS {
        let d = report.max_relative_drift.get(name).copied().unwrap_or(f64::NAN);
        if !(d <= tol) {
            out.push(format!("{name} drift {d:e} exceeds {tol:e}"));
        }
    }
    if !(report.max_xi_peak <= report.max_xi_bound + XI_BOUND_SLACK) {
        out.push(format!(
            "max |xi| = {} exceeds bound {}",
            report.max_xi_peak, report.max_xi_bound
        ));
    }
    out
}

fn run_evolve(spec: &RunSpec) -> Result<RunOutcome> {
    let mut out = RunOutcome::default();
    if spec.mode == Mode::Stability && spec.config.lambda > 0.0 {
        out.warnings.push(format!(
            "lambda = {} > 0: the stability identity is tracked but does not bound the perturbation",
            spec.config.lambda
        ));
    }
    let (solver, state, reference) = setup(spec)?;
    let dt = match spec.dt {
        Some(dt) => dt,
        None => solver.stable_dt(&state, spec.cfl)?,
    };
    let ckpt_dir = spec.output_dir.join("checkpoints");
    fs::create_dir_all(&ckpt_dir).map_err(|e| CliError::io(&ckpt_dir, e))?;
    let diag_path = spec.output_dir.join("diagnostics.csv");
    let mut diag = DiagnosticsObserver::new(&solver, Some(create(&diag_path)?), Some(reference));
    let mut ckpt = CheckpointObserver {
        dir: ckpt_dir,
        every: spec.checkpoint_every,
        count: 0,
        last: None,
        written: Vec::new(),
    };
    let options = RunOptions {
        t_end: spec.t_end,
        dt,
        stride: spec.output_stride,
    };
    let result = solver.run(state, &options, &mut [&mut diag, &mut ckpt]);
    out.files.push(diag_path);
    out.files.append(&mut ckpt.written);
    let trajectory = result?;
    let report = diag
        .report()
        .ok_or_else(|| CliError::Tolerance("no diagnostics recorded".into()))?;

    let report_path = spec.output_dir.join("report.json");
    let mut w = create(&report_path)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| CliError::Output(e.into()))?;
    w.write_all(b"\n").map_err(|e| CliError::io(&report_path, e))?;
    w.flush().map_err(|e| CliError::io(&report_path, e))?;
    out.files.push(report_path);

    if spec.mode == Mode::Stability {
        let rhs = diag.stability().map(|s| s.rhs).unwrap_or(f64::NAN);
        let rows: Vec<StabilityRow> = diag
            .records
            .iter()
            .map(|r| StabilityRow {
                t: r.t,
                lhs: r.stability_identity,
                rhs,
                defect: r.stability_identity - rhs,
            })
            .collect();
        let path = spec.output_dir.join("stability.csv");
        write_rows(&path, &rows)?;
        out.files.push(path);
        if let Some(last) = rows.last() {
            out.summary.push(format!(
                "stability identity at t = {}: lhs {:.6e}, rhs {:.6e}, defect {:.3e}",
                last.t, last.lhs, last.rhs, last.defect
            ));
        }
    }

    out.summary.push(format!(
        "{} steps of dt = {dt:e} to t = {}, max |xi| {:.6} (bound {:.6}), {} clamp events",
        trajectory.last().steps,
        trajectory.last().t,
        report.max_xi_peak,
        report.max_xi_bound,
        report.clamp_events
    ));
    let breaches = tolerance_breaches(&report, spec.drift_tolerance);
    if !breaches.is_empty() {
        return Err(CliError::Tolerance(breaches.join("; ")));
    }
    Ok(out)
}
