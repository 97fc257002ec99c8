use super::*;
use crate::euler2d::init::{perturbed_zeta, planar_velocity};
use crate::euler2d::RunOptions;
use crate::zonal::{solve, Method};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn scenario(lambda: f64) -> BandConfig {
    BandConfig {
        omega: 10.0,
        upsilon: 4.0,
        psi1: 0.0,
        psi2: 0.6075339842539141,
        lambda,
        ..BandConfig::default()
    }
}

fn grid(c: &BandConfig, nr: usize, np: usize) -> AnnulusGrid {
    AnnulusGrid::new(c.theta1, c.theta2, nr, np).unwrap()
}

fn zonal(c: &BandConfig, g: &AnnulusGrid) -> ZonalFields {
    let profile = solve(c, Method::FiniteDifference, 4000).unwrap();
    ZonalFields::sample(g, c, &profile)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

fn uniform_fields(g: &AnnulusGrid, u: f64) -> FlowFields {
    FlowFields {
        u: ScalarField::from_fn(g, |_, _| u),
        v: ScalarField::zeros(g),
        q: ScalarField::zeros(g),
        circ: [-TAU * u; 2],
        psi1: 0.0,
        psi2: 0.0,
    }
}

#[test]
fn energy_of_rest_and_uniform_flow() {
    let c = BandConfig::default();
    let g = grid(&c, 256, 16);
    assert_eq!(energy(&uniform_fields(&g, 0.0), &g).unwrap(), 0.0);
    let e = energy(&uniform_fields(&g, 1.0), &g).unwrap();
    let exact = PI * (c.theta2.sin() - c.theta1.sin());
    assert!((e - exact).abs() < 1e-5 * exact);
    assert_eq!(circulations(&uniform_fields(&g, 1.0)), [-TAU, -TAU]);
}

#[test]
fn zonal_energy_matches_line_quadrature() {
    let c = scenario(-10.0);
    let profile = solve(&c, Method::FiniteDifference, 4000).unwrap();
    let g = grid(&c, 1024, 8);
    let z = ZonalFields::sample(&g, &c, &profile);
    let f = FlowFields::analytic(&g, &c, &z, None);
    let e = energy(&f, &g).unwrap();
    let oracle = PI * simpson(c.theta1, c.theta2, 4000, |t| profile.eval(t).1.powi(2) * t.cos());
    assert!((e - oracle).abs() < 1e-6 * oracle, "{e} {oracle}");
    let want = [-TAU * z.u[0], -TAU * z.u[g.n_rho - 1]];
    for (got, want) in f.circ.iter().zip(want) {
        assert!((got - want).abs() < 1e-12 * want.abs());
    }
}

#[test]
fn casimir_moments() {
    let c = scenario(-10.0);
    let profile = solve(&c, Method::FiniteDifference, 4000).unwrap();
    let g = grid(&c, 1024, 8);
    let z = ZonalFields::sample(&g, &c, &profile);
    let f = FlowFields::analytic(&g, &c, &z, None);
    let area = casimir(&f, &g, &Casimir::Power(0)).unwrap();
    let exact = TAU * (c.theta2.sin() - c.theta1.sin());
    assert!((area - exact).abs() < 1e-6 * exact);
    // q = upsilon - lambda Psi for the zonal state
    let first = casimir(&f, &g, &Casimir::Power(1)).unwrap();
    let oracle = TAU
        * simpson(c.theta1, c.theta2, 4000, |t| {
            (c.upsilon - c.lambda * profile.eval(t).0) * t.cos()
        });
    assert!((first - oracle).abs() < 1e-6 * oracle.abs());
    assert!(Casimir::power(7).is_err());
}

#[test]
fn casimir_table_reproduces_cubics() {
    let xs: Vec<f64> = (0..9).map(|k| -2.0 + 0.5 * k as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x * x * x - x).collect();
    let table = CasimirTable::new(xs, ys).unwrap();
    for &x in &[-2.0, -1.3, 0.1, 1.77, 2.0, 2.4] {
        assert!((table.eval(x) - (x * x * x - x)).abs() < 1e-12);
    }
    assert!(CasimirTable::new(vec![0.0, 1.0, 1.0, 2.0], vec![0.0; 4]).is_err());
    assert!(CasimirTable::new(vec![0.0, 1.0], vec![0.0; 2]).is_err());
}

#[test]
fn en_functional_identities() {
    let c = scenario(-10.0);
    let g = grid(&c, 64, 16);
    let z = zonal(&c, &g);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = SmoothPerturbation::random(c.theta1, c.theta2, 3, 4, &mut rng).unwrap();
    let f = FlowFields::analytic(&g, &c, &z, Some((&p, 0.1)));
    let e1 = en_functional(&f, &g, 1, c.upsilon).unwrap();
    let c2 = casimir(&f, &g, &Casimir::Power(2)).unwrap();
    let c1 = casimir(&f, &g, &Casimir::Power(1)).unwrap();
    assert!((e1 - (c2 - 2.0 * c.upsilon * c1)).abs() < 1e-12 * c2.abs());
    let mut zero = f.clone();
    zero.q = ScalarField::zeros(&g);
    assert_eq!(en_functional(&zero, &g, 3, c.upsilon).unwrap(), 0.0);
    assert!(en_functional(&f, &g, 0, c.upsilon).is_err());
}

#[test]
fn constant_shift_enters_through_boundary_terms() {
    let c = scenario(-10.0);
    let g = grid(&c, 64, 16);
    let z = zonal(&c, &g);
    let f = FlowFields::analytic(&g, &c, &z, None);
    let shift = 0.37;
    let shifted = BandConfig {
        psi1: c.psi1 + shift,
        psi2: c.psi2 + shift,
        ..c
    };
    let diff = lyapunov(&f, &g, &shifted).unwrap() - lyapunov(&f, &g, &c).unwrap();
    let analytic = c.lambda * shift * (c.theta2.cos() * f.circ[1] - c.theta1.cos() * f.circ[0]);
    assert!((diff - analytic).abs() < 1e-10 * analytic.abs());
}

#[test]
fn zonal_state_is_critical_and_second_variation_matches() {
    let c = scenario(-10.0);
    let g = grid(&c, 128, 64);
    let z = zonal(&c, &g);
    let base = FlowFields::analytic(&g, &c, &z, None);
    let e0 = lyapunov(&base, &g, &c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let p = SmoothPerturbation::random(c.theta1, c.theta2, 4, 5, &mut rng).unwrap();
    let q = second_variation(&g, c.lambda, &p).unwrap();
    for s in [1e-1, 1e-2, 1e-3] {
        let plus = lyapunov(&FlowFields::analytic(&g, &c, &z, Some((&p, s))), &g, &c).unwrap();
        let minus = lyapunov(&FlowFields::analytic(&g, &c, &z, Some((&p, -s))), &g, &c).unwrap();
        let first = (plus - minus) / (2.0 * s);
        let second = (plus - 2.0 * e0 + minus) / (s * s);
        assert!(first.abs() < 1e-8 * q, "s = {s}: {first}");
        assert!((second - q).abs() < 1e-6 * q, "s = {s}: {second} vs {q}");
    }
}

#[test]
fn stability_identity_matches_lyapunov_difference() {
    let c = scenario(-10.0);
    let g = grid(&c, 64, 32);
    let z = zonal(&c, &g);
    let reference = FlowFields::analytic(&g, &c, &z, None);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = SmoothPerturbation::random(c.theta1, c.theta2, 3, 3, &mut rng).unwrap();
    let f = FlowFields::analytic(&g, &c, &z, Some((&p, 0.05)));
    let id = StabilityIdentity::new(reference.clone(), &f, &g, c.lambda).unwrap();
    let v = id.evaluate(&f, &g).unwrap();
    assert_eq!(v.lhs, v.rhs);
    assert_eq!(v.defect(), 0.0);
    let alt = stability_via_lyapunov(&f, &reference, &g, &c).unwrap();
    assert!((alt - v.lhs).abs() < 1e-9 * v.lhs.abs(), "{alt} {}", v.lhs);
}

#[test]
fn mismatched_grids_are_rejected() {
    let c = scenario(-10.0);
    let g = grid(&c, 32, 16);
    let other = grid(&c, 16, 16);
    let f = uniform_fields(&g, 1.0);
    assert!(matches!(energy(&f, &other), Err(Error::GridMismatch { .. })));
    assert!(stability_lhs(&f, &uniform_fields(&other, 1.0), &g, -1.0).is_err());
}

#[test]
fn observer_writes_parsable_csv_and_report() {
    let c = scenario(-10.0);
    let g = grid(&c, 24, 24);
    let solver = Euler2d::new(c, g.clone()).unwrap();
    let z = zonal(&c, &g);
    let p = SmoothPerturbation::single(c.theta1, c.theta2, 3, 0.0, 0.05).unwrap();
    let zeta = perturbed_zeta(&g, &z, Some(&p));
    let lambda = solver.harmonic.project(&planar_velocity(&g, &z, Some(&p)), &g).unwrap();
    let state = solver.initial_state(zeta, lambda).unwrap();
    let reference = FlowFields::analytic(&g, &c, &z, None);
    let mut buf = Vec::new();
    let dt = solver.stable_dt(&state, 0.5).unwrap();
    let report = {
        let mut obs = DiagnosticsObserver::new(&solver, Some(&mut buf), Some(reference));
        solver
            .run(
                state,
                &RunOptions {
                    t_end: 6.0 * dt,
                    dt,
                    stride: 2,
                },
                &mut [&mut obs],
            )
            .unwrap();
        let v = obs.stability().unwrap();
        assert!(v.rhs > 0.0);
        obs.report().unwrap()
    };
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    let rows = read_diagnostics_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].stability_identity, report.initial.stability_identity);
    assert_eq!(rows[3], report.last);
    assert!(report.max_xi_peak <= report.max_xi_bound);
    assert!(report.max_relative_drift["circ1"] < 1e-12);
    let json = serde_json::to_string(&report).unwrap();
    let back: RunReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
}
