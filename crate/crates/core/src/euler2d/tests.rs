use super::*;
use crate::zonal::{solve, Method};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

fn solver(config: BandConfig, n: usize) -> Euler2d {
    let grid = AnnulusGrid::new(config.theta1, config.theta2, n, n).unwrap();
    Euler2d::new(config, grid).unwrap()
}

fn zonal_fields(s: &Euler2d) -> ZonalFields {
    let method = if s.config.lambda == 0.0 {
        Method::ClosedForm
    } else {
        Method::FiniteDifference
    };
    let profile = solve(&s.config, method, 4000).unwrap();
    ZonalFields::sample(&s.grid, &s.config, &profile)
}

fn zonal_state(s: &Euler2d, pert: Option<&SmoothPerturbation>) -> SimState {
    let z = zonal_fields(s);
    let zeta = init::perturbed_zeta(&s.grid, &z, pert);
    let u0 = init::planar_velocity(&s.grid, &z, pert);
    let lambda = s.harmonic.project(&u0, &s.grid).unwrap();
    s.initial_state(zeta, lambda).unwrap()
}

#[test]
fn planetary_vorticity_gives_rest() {
    let s = solver(BandConfig::default(), 32);
    let zeta = ScalarField::from_fn(&s.grid, |i, _| beta_of_radius(s.grid.r[i], s.config.omega));
    let state = s.initial_state(zeta, 0.0).unwrap();
    let u = s.reconstruct_velocity(&state).unwrap();
    assert!(u.radial.max_abs() < 1e-12 && u.azimuthal.max_abs() < 1e-12);
}

#[test]
fn zonal_reconstruction_second_order() {
    let mut errs = Vec::new();
    for n in [32, 64, 128] {
        let s = solver(scenario(-10.0), n);
        let z = zonal_fields(&s);
        let state = zonal_state(&s, None);
        let flow = s.flow(&state).unwrap();
        let (u, v) = flow.sphere_velocity(&s.grid);
        let mut err: f64 = 0.0;
        for i in 0..s.grid.n_rho {
            for j in 0..s.grid.n_phi {
                err = err.max((u.get(i, j) - z.u[i]).abs()).max(v.get(i, j).abs());
            }
        }
        // the stream function itself follows the zonal profile, fixing the sign convention
        let psi_err = (0..s.grid.n_rho)
            .map(|i| (flow.psi.get(i, 0) - z.psi[i]).abs())
            .fold(0.0, f64::max);
        assert!(psi_err < 1e-2 * z.psi.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        errs.push(err);
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 3.5, "{errs:?}");
    }
}

#[test]
fn initial_lambda_matches_boundary_jump() {
    let s = solver(scenario(-10.0), 128);
    let state = zonal_state(&s, None);
    let exact = s.harmonic.norm_sq * (s.config.psi1 - s.config.psi2);
    assert!((state.lambda_circ - exact).abs() < 1e-3 * exact.abs());
    let flow = s.flow(&state).unwrap();
    assert!((flow.psi1 - s.config.psi1).abs() < 1e-3);
}

#[test]
fn gradient_part_is_orthogonal_to_harmonic() {
    // the continuum product vanishes; the discrete one is a second-order quadrature residue
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let coeffs: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut rel = Vec::new();
    for n in [48, 96, 192] {
        let s = solver(BandConfig::default(), n);
        let g = &s.grid;
        let t = |i: usize| (g.rho[i] - g.rho1()) / g.log_ratio();
        let phi = ScalarField::from_fn(g, |i, j| {
            let (x, p) = (t(i), g.phi[j]);
            coeffs[0]
                + coeffs[1] * x
                + coeffs[2] * p.cos()
                + coeffs[3] * (2.0 * p).sin() * x
                + coeffs[4] * (3.0 * x).sin()
                + coeffs[5] * (p + x).cos()
        });
        let sol = s.poisson().solve_with_derivative(&phi).unwrap();
        let flow = Flow {
            psi_rho: poisson::rho_derivative(&sol.psi, g.d_rho),
            psi_phi: sol.psi_phi,
            psi: sol.psi,
            lambda_circ: 0.0,
            psi1: 0.0,
            circ: [0.0; 2],
        };
        let u_bar = flow.velocity(g);
        let u_star = s.harmonic.velocity(g);
        let inner = u_bar.inner(&u_star, g).unwrap();
        let scale = (u_bar.inner(&u_bar, g).unwrap() * u_star.inner(&u_star, g).unwrap()).sqrt();
        rel.push(inner.abs() / scale);
    }
    assert!(rel[0] < 1e-3, "{rel:?}");
    assert!(rel[0] / rel[1] > 3.5 && rel[1] / rel[2] > 3.5, "{rel:?}");
}

#[test]
fn divergence_is_second_order() {
    let mut errs = Vec::new();
    for n in [32, 64, 128] {
        let s = solver(BandConfig::default(), n);
        let phi = ScalarField::from_fn(&s.grid, |i, j| {
            (3.0 * s.grid.phi[j]).cos() * (1.0 + s.grid.rho[i]).powi(2)
        });
        let state = s.initial_state(phi.clone(), 0.0).unwrap();
        let u = s.reconstruct_velocity(&state).unwrap();
        let div = divergence(&s.grid, &u);
        let scale = u.radial.max_abs().max(u.azimuthal.max_abs()) / s.grid.r[0];
        errs.push(div.max_abs() / scale);
    }
    assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
}

#[test]
fn boundary_is_impermeable() {
    let s = solver(BandConfig::default(), 32);
    let zeta = ScalarField::from_fn(&s.grid, |i, j| (2.0 * s.grid.phi[j]).sin() * i as f64);
    let state = s.initial_state(zeta, 0.3).unwrap();
    let u = s.reconstruct_velocity(&state).unwrap();
    for j in 0..s.grid.n_phi {
        assert_eq!(u.radial.get(0, j), 0.0);
        assert_eq!(u.radial.get(s.grid.n_rho - 1, j), 0.0);
    }
}

#[test]
fn circulation_closure_is_linear() {
    let s = solver(BandConfig::default(), 32);
    let zeta = ScalarField::from_fn(&s.grid, |i, j| s.grid.phi[j].cos() + i as f64);
    let state = s.initial_state(zeta.clone(), 1.5).unwrap();
    let t = state.circ_targets;
    let (f0, _) = s.fix_circulation(&zeta, t).unwrap();
    assert!((f0.lambda_circ - 1.5).abs() < 1e-12);
    let (f1, _) = s.fix_circulation(&zeta, [t[0] + 1.0, t[1]]).unwrap();
    let (f2, _) = s.fix_circulation(&zeta, [t[0] + 2.0, t[1]]).unwrap();
    let d1 = f1.lambda_circ - f0.lambda_circ;
    let d2 = f2.lambda_circ - f0.lambda_circ;
    assert!((d2 - 2.0 * d1).abs() < 1e-12 * d2.abs());
    assert!((f1.circ[0] - (t[0] + 1.0)).abs() < 1e-12);
}

#[test]
fn zonal_state_keeps_lambda_over_100_steps() {
    let s = solver(scenario(-10.0), 32);
    let mut state = zonal_state(&s, None);
    let lambda0 = state.lambda_circ;
    let dt = s.stable_dt(&state, 0.5).unwrap();
    let mut flow = s.flow(&state).unwrap();
    for _ in 0..100 {
        let (next, f) = s.advance(&state, &flow, dt).unwrap();
        state = next;
        flow = f;
    }
    assert!(
        (state.lambda_circ - lambda0).abs() <= 1e-8 * lambda0.abs(),
        "{} vs {lambda0}",
        state.lambda_circ
    );
}

#[test]
fn constant_vorticity_is_invariant() {
    let s = solver(
        BandConfig {
            omega: 1.0,
            ..BandConfig::default()
        },
        32,
    );
    let zeta = ScalarField::from_fn(&s.grid, |_, _| 2.5);
    let mut state = s.initial_state(zeta.clone(), 0.0).unwrap();
    for _ in 0..5 {
        state = s.step(&state, 1e-3).unwrap();
    }
    assert_eq!(state.zeta, zeta);
}

#[test]
fn steps_are_deterministic() {
    let s = solver(scenario(-10.0), 32);
    let pert = SmoothPerturbation::single(s.config.theta1, s.config.theta2, 2, 1.0, 0.5).unwrap();
    let a = zonal_state(&s, Some(&pert));
    let b = zonal_state(&s, Some(&pert));
    let (a1, b1) = (s.step(&a, 1e-3).unwrap(), s.step(&b, 1e-3).unwrap());
    assert_eq!(a1, b1);
}

#[test]
fn transport_bound_holds() {
    let s = solver(scenario(-10.0), 48);
    let pert = SmoothPerturbation::single(s.config.theta1, s.config.theta2, 3, 0.0, 0.5).unwrap();
    let state = zonal_state(&s, Some(&pert));
    let (a, b) = transport_bound_constants(&s.config);
    let bound = a * state.zeta.max_abs() + b;
    let (lo, hi) = state.zeta.min_max();
    let dt = s.stable_dt(&state, 0.5).unwrap();
    let traj = s
        .run(
            state,
            &RunOptions {
                t_end: 20.0 * dt,
                dt,
                stride: 1,
            },
            &mut [],
        )
        .unwrap();
    for st in &traj.states {
        let (a, b) = st.zeta.min_max();
        assert!(a >= lo && b <= hi);
        assert!(st.max_xi() <= bound);
    }
}

#[test]
fn cfl_violation_is_reported() {
    let s = solver(scenario(-10.0), 32);
    let state = zonal_state(&s, None);
    let dt = s.stable_dt(&state, 0.5).unwrap();
    match s.step(&state, 10.0 * dt) {
        Err(Error::CflViolation { suggested_dt, .. }) => assert!(suggested_dt < 10.0 * dt),
        other => panic!("{other:?}"),
    }
}

struct Count(usize, bool);

impl Observer for Count {
    fn observe(&mut self, _: &SimState, _: &Flow) -> Result<()> {
        self.0 += 1;
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.1 = true;
        Ok(())
    }
}

#[test]
fn run_respects_stride_and_zero_horizon() {
    let s = solver(scenario(0.0), 16);
    let state = zonal_state(&s, None);
    let mut obs = Count(0, false);
    let traj = s
        .run(
            state.clone(),
            &RunOptions {
                t_end: 0.0,
                dt: 1e-3,
                stride: 1,
            },
            &mut [&mut obs],
        )
        .unwrap();
    assert_eq!(traj.states.len(), 1);
    assert_eq!(obs.0, 1);
    assert!(obs.1);
    let mut obs = Count(0, false);
    let traj = s
        .run(
            state,
            &RunOptions {
                t_end: 7e-3,
                dt: 1e-3,
                stride: 3,
            },
            &mut [&mut obs],
        )
        .unwrap();
    // initial, steps 3 and 6, final step 7
    assert_eq!(obs.0, 4);
    assert_eq!(traj.last().t, 7e-3);
    assert_eq!(traj.last().steps, 7);
}

#[test]
fn failing_run_still_finishes_observers() {
    let s = solver(scenario(-10.0), 32);
    let state = zonal_state(&s, None);
    let mut obs = Count(0, false);
    let res = s.run(
        state,
        &RunOptions {
            t_end: 1.0,
            dt: 1.0,
            stride: 1,
        },
        &mut [&mut obs],
    );
    assert!(matches!(res, Err(Error::CflViolation { .. })));
    assert!(obs.1);
}

#[test]
fn checkpoint_of_state_roundtrips() {
    let s = solver(scenario(-10.0), 16);
    let state = zonal_state(&s, None);
    let mut buf = Vec::new();
    write_checkpoint(&state.checkpoint_header(), &state.zeta, &mut buf).unwrap();
    let (h, z) = read_checkpoint(buf.as_slice()).unwrap();
    assert_eq!(h.lambda_circ, state.lambda_circ);
    assert_eq!(z, state.zeta);
}
