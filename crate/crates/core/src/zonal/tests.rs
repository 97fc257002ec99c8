use super::*;
use proptest::prelude::*;

fn jet_scenario() -> BandConfig {
    BandConfig {
        lambda: -3000.0,
        upsilon: 30000.0,
        psi1: -5.0,
        psi2: -25.0,
        ..BandConfig::default()
    }
}

fn lambda0() -> BandConfig {
    BandConfig {
        lambda: 0.0,
        ..jet_scenario()
    }
}

fn sup_error(p: &ZonalProfile, f: impl Fn(f64) -> f64) -> f64 {
    p.thetas
        .iter()
        .zip(&p.psi)
        .fold(0.0f64, |m, (&t, &v)| m.max((v - f(t)).abs()))
}

#[test]
fn closed_form_trivial_cases() {
    let cfg = BandConfig {
        upsilon: 0.0,
        omega: 1e-300,
        ..BandConfig::default()
    };
    let p = solve_closed_form_lambda0(&cfg, 50).unwrap();
    assert!(p.psi.iter().all(|v| v.abs() < 1e-250));

    let cfg = BandConfig { psi2: 1.0, ..cfg };
    let p = solve_closed_form_lambda0(&cfg, 50).unwrap();
    let (e1, e2) = (eta(cfg.theta1), eta(cfg.theta2));
    assert!(sup_error(&p, |t| (eta(t) - e1) / (e2 - e1)) < 1e-14);
}

#[test]
fn closed_form_rejects_nonzero_lambda() {
    assert!(matches!(
        solve_closed_form_lambda0(&jet_scenario(), 10),
        Err(Error::LambdaNotZero(_))
    ));
}

#[test]
fn closed_form_residual_is_tiny() {
    let cfg = lambda0();
    let form = ClosedForm::new(&cfg).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let t = cfg.theta1 + (cfg.theta2 - cfg.theta1) * k as f64 / 999.0;
        worst = worst.max(ode_residual(&cfg, t, form.eval(t)).abs());
    }
    assert!(worst <= 1e-9, "{worst}");
    let p = solve_closed_form_lambda0(&cfg, 20).unwrap();
    assert_eq!(p.psi[0], cfg.psi1);
    assert_eq!(p.psi[20], cfg.psi2);
    assert!((form.eval(cfg.theta1)[0] - cfg.psi1).abs() < 1e-12);
    assert!((form.eval(cfg.theta2)[0] - cfg.psi2).abs() < 1e-12);
}

#[test]
fn eta_has_unit_scaled_derivative() {
    let h = 1e-4;
    for k in 0..200 {
        let t = -1.2 + 1.1 * k as f64 / 199.0;
        let d = (eta(t - 2.0 * h) - 8.0 * eta(t - h) + 8.0 * eta(t + h) - eta(t + 2.0 * h)) / (12.0 * h);
        assert!((d * t.cos() - 1.0).abs() < 1e-9, "theta = {t}");
    }
}

#[test]
fn fd_converges_to_closed_form_at_second_order() {
    let cfg = lambda0();
    let form = ClosedForm::new(&cfg).unwrap();
    let errs: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&n| sup_error(&solve_fd(&cfg, n).unwrap(), |t| form.eval(t)[0]))
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn fd_solution_is_exact_for_its_linear_system() {
    let cfg = jet_scenario();
    let p = solve_fd(&cfg, 400).unwrap();
    assert!(fd_backward_error(&cfg, &p) < 1e-12);
}

#[test]
fn fd_zero_data_gives_zero() {
    for lambda in [0.0, -1.0, -250.0] {
        let cfg = BandConfig {
            lambda,
            upsilon: 0.0,
            omega: 1e-300,
            ..BandConfig::default()
        };
        let p = solve_fd(&cfg, 64).unwrap();
        assert!(p.psi.iter().all(|v| v.abs() < 1e-250));
    }
}

#[test]
fn fd_detects_eigenvalue() {
    let cfg = BandConfig::default();
    let n = 128;
    let h = (cfg.theta2 - cfg.theta1) / n as f64;
    // lowest discrete eigenvalue of the zonal operator
    let d: Vec<f64> = (1..n)
        .map(|i| {
            let t = cfg.theta1 + i as f64 * h;
            ((t - 0.5 * h).cos() + (t + 0.5 * h).cos()) / (h * h * t.cos())
        })
        .collect();
    let e: Vec<f64> = (1..n - 1)
        .map(|i| {
            let t = cfg.theta1 + i as f64 * h;
            -(t + 0.5 * h).cos() / (h * h * (t.cos() * (t + h).cos()).sqrt())
        })
        .collect();
    let mu1 = SymTridiagonal::new(d, e).eigenvalue(0);
    let cfg = BandConfig {
        lambda: mu1,
        upsilon: 1.0,
        ..cfg
    };
    assert!(matches!(solve_fd(&cfg, n), Err(Error::NearEigenvalue { .. })));
}

#[test]
fn jet_profile_has_boundary_jets() {
    let p = solve_fd(&jet_scenario(), 2000).unwrap();
    let n = p.len();
    let jet = p.u_dimensional[0].abs().min(p.u_dimensional[n - 1].abs());
    let interior = p.u_dimensional[n / 4..3 * n / 4]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(jet >= 3.0 * interior, "jet {jet}, interior {interior}");
}

#[test]
fn regridding_agrees_at_second_order() {
    let cfg = BandConfig {
        lambda: -40.0,
        upsilon: 500.0,
        psi1: 1.0,
        psi2: 3.0,
        ..BandConfig::default()
    };
    let d1 = sup_difference(&solve_fd(&cfg, 100).unwrap(), &solve_fd(&cfg, 200).unwrap());
    let d2 = sup_difference(&solve_fd(&cfg, 200).unwrap(), &solve_fd(&cfg, 400).unwrap());
    assert!((d1 / d2 - 4.0).abs() < 0.3, "{d1} {d2}");
}

#[test]
fn picard_lambda0_is_one_application() {
    let cfg = lambda0();
    let form = ClosedForm::new(&cfg).unwrap();
    let errs: Vec<f64> = [256, 512]
        .iter()
        .map(|&n| {
            let (p, stats) = solve_picard(&cfg, n, 1e-10, 5).unwrap();
            assert_eq!(stats.iterations, 1);
            sup_error(&p, |t| form.eval(t)[0])
        })
        .collect();
    assert!(errs[1] < 1e-3, "{errs:?}");
    assert!((errs[0] / errs[1] - 4.0).abs() < 0.2, "{errs:?}");
}

#[test]
fn picard_matches_fd_under_contraction() {
    let cfg = BandConfig {
        lambda: 1.0,
        ..jet_scenario()
    };
    let n = 1024;
    let (pc, stats) = solve_picard(&cfg, n, 1e-10, 40).unwrap();
    let (pf, _) = solve_picard(&cfg, 2 * n, 1e-10, 40).unwrap();
    assert!(stats.iterations <= 40);
    let picard = richardson(&pc, &pf).unwrap();
    let fd = richardson(&solve_fd(&cfg, n).unwrap(), &solve_fd(&cfg, 2 * n).unwrap()).unwrap();
    let diff = sup_difference(&picard, &fd);
    assert!(diff <= 1e-8, "{diff}");
    for w in stats.increments.windows(2) {
        if w[0] > 1e-12 {
            assert!(w[1] / w[0] <= stats.contraction_bound, "{:?}", stats);
        }
    }
}

#[test]
fn picard_rejects_wide_bands() {
    let cfg = jet_scenario();
    assert!(matches!(
        solve_picard(&cfg, 64, 1e-10, 40),
        Err(Error::ContractionViolated { .. })
    ));
    let tight = BandConfig {
        lambda: 1.0,
        ..jet_scenario()
    };
    assert!(matches!(
        solve_picard(&tight, 64, 0.0, 3),
        Err(Error::MaxIterExceeded { .. })
    ));
}

#[test]
fn sl_expansion_matches_fd() {
    let cfg = BandConfig {
        lambda: -10.0,
        ..jet_scenario()
    };
    let sl = solve_sl_expansion(&cfg, 256).unwrap();
    let fd = solve_fd(&cfg, 256).unwrap();
    let diff = sl
        .psi
        .iter()
        .zip(&fd.psi)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff <= 1e-6, "{diff}");
}

#[test]
fn velocity_of_linear_and_sine() {
    let thetas: Vec<f64> = (0..=20).map(|i| -1.0 + 0.01 * i as f64).collect();
    let lin = ZonalProfile::with_velocity(
        thetas.clone(),
        thetas.iter().map(|t| 3.0 * t + 1.0).collect(),
        vec![0.0; 21],
        Method::FiniteDifference,
        0.1,
    );
    let v = velocity_profile(&lin).unwrap();
    assert!(v.u.iter().all(|u| (u + 3.0).abs() < 1e-10));
    assert!(v.u_dimensional.iter().all(|u| (u + 0.3).abs() < 1e-11));

    let mut errs = Vec::new();
    for n in [20usize, 40] {
        let ts: Vec<f64> = (0..=n).map(|i| -1.0 + 0.2 * i as f64 / n as f64).collect();
        let p = ZonalProfile::with_velocity(
            ts.clone(),
            ts.iter().map(|t| t.sin()).collect(),
            vec![0.0; n + 1],
            Method::FiniteDifference,
            1.0,
        );
        let v = velocity_profile(&p).unwrap();
        errs.push(ts.iter().zip(&v.u).fold(0.0f64, |m, (t, u)| m.max((u + t.cos()).abs())));
    }
    assert!(errs[0] / errs[1] > 14.0, "{errs:?}");

    let short = ZonalProfile::with_velocity(vec![0.0; 4], vec![0.0; 4], vec![0.0; 4], Method::Picard, 1.0);
    assert!(matches!(velocity_profile(&short), Err(Error::TooFewSamples(4))));
}

#[test]
fn fornberg_weights_on_uniform_grid() {
    let w = fornberg_first(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0]);
    let expected = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
    for (a, b) in w.iter().zip(expected) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn csv_roundtrip() {
    let p = solve_fd(&jet_scenario(), 64).unwrap();
    let mut buf = Vec::new();
    write_profile_csv(&p, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("theta_deg,psi,u_nondim,u_m_per_s\n"));
    let rows = read_profile_csv(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), p.len());
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.psi, p.psi[i]);
        assert_eq!(r.u_nondim, p.u[i]);
        assert_eq!(r.u_m_per_s, p.u_dimensional[i]);
    }
}

#[test]
fn svg_has_polyline() {
    let p = solve_fd(&jet_scenario(), 64).unwrap();
    let mut buf = Vec::new();
    write_profile_svg(&p, "test <profile>", &mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.contains("<polyline") && s.contains("&lt;profile&gt;") && s.ends_with("</svg>\n"));
}

#[test]
fn method_names_roundtrip() {
    for m in [
        Method::ClosedForm,
        Method::FiniteDifference,
        Method::Picard,
        Method::SlExpansion,
    ] {
        assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
    }
    assert!("spectral".parse::<Method>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hermite_interpolant_hits_nodes(k in 0usize..65) {
        let p = solve_fd(&jet_scenario(), 64).unwrap();
        let (psi, u) = p.eval(p.thetas[k]);
        prop_assert!((psi - p.psi[k]).abs() <= 1e-9 * p.psi[k].abs().max(1.0));
        prop_assert!((u - p.u[k]).abs() <= 1e-9 * p.u[k].abs().max(1.0));
    }

    #[test]
    fn fd_endpoints_are_exact(psi1 in -50.0f64..50.0, psi2 in -50.0f64..50.0, lambda in -500.0f64..0.0) {
        let cfg = BandConfig { psi1, psi2, lambda, upsilon: 100.0, ..BandConfig::default() };
        let p = solve_fd(&cfg, 32).unwrap();
        prop_assert_eq!(p.psi[0], psi1);
        prop_assert_eq!(p.psi[32], psi2);
    }
}
