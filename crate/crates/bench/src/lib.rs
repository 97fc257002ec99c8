//! Fixtures shared by the benchmarks in `benches/`.

use circumpolar_core::euler2d::init::{perturbed_zeta, planar_velocity, SmoothPerturbation, ZonalFields};
use circumpolar_core::euler2d::{Euler2d, SimState};
use circumpolar_core::zonal::solve;
use circumpolar_core::{AnnulusGrid, BandConfig, Method, ScalarField};

/// Evolution scenario with a slowly rotating planet and a sheared zonal jet.
pub fn scenario() -> BandConfig {
    BandConfig {
        omega: 10.0,
        upsilon: 4.0,
        psi1: 0.0,
        psi2: 0.6075339842539141,
        lambda: -10.0,
        ..BandConfig::default()
    }
}

/// Solver and 1%-perturbed zonal state on an `n x n` grid.
pub fn evolution_fixture(n: usize) -> (Euler2d, SimState) {
    let config = scenario();
    let grid = AnnulusGrid::new(config.theta1, config.theta2, n, n).expect("valid grid");
    let solver = Euler2d::new(config, grid.clone()).expect("valid solver");
    let profile = solve(&config, Method::FiniteDifference, 4000).expect("zonal profile");
    let zonal = ZonalFields::sample(&grid, &config, &profile);
    let pert = SmoothPerturbation::single(config.theta1, config.theta2, 3, 0.0, 0.01 * profile.max_speed())
        .expect("perturbation");
    let zeta = perturbed_zeta(&grid, &zonal, Some(&pert));
    let lambda = solver
        .harmonic
        .project(&planar_velocity(&grid, &zonal, Some(&pert)), &grid)
        .expect("projection");
    let state = solver.initial_state(zeta, lambda).expect("initial state");
    (solver, state)
}

/// Smooth right-hand side for Poisson benchmarks.
pub fn poisson_rhs(grid: &AnnulusGrid) -> ScalarField {
    ScalarField::from_fn(grid, |i, j| (grid.rho[i] * 7.0).sin() * (3.0 * grid.phi[j]).cos() + 1.0)
}
