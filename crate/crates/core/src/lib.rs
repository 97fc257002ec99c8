//! Numerical core for circumpolar zonal flows on a rotating sphere.
//!
//! * [`geometry`]: stereographic projection, conformal factors, band quadrature.
//! * [`sturm_liouville`]: eigenpairs and eigenfunction expansions.
//! * [`zonal`]: zonal steady states by closed form, finite differences, Picard
//!   iteration and eigenfunction expansion.
//! * [`euler2d`]: vorticity transport on the projected annulus.
//! * [`diagnostics`]: conserved quantities, Lyapunov functional, stability identity.

// Guards of the form `!(x > 0.0)` reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod euler2d;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod sturm_liouville;
pub mod zonal;

pub use error::{Error, Result};
pub use geometry::{BandConfig, PlanePoint, SpherePoint};
pub use grid::{AnnulusGrid, ScalarField, VectorField};
pub use sturm_liouville::{SLProblem, SLSpectrum};

pub use diagnostics::{DiagnosticRecord, FlowFields};
pub use euler2d::{Euler2d, Flow, SimState};
pub use zonal::{Method, ZonalProfile};
