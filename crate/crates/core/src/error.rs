use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("stereographic origin has no longitude")]
    OriginUndefined,

    #[error("field shape {got:?} does not match grid shape {expected:?}")]
    GridMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("eigenvalue {index} failed to converge: matrix {matrix}, shooting {shooting}")]
    ConvergenceFailure { index: usize, matrix: f64, shooting: f64 },

    #[error("unsupported boundary condition: {0}")]
    Unsupported(String),

    #[error("function has zero weighted norm")]
    ZeroFunction,

    #[error("mu = {mu} is resonant with eigenvalue {index} ({eigenvalue})")]
    ResonantEigenvalue { mu: f64, index: usize, eigenvalue: f64 },

    #[error("closed form requires lambda = 0, got {0}")]
    LambdaNotZero(f64),

    #[error("lambda = {lambda} is too close to eigenvalue {eigenvalue} of the zonal operator")]
    NearEigenvalue { lambda: f64, eigenvalue: f64 },

    #[error("contraction condition violated: r2/r1 = {ratio} exceeds {limit}")]
    ContractionViolated { ratio: f64, limit: f64 },

    #[error("no convergence after {iterations} iterations (last increment {increment:e})")]
    MaxIterExceeded { iterations: usize, increment: f64 },

    #[error("need at least 5 samples, got {0}")]
    TooFewSamples(usize),

    #[error("singular radial system for azimuthal mode {0}")]
    SingularMode(usize),

    #[error("harmonic normalization {0:e} is degenerate")]
    DegenerateNormalization(f64),

    #[error("Courant number {courant:.3} exceeds limit {limit}; try dt <= {suggested_dt:e}")]
    CflViolation {
        courant: f64,
        limit: f64,
        suggested_dt: f64,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of numerical routines (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ConvergenceFailure { .. }
                | Error::ResonantEigenvalue { .. }
                | Error::NearEigenvalue { .. }
                | Error::ContractionViolated { .. }
                | Error::MaxIterExceeded { .. }
                | Error::SingularMode(_)
                | Error::DegenerateNormalization(_)
                | Error::CflViolation { .. }
                | Error::NonFinite(_)
        )
    }

    /// True for filesystem and serialization failures.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Csv(_) | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
