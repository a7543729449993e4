use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum ChoreoError {
    #[error("squared separation must be positive, got {0:e}")]
    NonPositiveSeparation(f64),

    #[error("invalid force law: {0}")]
    InvalidForceLaw(String),

    #[error("invalid mass vector: {0}")]
    InvalidMasses(String),

    #[error("invalid space descriptor: {0}")]
    InvalidSpace(String),

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error("bodies {i} and {j} collide (squared separation {sep_sq:e})")]
    Collision { i: usize, j: usize, sep_sq: f64 },

    #[error("singular separation between bodies {i} and {j} (coincident or antipodal)")]
    SingularPair { i: usize, j: usize },

    #[error("body {i} is at a singular separation from the fixed center")]
    AtFixedCenter { i: usize },

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<ChoreoError>,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no rotation rate balances the configuration: {0}")]
    Infeasible(String),

    #[error("search did not converge: {0}")]
    NoConvergence(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

impl ChoreoError {
    /// Attaches the time at which the error occurred.
    pub fn at_time(self, t: f64) -> ChoreoError {
        match self {
            already @ ChoreoError::AtTime { .. } => already,
            other => ChoreoError::AtTime { t, source: Box::new(other) },
        }
    }
}

pub type Result<T> = std::result::Result<T, ChoreoError>;
