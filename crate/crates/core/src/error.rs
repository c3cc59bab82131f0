use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("confluent undefined for v = w")]
    ConfluentUndefined,

    #[error("prefix too short to resolve confluent (depth {depth}, need more than {needed})")]
    PrefixTooShort { depth: usize, needed: usize },

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("invalid walk: {0}")]
    InvalidWalk(String),

    #[error("radial projection requires isotropy")]
    NotIsotropic,

    #[error("nearest-neighbour support required: {0}")]
    NotNearestNeighbour(String),

    #[error("state budget exceeded at ball radius {radius} ({states} states, limit {limit})")]
    Budget {
        radius: usize,
        states: usize,
        limit: usize,
    },

    #[error("degenerate design matrix in local-limit fit")]
    DegenerateFit,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("f is not t-harmonic at {at}: relative residual {residual:e}")]
    NotHarmonic { at: String, residual: f64 },

    #[error("not a square-root singularity at requested precision (fitted exponent {exponent:.4})")]
    NotSquareRoot { exponent: f64 },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical failures (budgets, non-convergence) as opposed to bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::Budget { .. }
                | Error::Convergence(_)
                | Error::NotSquareRoot { .. }
                | Error::DegenerateFit
                | Error::NotHarmonic { .. }
        )
    }
}
