use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("max_mode mismatch: {left} vs {right}")]
    ModeMismatch { left: usize, right: usize },

    #[error("expected {expected} coefficients for max_mode {max_mode}, got {found}")]
    CoefficientCount {
        max_mode: usize,
        expected: usize,
        found: usize,
    },

    #[error("field is not real-valued (conjugate-symmetry defect {defect:e})")]
    NotRealValued { defect: f64 },

    #[error("field is not mean-zero (|coeff(0)| = {mean:e})")]
    NotMeanZero { mean: f64 },

    #[error("invalid band [{lo}, {hi}] for max_mode {max_mode}: {reason}")]
    InvalidBand {
        lo: usize,
        hi: usize,
        max_mode: usize,
        reason: &'static str,
    },

    #[error("only {found} nonzero shells in band, need at least 3")]
    TooFewShells { found: usize },

    #[error("inputs are identical; ratio undefined")]
    IdenticalInputs,

    #[error("no admissible frequency tuple within cutoff {cutoff}")]
    EmptyAdmissibleSet { cutoff: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("blow-up detected at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },

    #[error("need at least {needed} saved frames, found {found}")]
    TooFewFrames { needed: usize, found: usize },

    #[error("{excluded} of {total} runs excluded (limit 20%)")]
    TooManyExcluded { excluded: usize, total: usize },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
