use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Returned when a state's population is not contained by its truncation.
    #[error(
        "cutoff {cutoff} too small: tail mass {tail:.3e} exceeds {limit:.1e} \
         (need a cutoff of at least {required})"
    )]
    CutoffTooSmall {
        cutoff: usize,
        required: usize,
        tail: f64,
        limit: f64,
    },

    /// Returned when an operation produces (or is asked to produce) a zero vector.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("rail index {rail} out of range for {count} rails")]
    RailOutOfRange { rail: usize, count: usize },

    /// Returned when the heterodyne outcome lattice misses too much probability.
    #[error(
        "outcome lattice covers {coverage:.9} of the distribution (< {required:.9}); \
         a grid radius of about {suggested_radius:.2} is needed"
    )]
    GridCoverage {
        coverage: f64,
        required: f64,
        suggested_radius: f64,
    },

    #[error("impossible outcome: residue {residue} mod {modulus} has zero probability")]
    ImpossibleOutcome { residue: usize, modulus: usize },

    #[error("phase of the zero outcome is undefined")]
    UndefinedPhase,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
