use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension {dim} exceeds the configured cap of {cap} (2^{n_spins} spins x {boson_levels} boson levels)")]
    DimensionCap {
        dim: usize,
        cap: usize,
        n_spins: usize,
        boson_levels: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max |A - A^dagger| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("eigensolver failed on a {dim}x{dim} matrix: {reason}")]
    Eigensolver { dim: usize, reason: String },

    #[error("density matrix has eigenvalue {value:e} below the roundoff floor")]
    NegativePopulation { value: f64 },

    #[error("observable variance vanishes ({variance:e}) while its susceptibility does not ({susceptibility:e})")]
    DegenerateObservable { variance: f64, susceptibility: f64 },

    #[error("quadrature did not converge: estimate {value:e}, error estimate {error:e} after {evaluations} evaluations")]
    Quadrature {
        value: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DimensionCap { .. } => "dimension_cap",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::Eigensolver { .. } => "eigensolver",
            Error::NegativePopulation { .. } => "negative_population",
            Error::DegenerateObservable { .. } => "degenerate_observable",
            Error::Quadrature { .. } => "quadrature",
            Error::Unknown { .. } => "unknown_name",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
