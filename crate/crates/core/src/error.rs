use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}: must lie in 2..={max}", max = crate::qcore::MAX_DIMENSION)]
    InvalidDimension(usize),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("matrix is not Hermitian: max |H - H^dagger| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary: max |U^dagger U - I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("eigenvectors are not orthonormal: max deviation {deviation:.3e}")]
    NotOrthonormal { deviation: f64 },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid measurement chain: {0}")]
    InvalidChain(String),

    #[error("index {index} out of range for step {step} (dimension {dimension})")]
    IndexOutOfRange {
        step: usize,
        index: usize,
        dimension: usize,
    },

    #[error("middle observable has degenerate eigenvalues; post-selected distribution requires distinct values")]
    DegenerateObservable,

    #[error("post-selection impossible: denominator = {denominator:.3e}")]
    PostselectionImpossible { denominator: f64 },

    #[error("invalid pointer configuration: {0}")]
    InvalidPointer(String),

    #[error("invalid interval partition: {0}")]
    InvalidPartition(String),

    #[error("no trials recorded")]
    NoTrials,

    #[error(
        "rank-deficient design matrix: smallest singular value {sigma_min:.3e} (largest {sigma_max:.3e})"
    )]
    RankDeficient { sigma_min: f64, sigma_max: f64 },

    #[error("design needs at least {needed} rows, got {rows}")]
    Underdetermined { needed: usize, rows: usize },

    #[error("reference amplitude vanishes; re-reference to index {suggested} (largest diagonal)")]
    ReferenceVanishes { suggested: usize },

    #[error("Gram matrix violates Cauchy-Schwarz at ({row}, {col}) by {excess:.3e}")]
    InfeasibleGram { row: usize, col: usize, excess: f64 },

    #[error("weak value undefined: sum of path amplitudes is {magnitude:.3e}")]
    WeakValueUndefined { magnitude: f64 },

    #[error("pointer width {delta_f} is below the weak-regime threshold {threshold}")]
    NotWeakRegime { delta_f: f64, threshold: f64 },

    #[error(
        "observable does not commute with the measured one (eigenbasis deviation {deviation:.3e}); \
         its density depends on the unknown cross terms <d|U|c_j'><c_j|U|b>, j != j'"
    )]
    NonCommuting { deviation: f64 },

    #[error("division by the final-state component: <c_{index}|d(t')> = {magnitude:.3e}")]
    VanishingFinalComponent { index: usize, magnitude: f64 },

    #[error("config error at line {line}, field `{field}`: {message}")]
    Config {
        line: usize,
        field: String,
        message: String,
    },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidDimension(_) => "invalid_dimension",
            Error::ZeroNorm => "zero_norm",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::NotUnitary { .. } => "not_unitary",
            Error::NotOrthonormal { .. } => "not_orthonormal",
            Error::InvalidMixture(_) => "invalid_mixture",
            Error::InvalidChain(_) => "invalid_chain",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::DegenerateObservable => "degenerate_observable",
            Error::PostselectionImpossible { .. } => "postselection_impossible",
            Error::InvalidPointer(_) => "invalid_pointer",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::NoTrials => "no_trials",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Underdetermined { .. } => "underdetermined",
            Error::ReferenceVanishes { .. } => "reference_vanishes",
            Error::InfeasibleGram { .. } => "infeasible_gram",
            Error::WeakValueUndefined { .. } => "weak_value_undefined",
            Error::NotWeakRegime { .. } => "not_weak_regime",
            Error::NonCommuting { .. } => "non_commuting",
            Error::VanishingFinalComponent { .. } => "vanishing_final_component",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// Process exit code: 2 config, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
            _ => 3,
        }
    }
}
