use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported Dyson index {0}; samplers exist only for beta 1 and 2")]
    UnsupportedBeta(f64),
    #[error("Dyson index must be a finite value >= 1, got {0}")]
    InvalidBeta(f64),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("rank {rank} outside 1..={max}")]
    InvalidRank { rank: usize, max: usize },
    #[error("expected {expected} eigenvalues, got {got}")]
    SpectrumLength { expected: usize, got: usize },
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("bond {bond} outside 1..={max}")]
    BondOutOfRange { bond: usize, max: usize },
    #[error("matrix order {dim} exceeds the dense cap {cap}")]
    DimensionCap { dim: u128, cap: usize },
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("eigensolver did not converge")]
    EigenFailure,
    #[error("closed-form p is stated for odd N; N = {0} needs the gap-ratio path")]
    EvenChain(usize),
    #[error("expected {expected} rotation factors, got {got}")]
    FactorCount { expected: usize, got: usize },
    #[error("degenerate denominator: classical and isotropic kurtoses coincide")]
    DegenerateKurtosis,
    #[error("bin edges differ between densities")]
    MismatchedEdges,
    #[error("invalid bins: {0}")]
    InvalidBins(String),
    #[error("empty measure")]
    EmptyMeasure,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("cross-sum of {0} support points exceeds the exact-mode limit")]
    CrossSumTooLarge(u128),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("{0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
