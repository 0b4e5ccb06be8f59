use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the estimators and the ingestion layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("grid resolution must be at least 2, got {0}")]
    InvalidResolution(usize),

    #[error("resolution mismatch: expected {expected}, got {actual}")]
    ResolutionMismatch { expected: usize, actual: usize },

    #[error("correlation {0} outside [-1, 1]")]
    InvalidCorrelation(f64),

    #[error("copula density is degenerate at correlation {0}; use the cumulative copula")]
    DegenerateCorrelation(f64),

    #[error("asset index {index} out of range for {len} assets")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("pair needs two distinct assets, got ({0}, {0})")]
    SameAsset(usize),

    #[error("need at least {required} assets, got {actual}")]
    TooFewAssets { required: usize, actual: usize },

    #[error("need at least {required} observations, got {actual}")]
    TooFewObservations { required: usize, actual: usize },

    #[error("asset {asset} has zero variance")]
    ZeroVariance { asset: String },

    #[error("correlation matrix not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("correlation matrix invalid: {0}")]
    InvalidCorrelationMatrix(String),

    #[error("pair count mismatch: grid averages {grid} pairs, correlation matrix has {matrix}")]
    PairCountMismatch { grid: usize, matrix: usize },

    #[error("return interval of {interval} min does not fit a {session}-min session")]
    InvalidInterval { interval: u32, session: u32 },

    #[error("no complete return intervals in the panel")]
    NoReturns,

    #[error("window of {window_days} trading days exceeds the {available} available")]
    WindowTooLong {
        window_days: usize,
        available: usize,
    },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("equicorrelation {c} infeasible for {assets} assets (needs c >= {bound})")]
    InfeasibleEquicorrelation { c: f64, assets: usize, bound: f64 },

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("calendar line {line}: {message}")]
    Calendar { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::OutOfRange { name, value, range }
    }
}
